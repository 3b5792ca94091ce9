"""
diffprox Collision Application
Differentiable collision detection between capsules and padded polygons:
- QP data for each pair of primitives
- Proximity value, closest points and surface points
- Pose Jacobians of the proximity value
- Scene files and the proximity / jacobians / checkgrad commands
"""

"""
diffprox Geometry Application
Rigid-body poses, quaternion rotations and the two shape primitives:
- Capsules (a segment padded by a radius)
- Padded polygons (a planar convex polygon padded by a radius)
"""

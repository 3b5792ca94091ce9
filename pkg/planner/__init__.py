"""
diffprox Planner Application
Collision-aware trajectory optimization for a kinematic car:
- Car dynamics, RK4 integration and its Jacobians
- Penalty-based projected gradient planner using proximity Jacobians
- Plan configuration files and the plan command
"""

"""
diffprox QP Application
Small dense inequality-constrained quadratic programs:
- Problem data, solutions and KKT residuals
- A primal-dual interior-point solver (Mehrotra predictor-corrector)
- A closed-form active-set solver for the two-variable unit box
- Implicit differentiation of the solution map
"""

"""
Test Suite for QP App
Contains unit tests for:
- Problem data validation and KKT residuals
- Cholesky helpers and the interior-point Newton system
- The interior-point and two-variable active-set solvers
- Gradients of the backward pass
"""

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings

from core.exceptions import (
    DegenerateProblemError,
    FactorizationError,
    NonConvergenceError,
    NondifferentiablePointError,
)

from .active_set import BOX_G, BOX_H, active_set_2d, box_qp, recover_duals, solve_box_qp
from .backward import qp_backward
from .interior_point import cholesky_factor, cholesky_solve, pdip_kkt_solve, pdip_solve
from .types import QPData, QPSolution, kkt_error, kkt_residuals


def random_spd(rng, n, shift=0.5):
    A = rng.normal(size=(n, n))
    return A @ A.T + shift * np.eye(n)


def complementary_qp(rng, n=3, l=6, active=(0, 1)):
    """
    QP with a known strictly complementary solution

    Returns:
        tuple: (data, x, lam)
    """
    P = random_spd(rng, n)
    G = rng.normal(size=(l, n))
    x = rng.normal(size=n)
    lam = np.zeros(l)
    s = rng.uniform(0.5, 1.5, l)
    for j in active:
        lam[j] = rng.uniform(0.5, 1.5)
        s[j] = 0.0
    h = G @ x + s
    c = -P @ x - G.T @ lam
    return QPData(P=P, c=c, G=G, h=h), x, lam


class QPDataTest(SimpleTestCase):
    """Test cases for QP data validation"""

    def test_shapes_checked(self):
        """Test mismatched dimensions are rejected"""
        with self.assertRaises(ValidationError):
            QPData(P=np.eye(2), c=np.zeros(3), G=np.eye(3), h=np.zeros(3))
        with self.assertRaises(ValidationError):
            QPData(P=np.eye(2), c=np.zeros(2), G=np.eye(2), h=np.zeros(3))

    def test_asymmetric_rejected(self):
        """Test P must be symmetric"""
        with self.assertRaises(ValidationError):
            QPData(P=[[1.0, 0.5], [0.0, 1.0]], c=[0, 0], G=BOX_G, h=BOX_H)

    def test_non_finite_rejected(self):
        """Test NaN data is rejected"""
        with self.assertRaises(ValidationError):
            QPData(P=np.eye(2), c=[np.nan, 0.0], G=BOX_G, h=BOX_H)

    def test_objective(self):
        """Test 1/2 x'Px + c'x"""
        data = box_qp(np.diag([2.0, 4.0]), [1.0, -1.0])
        self.assertEqual(float(data.objective([1.0, 1.0])), 3.0)

    def test_kkt_residuals_at_solution(self):
        """Test residuals vanish at a hand-solved point"""
        data = box_qp(np.eye(2), [-2.0, -0.5])
        sol = QPSolution(
            x=np.array([1.0, 0.5]),
            s=np.array([0.0, 0.5, 1.0, 0.5]),
            lam=np.array([1.0, 0.0, 0.0, 0.0]),
            iterations=0,
            kkt_residual=0.0,
        )
        r_stat, r_comp, r_prim = kkt_residuals(data, sol)
        np.testing.assert_array_equal(r_stat, np.zeros(2))
        np.testing.assert_array_equal(r_comp, np.zeros(4))
        np.testing.assert_array_equal(r_prim, np.zeros(4))
        self.assertEqual(sol.mu, 0.0)


class CholeskyTest(SimpleTestCase):
    """Test cases for the Cholesky helpers"""

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_solve(self):
        """Test A X = B for several right-hand sides"""
        A = random_spd(self.rng, 5)
        B = self.rng.normal(size=(5, 3))
        np.testing.assert_allclose(A @ cholesky_solve(A, B), B, atol=1e-10)

    def test_factor_matches_numpy(self):
        """Test the lower factor equals numpy's"""
        A = random_spd(self.rng, 4)
        np.testing.assert_allclose(np.tril(cholesky_factor(A).c), np.linalg.cholesky(A), atol=1e-12)

    def test_indefinite_matrix(self):
        """Test a negative pivot raises with its index"""
        A = np.diag([1.0, 2.0, -1.0])
        with self.assertRaises(FactorizationError) as context:
            cholesky_factor(A)
        self.assertEqual(context.exception.pivot_index, 2)

    def test_tiny_pivot(self):
        """Test pivots below the floor are rejected"""
        with self.assertRaises(FactorizationError):
            cholesky_factor(np.diag([1.0, 1e-20]))


class NewtonSystemTest(SimpleTestCase):
    """Test cases for the reduced interior-point Newton solve"""

    def setUp(self):
        rng = np.random.default_rng(1)
        self.n, self.l = 3, 6
        self.P = random_spd(rng, self.n)
        self.G = rng.normal(size=(self.l, self.n))
        self.lam = rng.uniform(0.1, 2.0, self.l)
        self.s = rng.uniform(0.1, 2.0, self.l)
        self.v1 = rng.normal(size=self.n)
        self.v2 = rng.normal(size=self.l)
        self.v3 = rng.normal(size=self.l)

    def test_matches_dense_block_solve(self):
        """Test the eliminated solve against the full block system"""
        n, l = self.n, self.l
        K = np.zeros((n + 2 * l, n + 2 * l))
        K[:n, :n] = self.P
        K[:n, n + l:] = self.G.T
        K[n:n + l, n:n + l] = np.diag(self.lam)
        K[n:n + l, n + l:] = np.diag(self.s)
        K[n + l:, :n] = self.G
        K[n + l:, n:n + l] = np.eye(l)
        expected = np.linalg.solve(K, np.concatenate([self.v1, self.v2, self.v3]))

        dx, ds, dlam, _ = pdip_kkt_solve(self.P, self.G, self.lam, self.s, self.v1, self.v2, self.v3)
        np.testing.assert_allclose(np.concatenate([dx, ds, dlam]), expected, atol=1e-8)

    def test_cached_factor_is_identical(self):
        """Test reusing the factor gives bitwise the same answer"""
        fresh = pdip_kkt_solve(self.P, self.G, self.lam, self.s, self.v1, self.v2, self.v3)
        cached = pdip_kkt_solve(
            self.P, self.G, self.lam, self.s, self.v1, self.v2, self.v3, cached_factor=fresh[3]
        )
        for a, b in zip(fresh[:3], cached[:3]):
            np.testing.assert_array_equal(a, b)


class InteriorPointTest(SimpleTestCase):
    """Test cases for pdip_solve"""

    def setUp(self):
        self.rng = np.random.default_rng(2)

    def test_random_problems_converge(self):
        """Test KKT error at or below 1e-10 on random feasible QPs"""
        for _ in range(50):
            data, x, lam = complementary_qp(self.rng, n=4, l=8, active=(0, 3))
            sol = pdip_solve(data)
            self.assertTrue(sol.converged)
            self.assertLessEqual(kkt_error(data, sol), 1e-10)
            np.testing.assert_allclose(sol.x, x, atol=1e-8)
            np.testing.assert_allclose(sol.lam, lam, atol=1e-8)

    def test_polish_identifies_active_set(self):
        """Test polished solutions have exact zero slacks on the active set"""
        data, _, _ = complementary_qp(self.rng)
        sol = pdip_solve(data, polish=True)
        self.assertEqual(sol.solver, 'pdip+polish')
        np.testing.assert_array_equal(sol.s[:2], [0.0, 0.0])

    def test_unpolished(self):
        """Test the interior iterate is kept when polishing is off"""
        data, x, _ = complementary_qp(self.rng)
        sol = pdip_solve(data, polish=False)
        self.assertEqual(sol.solver, 'pdip')
        self.assertTrue(np.all(sol.s > 0.0))
        np.testing.assert_allclose(sol.x, x, atol=1e-8)

    def test_agrees_with_active_set(self):
        """Test both solvers find the same box QP minimizer"""
        for _ in range(50):
            P = random_spd(self.rng, 2, shift=0.1)
            c = self.rng.normal(scale=2.0, size=2)
            x_box, _ = active_set_2d(P, c)
            np.testing.assert_allclose(pdip_solve(box_qp(P, c)).x, x_box, atol=1e-8)

    def test_iteration_cap(self):
        """Test the cap raises with the best iterate"""
        data, _, _ = complementary_qp(self.rng)
        with self.assertRaises(NonConvergenceError) as context:
            pdip_solve(data, max_iter=1)
        self.assertFalse(context.exception.best.converged)
        self.assertEqual(context.exception.iterations, 1)

    @override_settings(DIFFPROX_TOL=1e-6)
    def test_tolerance_from_settings(self):
        """Test the default tolerance comes from DIFFPROX_TOL"""
        data, _, _ = complementary_qp(self.rng)
        loose = pdip_solve(data, polish=False)
        tight = pdip_solve(data, tol=1e-10, polish=False)
        self.assertLessEqual(loose.kkt_residual, 1e-6)
        self.assertLessEqual(loose.iterations, tight.iterations)


class ActiveSetTest(SimpleTestCase):
    """Test cases for the two-variable box solver"""

    def test_interior_minimizer(self):
        """Test an interior minimizer has zero multipliers"""
        x, lam = active_set_2d(np.eye(2), [-0.3, -0.6])
        np.testing.assert_allclose(x, [0.3, 0.6], atol=1e-15)
        np.testing.assert_array_equal(lam, np.zeros(4))

    def test_corner(self):
        """Test a minimizer beyond both upper bounds lands on (1, 1)"""
        x, lam = active_set_2d(np.eye(2), [-2.0, -3.0])
        np.testing.assert_array_equal(x, [1.0, 1.0])
        np.testing.assert_allclose(lam, [1.0, 2.0, 0.0, 0.0])

    def test_edge(self):
        """Test an edge minimizer with one lower bound active"""
        x, lam = active_set_2d(np.array([[2.0, 0.5], [0.5, 1.0]]), [1.0, -0.5])
        np.testing.assert_allclose(x, [0.0, 0.5], atol=1e-15)
        np.testing.assert_allclose(lam, [0.0, 0.0, 1.25, 0.0], atol=1e-15)

    def test_singular_cost(self):
        """Test a singular P raises DegenerateProblemError"""
        with self.assertRaises(DegenerateProblemError):
            active_set_2d([[1.0, 1.0], [1.0, 1.0]], [0.0, 0.0])

    def test_dual_dead_zone(self):
        """Test tiny dual residuals give zero multipliers"""
        lam = recover_duals([0.5, 0.5], np.eye(2), [-0.5 - 1e-13, -0.5 + 1e-13])
        np.testing.assert_array_equal(lam, np.zeros(4))

    def test_solution_package(self):
        """Test solve_box_qp fills slacks and the solver name"""
        sol = solve_box_qp(box_qp(np.eye(2), [-2.0, -0.5]))
        self.assertEqual(sol.solver, 'active_set')
        self.assertEqual(sol.iterations, 0)
        np.testing.assert_allclose(sol.s, [0.0, 0.5, 1.0, 0.5])
        self.assertLessEqual(sol.kkt_residual, 1e-15)


class BackwardTest(SimpleTestCase):
    """Test cases for qp_backward"""

    def setUp(self):
        self.rng = np.random.default_rng(5)
        self.data, _, _ = complementary_qp(self.rng)
        self.sol = pdip_solve(self.data)
        self.w = self.rng.normal(size=self.data.n)

    def loss(self, data):
        return self.w @ pdip_solve(data).x

    def test_zero_loss_gradient(self):
        """Test dl/dx = 0 gives zero gradients"""
        grads = qp_backward(self.data, self.sol, np.zeros(self.data.n))
        for array in (grads.dP, grads.dG, grads.dc, grads.dh):
            np.testing.assert_array_equal(array, 0.0)

    def test_linear_in_loss_gradient(self):
        """Test doubling dl/dx doubles every gradient"""
        single = qp_backward(self.data, self.sol, self.w)
        double = qp_backward(self.data, self.sol, 2.0 * self.w)
        for name in ('dP', 'dG', 'dc', 'dh'):
            np.testing.assert_allclose(getattr(double, name), 2.0 * getattr(single, name), rtol=1e-14, atol=0)

    def test_symmetric_dP(self):
        """Test dP is returned symmetric"""
        grads = qp_backward(self.data, self.sol, self.w)
        np.testing.assert_array_equal(grads.dP, grads.dP.T)

    def test_inactive_constraints(self):
        """Test dh vanishes on inactive constraints"""
        grads = qp_backward(self.data, self.sol, self.w)
        np.testing.assert_array_equal(grads.dh[2:], 0.0)
        self.assertTrue(np.all(grads.dG[2:] == 0.0))

    def test_finite_differences(self):
        """Test dc, dh, dG and symmetric dP against central differences"""
        grads = qp_backward(self.data, self.sol, self.w)
        P, c, G, h = self.data.P, self.data.c, self.data.G, self.data.h
        step = 1e-6

        def central(make):
            return (self.loss(make(step)) - self.loss(make(-step))) / (2 * step)

        for i in range(c.shape[0]):
            e = np.eye(c.shape[0])[i]
            fd = central(lambda t: QPData(P=P, c=c + t * e, G=G, h=h))
            self.assertAlmostEqual(grads.dc[i], fd, delta=1e-5)
        for j in range(h.shape[0]):
            e = np.eye(h.shape[0])[j]
            fd = central(lambda t: QPData(P=P, c=c, G=G, h=h + t * e))
            self.assertAlmostEqual(grads.dh[j], fd, delta=1e-5)
        for j, k in ((0, 0), (1, 2), (4, 1)):
            E = np.zeros_like(G)
            E[j, k] = 1.0
            fd = central(lambda t: QPData(P=P, c=c, G=G + t * E, h=h))
            self.assertAlmostEqual(grads.dG[j, k], fd, delta=1e-5)
        for j, k in ((0, 0), (0, 2), (1, 2)):
            E = np.zeros_like(P)
            E[j, k] = E[k, j] = 1.0
            fd = central(lambda t: QPData(P=P + t * E, c=c, G=G, h=h))
            expected = grads.dP[j, k] + (grads.dP[k, j] if j != k else 0.0)
            self.assertAlmostEqual(expected, fd, delta=1e-5)

    def test_weakly_active(self):
        """Test a constraint with lam = s = 0 raises with its index"""
        data = box_qp(np.eye(2), [-1.0, -0.5])
        sol = solve_box_qp(data)
        with self.assertRaises(NondifferentiablePointError) as context:
            qp_backward(data, sol, [1.0, 1.0])
        self.assertEqual(context.exception.index, 0)

    def test_rejects_non_solution(self):
        """Test a point violating KKT is rejected"""
        sol = QPSolution(
            x=np.zeros(self.data.n),
            s=np.ones(self.data.l),
            lam=np.ones(self.data.l),
            iterations=0,
            kkt_residual=0.0,
        )
        with self.assertRaises(ValidationError):
            qp_backward(self.data, sol, self.w)

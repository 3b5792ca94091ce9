"""
Primal-dual interior-point solver with a Mehrotra predictor-corrector.

Each iteration solves two Newton systems with the same coefficient matrix

    [ P   0     G' ] [dx  ]   [v1]
    [ 0   D(l)  D(s)] [ds  ] = [v2]
    [ G   I     0  ] [dlam]   [v3]

by eliminating ds and dlam and factoring P + G'WG, W = D(lam/s), once.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from core.conf import get_setting
from core.exceptions import FactorizationError, NonConvergenceError

from .types import QPSolution, kkt_error, kkt_residuals

logger = logging.getLogger(__name__)

# Back-substitution residual that triggers one refinement step
REFINE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular Cholesky factor in scipy's (c, lower) layout."""

    c: np.ndarray

    def solve(self, B):
        return scipy.linalg.cho_solve((self.c, True), B, check_finite=False)


def cholesky_factor(A):
    """
    Factor a symmetric positive definite matrix

    Raises:
        FactorizationError: If a pivot is non-positive or below the pivot floor
    """
    A = np.asarray(A, dtype=float)
    c, info = lapack.dpotrf(A, lower=1, clean=1)
    if info > 0:
        raise FactorizationError(info - 1)
    if info < 0:
        raise ValueError(f'dpotrf rejected argument {-info}')

    pivots = np.diag(c) ** 2
    floor = get_setting('DIFFPROX_PIVOT_TOL', 1e-14)
    if np.any(pivots < floor):
        index = int(np.argmin(pivots))
        raise FactorizationError(index, float(pivots[index]))
    return CholeskyFactor(c)


def cholesky_solve(A, B, factor=None):
    """
    Solve A X = B for symmetric positive definite A

    Args:
        A: (n, n) SPD matrix
        B: (n,) or (n, k) right-hand sides
        factor: Optional CholeskyFactor of A to reuse

    Returns:
        np.ndarray: X with the shape of B
    """
    if factor is None:
        factor = cholesky_factor(A)
    return factor.solve(np.asarray(B, dtype=float))


def _block_residual(P, G, lam, s, dx, ds, dlam, v1, v2, v3):
    return (
        v1 - (P @ dx + G.T @ dlam),
        v2 - (lam * ds + s * dlam),
        v3 - (G @ dx + ds),
    )


def _back_substitute(G, lam, s, W, factor, v1, v2, v3):
    dx = factor.solve(v1 + G.T @ (W * v3 - v2 / s))
    ds = v3 - G @ dx
    dlam = (v2 - lam * ds) / s
    return dx, ds, dlam


def pdip_kkt_solve(P, G, lam, s, v1, v2, v3, cached_factor=None):
    """
    Solve the interior-point Newton system for one right-hand side

    The caller passes the right-hand side exactly as it appears in the
    system above (negated residuals for the affine step).

    Args:
        P, G: QP data
        lam, s: Current dual and slack iterates, both > 0
        v1, v2, v3: Right-hand side blocks (n, l, l)
        cached_factor: Factor returned by an earlier call at the same
            (P, G, lam, s); no factorization is performed when given

    Returns:
        tuple: (dx, ds, dlam, factor)

    Raises:
        FactorizationError: If P + G'WG is not numerically positive definite
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    lam = np.asarray(lam, dtype=float)
    s = np.asarray(s, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    v3 = np.asarray(v3, dtype=float)
    W = lam / s

    factor = cached_factor
    if factor is None:
        eps = get_setting('DIFFPROX_KKT_REGULARIZATION', 1e-10)
        M = P + G.T @ (W[:, None] * G) + eps * np.eye(P.shape[0])
        factor = cholesky_factor(M)

    dx, ds, dlam = _back_substitute(G, lam, s, W, factor, v1, v2, v3)

    # One step of iterative refinement against the unregularized system
    scale = 1.0 + max(np.max(np.abs(v1)), np.max(np.abs(v2)), np.max(np.abs(v3)))
    r1, r2, r3 = _block_residual(P, G, lam, s, dx, ds, dlam, v1, v2, v3)
    residual = max(np.max(np.abs(r1)), np.max(np.abs(r2)), np.max(np.abs(r3)))
    if residual > REFINE_TOL * scale:
        ex, es, elam = _back_substitute(G, lam, s, W, factor, r1, r2, r3)
        dx, ds, dlam = dx + ex, ds + es, dlam + elam

    return dx, ds, dlam, factor


def _max_step(v, dv):
    """Largest alpha with v + alpha dv >= 0 (inf if dv >= 0)."""
    shrinking = dv < 0.0
    if not np.any(shrinking):
        return np.inf
    return float(np.min(-v[shrinking] / dv[shrinking]))


def _polish(data, sol, tol):
    """
    Re-solve on the identified active set

    Constraints with lam_j > s_j are treated as equalities and the
    resulting KKT system is solved directly. The polished point replaces
    the interior-point iterate only if it is primal and dual feasible and
    does not increase the KKT error.
    """
    P, c, G, h = data.P, data.c, data.G, data.h
    n = data.n
    active = np.flatnonzero(sol.lam > sol.s)
    k = active.shape[0]
    if k > n:
        return None

    G_A = G[active]
    K = np.zeros((n + k, n + k))
    K[:n, :n] = P
    K[:n, n:] = G_A.T
    K[n:, :n] = G_A
    if np.linalg.cond(K) > 1e12:
        return None

    z = np.linalg.solve(K, np.concatenate([-c, h[active]]))
    x, lam_A = z[:n], z[n:]

    slack = h - G @ x
    if np.any(lam_A < -tol) or np.any(slack < -tol):
        return None

    lam = np.zeros(data.l)
    lam[active] = np.maximum(lam_A, 0.0)
    s = np.maximum(slack, 0.0)
    s[active] = 0.0

    candidate = QPSolution(
        x=x, s=s, lam=lam,
        iterations=sol.iterations,
        kkt_residual=0.0,
        solver='pdip+polish',
    )
    error = kkt_error(data, candidate)
    if error > max(sol.kkt_residual, tol):
        return None
    return QPSolution(
        x=x, s=s, lam=lam,
        iterations=sol.iterations,
        kkt_residual=error,
        solver='pdip+polish',
    )


def pdip_solve(data, tol=None, max_iter=None, polish=None):
    """
    Solve a QP with the primal-dual interior-point method

    Args:
        data: QPData
        tol: Termination tolerance on max(stationarity, primal, mu);
            defaults to DIFFPROX_TOL
        max_iter: Iteration cap; defaults to DIFFPROX_MAX_ITER
        polish: Re-solve on the final active set; defaults to DIFFPROX_POLISH

    Returns:
        QPSolution

    Raises:
        NonConvergenceError: If the cap is reached, carrying the best iterate
        FactorizationError: If a Newton system cannot be factored
    """
    tol = get_setting('DIFFPROX_TOL', 1e-10) if tol is None else tol
    max_iter = get_setting('DIFFPROX_MAX_ITER', 30) if max_iter is None else max_iter
    polish = get_setting('DIFFPROX_POLISH', True) if polish is None else polish
    fraction = get_setting('DIFFPROX_STEP_FRACTION', 0.99)

    P, c, G, h = data.P, data.c, data.G, data.h
    n, l = data.n, data.l

    x = np.zeros(n)
    s = np.ones(l)
    lam = np.ones(l)

    best, best_error, best_parts = None, np.inf, None

    for iteration in range(max_iter + 1):
        iterate = QPSolution(x=x, s=s, lam=lam, iterations=iteration, kkt_residual=np.inf)
        r_stat, r_comp, r_prim = kkt_residuals(data, iterate)
        mu = float(np.sum(r_comp)) / l
        parts = (float(np.max(np.abs(r_stat))), float(np.max(np.abs(r_prim))), mu)
        error = max(parts)

        if error < best_error:
            best, best_error, best_parts = iterate, error, parts

        logger.debug(
            'pdip iter %d: stationarity %.3e primal %.3e mu %.3e',
            iteration, parts[0], parts[1], mu,
        )

        if error <= tol:
            sol = QPSolution(x=x, s=s, lam=lam, iterations=iteration, kkt_residual=error)
            if polish:
                polished = _polish(data, sol, tol)
                if polished is not None:
                    return polished
                logger.debug('pdip: polish rejected, keeping interior iterate')
            return sol

        if iteration == max_iter:
            break

        # Affine (predictor) step
        dx_a, ds_a, dlam_a, factor = pdip_kkt_solve(P, G, lam, s, -r_stat, -r_comp, -r_prim)
        alpha_a = min(1.0, _max_step(s, ds_a), _max_step(lam, dlam_a))
        sigma = (((s + alpha_a * ds_a) @ (lam + alpha_a * dlam_a)) / (s @ lam)) ** 3

        # Centering-correcting step, same factorization
        dx_c, ds_c, dlam_c, _ = pdip_kkt_solve(
            P, G, lam, s,
            np.zeros(n),
            sigma * mu * np.ones(l) - ds_a * dlam_a,
            np.zeros(l),
            cached_factor=factor,
        )

        dx, ds, dlam = dx_a + dx_c, ds_a + ds_c, dlam_a + dlam_c
        alpha = min(1.0, fraction * min(_max_step(s, ds), _max_step(lam, dlam)))

        x = x + alpha * dx
        s = s + alpha * ds
        lam = lam + alpha * dlam

    best = QPSolution(
        x=best.x, s=best.s, lam=best.lam,
        iterations=max_iter,
        kkt_residual=best_error,
        converged=False,
    )
    raise NonConvergenceError(best, best_parts, max_iter)

"""
Problem and solution types for

    minimize    1/2 x'Px + c'x
    subject to  Gx <= h
"""

from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class QPData:
    """Canonical inequality-QP data: P (n x n, PSD), c (n), G (l x n), h (l)."""

    P: np.ndarray
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        c = np.array(self.c, dtype=float).reshape(-1)
        G = np.array(self.G, dtype=float)
        h = np.array(self.h, dtype=float).reshape(-1)

        n = c.shape[0]
        if n < 1 or P.shape != (n, n):
            raise ValidationError(f'P must be {n}x{n} to match c, got shape {P.shape}')
        if G.ndim != 2 or G.shape[1] != n or G.shape[0] < 1:
            raise ValidationError(f'G must be l x {n} with l >= 1, got shape {G.shape}')
        if h.shape[0] != G.shape[0]:
            raise ValidationError(f'h must have {G.shape[0]} entries, got {h.shape[0]}')
        if np.max(np.abs(P - P.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(P))):
            raise ValidationError('P must be symmetric')

        for name, array in (('P', P), ('c', c), ('G', G), ('h', h)):
            if not np.all(np.isfinite(array)):
                raise ValidationError(f'{name} must be finite')
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def n(self):
        return self.c.shape[0]

    @property
    def l(self):
        return self.h.shape[0]

    def objective(self, x):
        """1/2 x'Px + c'x."""
        x = np.asarray(x, dtype=float)
        return 0.5 * x @ self.P @ x + self.c @ x


@dataclass(frozen=True, eq=False)
class QPSolution:
    """
    Primal x, slack s >= 0 and dual lam >= 0 of a QP, with diagnostics.

    ``solver`` names the path that produced the point: 'pdip',
    'pdip+polish' or 'active_set'.
    """

    x: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    iterations: int
    kkt_residual: float
    converged: bool = True
    solver: str = 'pdip'

    @property
    def mu(self):
        """Duality measure s'lam / l."""
        return float(self.s @ self.lam) / self.s.shape[0]


def kkt_residuals(data, sol):
    """
    Residuals of the KKT conditions

    Args:
        data: QPData
        sol: Anything with x, s and lam attributes

    Returns:
        tuple: (r_stat, r_comp, r_prim) with
            r_stat = Px + c + G'lam, r_comp = s * lam, r_prim = Gx + s - h
    """
    x, s, lam = sol.x, sol.s, sol.lam
    r_stat = data.P @ x + data.c + data.G.T @ lam
    r_comp = s * lam
    r_prim = data.G @ x + s - data.h
    return r_stat, r_comp, r_prim


def kkt_error(data, sol):
    """max(|r_stat|_inf, |r_prim|_inf, s'lam/l): the termination measure."""
    r_stat, r_comp, r_prim = kkt_residuals(data, sol)
    return max(
        float(np.max(np.abs(r_stat))),
        float(np.max(np.abs(r_prim))),
        float(np.sum(r_comp)) / r_comp.shape[0],
    )

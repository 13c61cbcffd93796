"""Brute-force reference computations used to verify the production code.

Nothing here is fast.  The dense finite-difference Jacobian stores a
``4N x 4N`` matrix, the linear model system is evaluated in exact rational
arithmetic, and the Blasius profile is obtained by shooting.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import NonPhysicalStateError
from .discretization import Discretization
from .estimator import PerturbationRng, _as_r, manufactured_estimate, perturb_all

log = logging.getLogger(__name__)

MAX_DENSE_NODES = 500
FD_STEP = 1.0e-6


def reference_scales(disc: Discretization) -> np.ndarray:
    fs = disc.fs
    return np.array([fs.rho_inf * fs.a_inf ** 2, fs.a_inf, fs.a_inf, fs.T_inf])


def fd_jacobian(disc: Discretization, w, step: float = FD_STEP) -> np.ndarray:
    """Dense ``dRes/dw`` by central differences, node-major ordering ``4*j + i``.

    The step for entry ``(j, i)`` is ``step * max(|w_ji|, ref_i)``.  Columns
    where a perturbed state is non-physical fall back to a one-sided
    difference.
    """
    w = np.array(w, dtype=float)
    n = w.shape[0]
    if n > MAX_DENSE_NODES:
        raise ValueError(f"dense Jacobian limited to {MAX_DENSE_NODES} nodes, got {n}")
    ref = reference_scales(disc)
    base = disc.residual(w, check=False).values.ravel()
    jac = np.empty((4 * n, 4 * n))
    for j in range(n):
        for i in range(4):
            h = step * max(abs(w[j, i]), ref[i])
            wp = w.copy()
            wm = w.copy()
            wp[j, i] += h
            wm[j, i] -= h
            hp = wp[j, i] - w[j, i]
            hm = w[j, i] - wm[j, i]
            rp = _try_residual(disc, wp)
            rm = _try_residual(disc, wm)
            col = 4 * j + i
            if rp is not None and rm is not None:
                jac[:, col] = (rp - rm) / (hp + hm)
            elif rp is not None:
                jac[:, col] = (rp - base) / hp
            elif rm is not None:
                jac[:, col] = (base - rm) / hm
            else:
                raise NonPhysicalStateError(f"both perturbations of node {j}, variable {i} are invalid")
    return jac


def _try_residual(disc, w):
    try:
        return disc.residual(w).values.ravel()
    except NonPhysicalStateError:
        return None


def fd_jacobian_linear(residual_fn, u, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of a generic vector function."""
    u = np.asarray(u, dtype=float)
    cols = []
    for i in range(u.size):
        h = step * max(abs(u[i]), 1.0)
        up = u.copy()
        um = u.copy()
        up[i] += h
        um[i] -= h
        # divide by the step that was actually representable
        cols.append((np.asarray(residual_fn(up)) - np.asarray(residual_fn(um))) / (up[i] - um[i]))
    return np.stack(cols, axis=1)


def directional_difference(disc: Discretization, w, v, h: float) -> np.ndarray:
    """Forward difference ``(R(w + h v) - R(w)) / h`` flattened node-major."""
    w = np.asarray(w, float)
    r0 = disc.residual(w, check=False).values
    r1 = disc.residual(w + h * np.asarray(v, float), check=False).values
    return ((r1 - r0) / h).ravel()


def taylor_remainder(disc: Discretization, w, jac, r, eps: float) -> float:
    """``||R(w + eps r w) - R(w) - J (eps r w)||_1`` with one ``r`` per node."""
    w = np.asarray(w, float)
    dv = (eps * np.asarray(r, float))[:, None] * w
    r0 = disc.residual(w, check=False).values
    r1 = disc.residual(w + dv, check=False).values
    rem = (r1 - r0).ravel() - jac @ dv.ravel()
    return float(np.abs(rem).sum() / w.shape[0])


# --- linear model system ------------------------------------------------------

@dataclass
class LinearModelSystem:
    """Residual ``R(u) = A u - b`` whose machine-zero level has no O(eps^2) term."""

    A: np.ndarray
    b: np.ndarray
    exact: np.ndarray = field(init=False)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.b.shape != (n,):
            raise ValueError("A must be square and b must match its size")
        if np.linalg.matrix_rank(self.A) < n:
            raise ValueError("A is singular")
        self.exact = np.linalg.solve(self.A, self.b)

    def residual(self, u):
        """Matrix-vector residual; works on float and on object (exact) arrays."""
        u = np.asarray(u)
        if u.dtype == object:
            A = _to_fraction(self.A)
            return A.dot(u) - _to_fraction(self.b)
        return self.A @ u - self.b


def _to_fraction(a):
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        out[idx] = Fraction(v) if not isinstance(v, Fraction) else v
    return out


def linear_machine_zero(A, b, eps: float, seed=0, r=None, digits: int = 50):
    """Return ``(predicted, measured)`` for the linear model.

    ``predicted`` is ``||A (eps r u)||_1`` evaluated with ``digits`` decimal
    digits.  ``measured`` runs the manufactured-solution estimator on
    ``R(u) = A u - b`` in exact rational arithmetic, so the cancellation in
    ``R(u + eps r u) - R(u)`` loses nothing.
    """
    sysm = A if isinstance(A, LinearModelSystem) else LinearModelSystem(A, b)
    u = sysm.exact
    n = u.size
    rr = _as_r(PerturbationRng(seed) if r is None else r, n)

    with mpmath.workdps(digits):
        Am = mpmath.matrix(sysm.A.tolist())
        du = mpmath.matrix([mpmath.mpf(eps) * mpmath.mpf(float(rr[i])) * mpmath.mpf(float(u[i]))
                            for i in range(n)])
        prod = Am * du
        predicted = float(mpmath.fsum(abs(prod[i]) for i in range(n)) / n)

    uq = _to_fraction(u)
    er = _to_fraction(np.asarray(eps, float) * np.asarray(rr, float))
    up = perturb_all(uq, er, Fraction(1))
    measured = float(manufactured_estimate(sysm.residual, uq, up)[0])
    return predicted, measured


# --- Blasius boundary layer -------------------------------------------------

def _blasius_rhs(_, y):
    f, fp, fpp = y
    return [fp, fpp, -0.5 * f * fpp]


def _blasius_shoot(fpp0, eta_max):
    sol = solve_ivp(_blasius_rhs, (0.0, eta_max), [0.0, 0.0, fpp0], rtol=1e-11, atol=1e-12)
    return sol.y[1, -1] - 1.0


def blasius_wall_curvature(eta_max: float = 12.0) -> float:
    """``f''(0)`` of ``f''' + f f''/2 = 0`` with ``f'(inf) = 1``."""
    return brentq(_blasius_shoot, 0.1, 1.0, args=(eta_max,), xtol=1e-14)


def blasius_profile(eta, eta_max: float = 12.0) -> np.ndarray:
    """Similarity velocity ``u/U = f'(eta)``, with ``eta = y sqrt(U/(nu x))``."""
    eta = np.atleast_1d(np.asarray(eta, float))
    fpp0 = blasius_wall_curvature(eta_max)
    top = max(eta_max, float(eta.max()))
    sol = solve_ivp(_blasius_rhs, (0.0, top), [0.0, 0.0, fpp0], rtol=1e-11, atol=1e-12,
                    dense_output=True)
    return np.clip(sol.sol(np.clip(eta, 0.0, None))[1], 0.0, None)

"""Machine-zero residual estimates from randomly perturbed states.

Two estimates, both per equation in the L1 norm:

* free-stream estimate ``rc``: residual of the free stream perturbed node by
  node at relative size ``eps``;
* manufactured-solution estimate ``rm``: treat the current iterate ``w`` as
  the exact solution of ``R(w) = S`` with ``S = R(w)`` and evaluate
  ``R(w + eps r w) - S``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import l1_norms
from .discretization import Discretization

DEFAULT_EPS = 1.0e-16


def maxmod(a, b):
    """``a`` where ``|a| >= |b|``, else ``b`` (ties keep ``a``)."""
    return np.where(np.abs(a) >= np.abs(b), a, b)[()]


def sign_nonneg(x):
    """Sign with ``sign(0) = +1``."""
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)[()]


@dataclass(frozen=True)
class MachineEpsilon:
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0e-2:
            raise ValueError(f"eps must lie in (0, 1e-2], got {self.eps}")

    def __float__(self):
        return float(self.eps)


class PerturbationRng:
    """Counter-based draws: ``r_j`` depends only on ``(seed, j)``."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def draws(self, n: int) -> np.ndarray:
        bitgen = np.random.Philox(key=self.seed)
        return np.random.Generator(bitgen).random(n)

    def draw(self, j: int) -> float:
        return float(self.draws(j + 1)[j])


def _as_r(rng, n):
    if isinstance(rng, PerturbationRng):
        return rng.draws(n)
    r = np.asarray(rng, dtype=float)
    if r.ndim == 0:
        return np.full(n, float(r))
    return r


def perturb_freestream(w_inf, r, eps):
    """Perturbed free-stream primitives, one row per entry of ``r``.

    The gauge pressure of the free stream is zero, so its slot is floored at
    ``eps``; the velocity slots are floored by ``maxmod`` with ``+-eps``.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    _, u, v, T = (float(c) for c in w_inf)
    er = eps * r
    out = np.empty((r.size, 4))
    base = (eps, maxmod(u, sign_nonneg(u) * eps), maxmod(v, sign_nonneg(v) * eps), T)
    for i, b in enumerate(base):
        # b + (eps r) b keeps the perturbation even when 1 + eps r rounds to 1
        out[:, i] = b + er * b
    return out


def perturb_current(w, r, eps):
    """Perturbed current primitives: floors ``eps r`` on p', u, v; T relative only."""
    w = np.asarray(w)
    r = np.asarray(r)
    er = eps * r
    out = np.empty_like(w)
    for i in range(3):
        out[:, i] = maxmod(w[:, i] + er * w[:, i], er)
    out[:, 3] = w[:, 3] + er * w[:, 3]
    return out


def perturb_all(u, r, eps):
    """Floored relative perturbation of every entry (generic systems)."""
    u = np.asarray(u)
    er = eps * r
    return maxmod(u + er * u, er)


def manufactured_estimate(residual_fn, u, u_pert, source=None):
    """L1 norms of ``R(u_pert) - S`` with ``S = R(u)`` unless given.

    Works for any array dtype the residual supports, including object
    arrays of extended-precision numbers.
    """
    S = residual_fn(u) if source is None else source
    diff = residual_fn(u_pert) - S
    diff = np.asarray(diff)
    if diff.ndim == 1:
        diff = diff[:, None]
    return l1_norms(diff)


@dataclass
class EstimateReport:
    rc: np.ndarray
    rm: np.ndarray
    eps: float
    seed: int
    rm_iteration: int | None = None

    def __post_init__(self):
        for name in ("rc", "rm"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, float)
                if not (np.all(np.isfinite(v)) and np.all(v >= 0.0)):
                    raise ValueError(f"{name} entries must be finite and non-negative")
                setattr(self, name, v)

    @property
    def level(self) -> np.ndarray:
        parts = [v for v in (self.rc, self.rm) if v is not None]
        return np.max(parts, axis=0)

    def to_dict(self):
        d = asdict(self)
        for k in ("rc", "rm"):
            d[k] = None if d[k] is None else [float(x) for x in d[k]]
        return d


def compute_rc(disc: Discretization, rng, eps, all_freestream=False) -> np.ndarray:
    """Free-stream estimate per equation, using the case's own boundaries by default."""
    if all_freestream:
        disc = Discretization(disc.grid.with_all_boundaries("freestream"), disc.fs, disc.cfg,
                              gas=disc.gas, backend=disc.backend)
    n = disc.grid.n_nodes
    w = perturb_freestream(disc.fs.w_inf, _as_r(rng, n), float(eps))
    return disc.residual(w).norms


def compute_rm(disc: Discretization, w, rng, eps, source=None) -> np.ndarray:
    """Manufactured-solution estimate at the iterate ``w``.

    ``source`` may pass the already-assembled residual values of ``w``.
    """
    w = np.asarray(w, float)
    r = _as_r(rng, w.shape[0])
    wp = perturb_current(w, r, float(eps))
    return manufactured_estimate(lambda s: disc.residual(s, check=False).values, w, wp,
                                 source=source)

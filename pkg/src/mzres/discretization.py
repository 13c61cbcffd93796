"""Edge-based node-centred residual for the dimensional Euler/NS equations.

    Res_j = sum_k Phi_jk(n_jk) + s_j V_j

``Phi_jk`` is the Roe flux of linearly reconstructed primitive states minus
the alpha-damping viscous flux.  Boundary conditions enter weakly through
half-face fluxes, except the no-slip velocity, which is imposed strongly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import FreestreamConditions, GasModel, ResidualField, check_physical
from .grid import Grid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NumericalFluxConfig:
    entropy_fix: float = 0.05
    alpha: float = 4.0 / 3.0
    viscous: bool = False
    reconstruction: bool = True
    limiter: str = "none"  # "none" | "van-albada"
    limiter_freeze_orders: float = 4.0
    limiter_eps: float = 1e-4  # relative to the reference scale of each variable

    def __post_init__(self):
        if not 0.0 <= self.entropy_fix <= 0.5:
            raise ValueError("entropy fix parameter must lie in [0, 0.5]")
        if self.viscous and not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        if self.limiter not in ("none", "van-albada"):
            raise ValueError(f"unknown limiter {self.limiter!r}")

    def first_order(self) -> "NumericalFluxConfig":
        return NumericalFluxConfig(self.entropy_fix, self.alpha, self.viscous, False, "none",
                                   self.limiter_freeze_orders, self.limiter_eps)


class SourceField:
    """Per-node source ``s_j``, stored integrated as ``s_j V_j``.

    Keeping the integrated form lets a manufactured source cancel an
    assembled residual exactly.
    """

    def __init__(self, integrated):
        self.integrated = np.ascontiguousarray(integrated, dtype=float)
        if not np.isfinite(self.integrated).all():
            raise ValueError("source entries must be finite")

    @classmethod
    def from_density(cls, s, volumes):
        return cls(np.asarray(s, dtype=float) * np.asarray(volumes)[:, None])

    @classmethod
    def manufactured(cls, residual):
        """Source making the state that produced ``residual`` an exact solution."""
        values = residual.values if isinstance(residual, ResidualField) else residual
        return cls(-np.asarray(values))

    def density(self, volumes):
        return self.integrated / np.asarray(volumes)[:, None]


class Discretization:
    """Binds a grid, flow conditions and flux options to the kernels."""

    def __init__(self, grid: Grid, fs: FreestreamConditions, cfg: NumericalFluxConfig,
                 gas: GasModel | None = None, backend: str | None = None):
        self.grid = grid
        self.fs = fs
        self.cfg = cfg
        self.gas = gas if gas is not None else (fs.viscous_gas() if cfg.viscous else fs.gas)
        self.kern = kernels.get_kernels(backend)
        self.backend = backend
        g = self.gas
        self.par = np.array([g.gamma, g.gas_constant, fs.p_inf, cfg.entropy_fix,
                             g.viscosity, g.conductivity, cfg.alpha])
        # no-slip walls are imposed strongly: u = v = 0 with momentum rows replaced
        self.dirichlet = (grid.boundary_nodes("no_slip_wall") if cfg.viscous
                          else np.zeros(0, dtype=np.int64))
        self.winf = fs.w_inf
        ref = np.array([fs.rho_inf * fs.a_inf ** 2, fs.a_inf, fs.a_inf, fs.T_inf])
        self.limc = (cfg.limiter_eps * ref) ** 2
        self.lsq_inv, self.lsq_rank_deficient = lsq_geometry(grid)
        self.phi = np.ones((grid.n_edges, 2, 4))
        self.limiter_mode = kernels.LIM_LIVE if cfg.limiter == "van-albada" else kernels.LIM_NONE
        self.fallback_count = 0
        self._grad = np.zeros((grid.n_nodes, 4, 2))
        self._edges = np.ascontiguousarray(grid.edges)
        self._enorm = np.ascontiguousarray(grid.edge_normals)

    @property
    def needs_gradients(self) -> bool:
        return self.cfg.reconstruction or self.cfg.viscous

    def gradients(self, w) -> np.ndarray:
        grad = np.zeros((self.grid.n_nodes, 4, 2))
        self.kern.gradients(self.grid.nodes, self._edges, self.lsq_inv,
                            np.ascontiguousarray(w, dtype=float), grad)
        return grad

    def residual(self, w, src: SourceField | None = None, check=True) -> ResidualField:
        w = np.ascontiguousarray(w, dtype=float)
        if check:
            check_physical(w, self.fs.p_inf)
        g = self.grid
        grad = self.gradients(w) if self.needs_gradients else self._grad
        res = np.zeros((g.n_nodes, 4))
        counter = np.zeros(1, dtype=np.int64)
        phi = self.phi if self.limiter_mode == kernels.LIM_FROZEN else self.phi.copy()
        self.kern.residual(g.nodes, self._edges, self._enorm, g.bnode, g.bnormal, g.btag,
                           self.dirichlet, w, grad, self.cfg.reconstruction, self.limiter_mode,
                           self.cfg.viscous, phi, self.limc, self.par, self.winf, res, counter)
        self.fallback_count = int(counter[0])
        if self.fallback_count:
            log.debug("first-order fallback on %d edges", self.fallback_count)
        if src is not None:
            res += src.integrated
        return ResidualField(res)

    def freeze_limiter(self, w):
        """Evaluate the limiter at ``w`` and keep it fixed from now on."""
        if self.limiter_mode != kernels.LIM_LIVE:
            return
        w = np.ascontiguousarray(w, dtype=float)
        grad = self.gradients(w)
        res = np.zeros((self.grid.n_nodes, 4))
        g = self.grid
        self.kern.residual(g.nodes, self._edges, self._enorm, g.bnode, g.bnormal, g.btag,
                           self.dirichlet, w, grad, True, kernels.LIM_LIVE, self.cfg.viscous,
                           self.phi, self.limc, self.par, self.winf, res,
                           np.zeros(1, dtype=np.int64))
        self.limiter_mode = kernels.LIM_FROZEN

    @property
    def limiter_frozen(self) -> bool:
        return self.limiter_mode == kernels.LIM_FROZEN

    def jacobian(self, w):
        """First-order Jacobian blocks ``(diag (N,4,4), offd (E,2,4,4))``."""
        w = np.ascontiguousarray(w, dtype=float)
        g = self.grid
        grad = self.gradients(w) if self.cfg.viscous else self._grad
        diag = np.zeros((g.n_nodes, 4, 4))
        offd = np.zeros((g.n_edges, 2, 4, 4))
        self.kern.jacobian(g.nodes, self._edges, self._enorm, g.bnode, g.bnormal, g.btag,
                           w, grad, self.cfg.viscous, self.par, self.winf, diag, offd)
        self.impose_dirichlet_rows(diag, offd)
        return diag, offd

    def impose_dirichlet_rows(self, diag, offd):
        """Replace the momentum rows of no-slip nodes by ``du = dv = 0``."""
        d = self.dirichlet
        if d.size == 0:
            return
        diag[d, 1:3, :] = 0.0
        diag[d, 1, 1] = 1.0
        diag[d, 2, 2] = 1.0
        mask = np.zeros(self.grid.n_nodes, dtype=bool)
        mask[d] = True
        j, k = self.grid.edges.T
        offd[mask[j], 0, 1:3, :] = 0.0
        offd[mask[k], 1, 1:3, :] = 0.0

    def apply_strong_bc(self, w) -> np.ndarray:
        """Copy of ``w`` with the no-slip velocity imposed at wall nodes."""
        w = np.array(w, dtype=float)
        w[self.dirichlet, 1:3] = 0.0
        return w

    def spectral_radius(self, w) -> np.ndarray:
        """Per-node sum of face wave speeds times areas (inviscid + viscous)."""
        g = self.grid
        gam, rgas, pinf = self.par[:3]
        j, k = g.edges.T
        wm = 0.5 * (w[j] + w[k])
        a = np.sqrt(gam * rgas * wm[:, 3])
        area = np.hypot(*g.edge_normals.T)
        lam = np.abs(wm[:, 1] * g.edge_normals[:, 0] + wm[:, 2] * g.edge_normals[:, 1]) + a * area
        n = g.n_nodes
        rad = np.bincount(j, lam, n) + np.bincount(k, lam, n)
        wb = w[g.bnode]
        barea = np.hypot(*g.bnormal.T)
        lamb = (np.abs(wb[:, 1] * g.bnormal[:, 0] + wb[:, 2] * g.bnormal[:, 1])
                + np.sqrt(gam * rgas * wb[:, 3]) * barea)
        rad += np.bincount(g.bnode, lamb, n)
        mu = self.gas.viscosity
        if self.cfg.viscous and mu > 0.0:
            rho = (pinf + w[:, 0]) / (rgas * w[:, 3])
            nu = max(4.0 / 3.0, gam / self.gas.prandtl) * mu / rho
            a2 = np.bincount(j, area ** 2, n) + np.bincount(k, area ** 2, n)
            a2 += np.bincount(g.bnode, barea ** 2, n)
            rad += nu * a2 / g.volumes
        return rad


def lsq_geometry(grid: Grid):
    """Inverse normal matrices of the unweighted least-squares fit per node."""
    n = grid.n_nodes
    j, k = grid.edges.T
    e = grid.nodes[k] - grid.nodes[j]
    m = np.zeros((n, 2, 2))
    outer = e[:, :, None] * e[:, None, :]
    for idx in (j, k):
        for a in range(2):
            for b in range(2):
                m[:, a, b] += np.bincount(idx, outer[:, a, b], n)
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    scale = (m[:, 0, 0] + m[:, 1, 1]) ** 2
    bad = ~(det > 1e-12 * scale)
    inv = np.zeros_like(m)
    ok = ~bad
    inv[ok, 0, 0] = m[ok, 1, 1] / det[ok]
    inv[ok, 1, 1] = m[ok, 0, 0] / det[ok]
    inv[ok, 0, 1] = -m[ok, 0, 1] / det[ok]
    inv[ok, 1, 0] = -m[ok, 1, 0] / det[ok]
    if bad.any():
        log.warning("rank-deficient least-squares stencil at %d node(s); gradients set to zero",
                    int(bad.sum()))
    return inv, np.flatnonzero(bad)


def lsq_gradients(grid: Grid, w, backend: str | None = None) -> np.ndarray:
    """Least-squares gradients of each primitive, shape (N, 4, 2)."""
    inv, _ = lsq_geometry(grid)
    grad = np.zeros((grid.n_nodes, 4, 2))
    kernels.get_kernels(backend).gradients(grid.nodes, np.ascontiguousarray(grid.edges), inv,
                                           np.ascontiguousarray(w, dtype=float), grad)
    return grad


def assemble_residual(grid: Grid, w, fs: FreestreamConditions, cfg: NumericalFluxConfig,
                      src: SourceField | None = None, backend: str | None = None) -> ResidualField:
    return Discretization(grid, fs, cfg, backend=backend).residual(w, src)


def roe_flux(wL, wR, n, gas: GasModel, p_inf: float, entropy_fix: float = 0.05) -> np.ndarray:
    """Roe flux through directed area ``n`` for primitive states."""
    f = kernels.roe_flux(*np.asarray(wL, float), *np.asarray(wR, float), float(n[0]),
                         float(n[1]), gas.gamma, gas.gas_constant, p_inf, entropy_fix)
    return np.array(f, dtype=float)


def exact_flux(w, n, gas: GasModel, p_inf: float) -> np.ndarray:
    """Projected Euler flux with full pressure ``p_inf + p'`` in the momentum rows."""
    pg, u, v, T = np.asarray(w, float)
    f = np.array(kernels.euler_flux(pg, u, v, T, n[0], n[1], gas.gamma, gas.gas_constant, p_inf))
    f[1] += p_inf * n[0]
    f[2] += p_inf * n[1]
    return f


def alpha_damping_viscous_flux(wL, wR, gradL, gradR, n, xL, xR, gas: GasModel,
                               alpha: float = 4.0 / 3.0) -> np.ndarray:
    """Viscous flux F_v . n between two nodes (gradients shaped (4, 2))."""
    gL = np.asarray(gradL, float)
    gR = np.asarray(gradR, float)
    e = np.asarray(xR, float) - np.asarray(xL, float)
    f = kernels.visc_flux(wL[1], wL[2], wL[3], wR[1], wR[2], wR[3],
                          *gL[1:].ravel(), *gR[1:].ravel(), e[0], e[1], n[0], n[1],
                          gas.viscosity, gas.conductivity, alpha)
    return np.array(f, dtype=float)

"""Implicit defect-correction iteration and termination policies."""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import conservative_jacobian
from .discretization import Discretization

log = logging.getLogger(__name__)

CONTINUE = "continue"
CONVERGED_DW = "converged_dw"
CONVERGED_ESTIMATE = "converged_estimate"
STALLED = "stalled"
MAX_ITERATIONS = "max_iterations"
ABORTED = "aborted"

EXIT_CODES = {CONVERGED_ESTIMATE: 0, CONVERGED_DW: 0, MAX_ITERATIONS: 3, STALLED: 4, ABORTED: 5}

CSV_HEADER = (["iter"] + [f"res{i}" for i in range(1, 5)] + [f"dw{i}" for i in range(1, 5)]
              + [f"rm{i}" for i in range(1, 5)] + ["cfl", "wtime"])


class SolverAbort(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    cfl_start: float = 1.0
    cfl_max: float = 1.0e5
    cfl_growth: float = 1.2
    sweeps: int = 10
    max_iterations: int = 2000
    dw_tolerance: float = 1.0e-16
    stop_on_estimate: bool = True
    estimate_margin_orders: float = 5.0
    stall_window: int = 200
    stall_decrease: float = 0.01
    max_update: float = 0.2
    cfl_min: float = 1.0e-6

    def __post_init__(self):
        if not self.cfl_start > 0.0 or not self.cfl_max > 0.0:
            raise ValueError("CFL must be positive")
        if self.sweeps < 1:
            raise ValueError("at least one sweep per iteration is required")
        if not 0.0 < self.dw_tolerance <= 1.0:
            raise ValueError("dw tolerance must lie in (0, 1]")


@dataclass
class ConvergenceHistory:
    iters: list = field(default_factory=list)
    res: list = field(default_factory=list)
    dw: list = field(default_factory=list)
    rm: list = field(default_factory=list)
    cfl: list = field(default_factory=list)
    wtime: list = field(default_factory=list)

    def append(self, it, res, dw, rm, cfl, wtime):
        self.iters.append(int(it))
        self.res.append(np.asarray(res, float).copy())
        self.dw.append(np.asarray(dw, float).copy())
        self.rm.append(np.asarray(rm, float).copy())
        self.cfl.append(float(cfl))
        self.wtime.append(float(wtime))

    def __len__(self):
        return len(self.iters)

    @property
    def res_array(self):
        return np.array(self.res).reshape(-1, 4)

    @property
    def dw_array(self):
        return np.array(self.dw).reshape(-1, 4)

    @property
    def rm_array(self):
        return np.array(self.rm).reshape(-1, 4)

    def rows(self):
        for i in range(len(self)):
            yield ([self.iters[i]] + list(self.res[i]) + list(self.dw[i]) + list(self.rm[i])
                   + [self.cfl[i], self.wtime[i]])

    def write_csv(self, path, estimates=None):
        """One row per iteration; estimate rows, when given, are comment lines."""
        with open(path, "w", newline="") as fh:
            if estimates is not None:
                fh.write("# rc " + " ".join(repr(float(v)) for v in estimates.rc) + "\n")
                if estimates.rm is not None:
                    fh.write("# rm " + " ".join(repr(float(v)) for v in estimates.rm) + "\n")
                fh.write(f"# eps {estimates.eps!r} seed {estimates.seed}\n")
            wr = csv.writer(fh)
            wr.writerow(CSV_HEADER)
            for row in self.rows():
                wr.writerow([row[0]] + [repr(float(v)) for v in row[1:]])

    @classmethod
    def read_csv(cls, path):
        hist = cls()
        meta = {}
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
        body = []
        for ln in lines:
            if ln.startswith("#"):
                parts = ln[1:].split()
                if parts and parts[0] in ("rc", "rm"):
                    meta[parts[0]] = np.array([float(t) for t in parts[1:5]])
                continue
            body.append(ln)
        reader = csv.reader(body)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise ValueError(f"{path}: missing or malformed convergence CSV header")
        for row in reader:
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"{path}: row has {len(row)} columns, expected {len(CSV_HEADER)}")
            vals = [float(v) for v in row]
            hist.append(vals[0], vals[1:5], vals[5:9], vals[9:13], vals[13], vals[14])
        return hist, meta


def dw_metric(w_new, w_old) -> np.ndarray:
    """Scaled L1 change of each primitive variable between two iterates."""
    w_new = np.asarray(w_new, float)
    w_old = np.asarray(w_old, float)
    n = w_new.shape[0]
    wmax = np.abs(w_new).max(axis=0)
    scale = np.where(wmax >= 1.0e-5, wmax, 1.0)
    return np.abs(w_new - w_old).sum(axis=0) / n / scale


def terminate(history: ConvergenceHistory, estimates, cfg: SolverConfig) -> str:
    """Decide whether to stop, from the history and the current estimates.

    ``estimates`` needs ``rc`` and ``rm`` 4-vectors (either may be ``None``).
    """
    if len(history) == 0:
        raise ValueError("terminate needs at least one history record")
    res = history.res[-1]
    ref = _estimate_level(estimates)
    margin = 10.0 ** cfg.estimate_margin_orders
    if cfg.stop_on_estimate and ref is not None and np.all(res <= margin * ref):
        return CONVERGED_ESTIMATE
    dw = history.dw[-1]
    if np.all(np.isfinite(dw)) and np.all(dw < cfg.dw_tolerance):
        return CONVERGED_DW
    nwin = cfg.stall_window
    if len(history) > nwin and ref is not None:
        old = history.res[-1 - nwin]
        flat = np.all(res >= (1.0 - cfg.stall_decrease) * old)
        if flat and np.any(res > margin * ref):
            return STALLED
    return CONTINUE


def _estimate_level(estimates):
    if estimates is None:
        return None
    parts = [np.asarray(v, float) for v in (estimates.rc, estimates.rm) if v is not None]
    parts = [p for p in parts if np.all(np.isfinite(p))]
    if not parts:
        return None
    return np.max(parts, axis=0)


class ImplicitSolver:
    """Defect correction: first-order Jacobian, second-order residual."""

    def __init__(self, disc: Discretization, cfg: SolverConfig):
        self.disc = disc
        self.cfg = cfg
        self.cfl = cfg.cfl_start
        self.res_max = None

    def _solve_linear(self, w, res, diag, offd, cfl):
        g = self.disc.grid
        rad = self.disc.spectral_radius(w)
        M = conservative_jacobian(w, self.disc.gas, self.disc.fs.p_inf)
        D = diag + (rad / cfl)[:, None, None] * M
        self.disc.impose_dirichlet_rows(D, offd)
        dinv = np.linalg.inv(D)
        dx = np.zeros_like(w)
        self.disc.kern.sgs(dinv, offd, g.adj_ptr, g.adj_nbr, g.adj_edge, g.adj_side,
                           np.ascontiguousarray(-res), dx, self.cfg.sweeps)
        return dx

    def step(self, w, res):
        """One nonlinear update from ``w`` with residual values ``res``."""
        diag, offd = self.disc.jacobian(w)
        p_inf = self.disc.fs.p_inf
        cfl = self.cfl
        while True:
            dx = self._solve_linear(w, res, diag, offd, cfl)
            rel = max(np.max(np.abs(dx[:, 0]) / (p_inf + w[:, 0])),
                      np.max(np.abs(dx[:, 3]) / w[:, 3]))
            omega = 1.0 if rel <= self.cfg.max_update else self.cfg.max_update / rel
            w_new = w + omega * dx if omega < 1.0 else w + dx
            ok = (np.all(np.isfinite(w_new)) and np.all(w_new[:, 3] > 0.0)
                  and np.all(p_inf + w_new[:, 0] > 0.0))
            if ok:
                break
            cfl *= 0.5
            log.info("non-physical update rejected; CFL halved to %g", cfl)
            if cfl < self.cfg.cfl_min:
                raise SolverAbort(f"CFL underflow ({cfl:g}) after repeated rejected updates")
        self.cfl = min(cfl * self.cfg.cfl_growth, self.cfg.cfl_max) if omega == 1.0 else cfl
        return w_new


def defect_correction_step(residual_fn, jacobian, u, linear_solve=np.linalg.solve):
    """Generic step ``u - J^{-1} R(u)`` with a caller-supplied Jacobian."""
    u = np.asarray(u, float)
    return u + linear_solve(np.asarray(jacobian, float), -np.asarray(residual_fn(u), float))


def implicit_iterate(w, disc: Discretization, cfg: SolverConfig, cfl: float | None = None):
    """Single defect-correction step; returns the new state and its residual."""
    solver = ImplicitSolver(disc, cfg)
    if cfl is not None:
        solver.cfl = cfl
    res = disc.residual(w)
    w_new = solver.step(np.asarray(w, float), res.values)
    return w_new, disc.residual(w_new)


@dataclass
class SolveResult:
    w: np.ndarray
    history: ConvergenceHistory
    reason: str
    iterations: int
    residual: np.ndarray
    message: str = ""


def solve(disc: Discretization, w0, cfg: SolverConfig, rc=None, rm_fn=None, rm_stride=1,
          estimate_eps=None, callback=None) -> SolveResult:
    """Iterate to termination.

    ``rc`` is the fixed free-stream estimate; ``rm_fn(w, res_values)`` returns
    the manufactured-solution estimate at the current iterate.
    """
    from types import SimpleNamespace

    solver = ImplicitSolver(disc, cfg)
    w = disc.apply_strong_bc(w0)
    hist = ConvergenceHistory()
    t0 = time.perf_counter()
    res = disc.residual(w)
    dw = np.full(4, np.nan)
    rm_last = None
    res_max = res.norms.copy()
    k = 0
    reason = CONTINUE
    message = ""
    while True:
        rm_now = np.full(4, np.nan)
        if rm_fn is not None and k % rm_stride == 0:
            rm_now = rm_fn(w, res.values)
            rm_last = rm_now
        hist.append(k, res.norms, dw, rm_now, solver.cfl, time.perf_counter() - t0)
        if callback is not None:
            callback(k, hist)
        est = SimpleNamespace(rc=rc, rm=rm_last)
        reason = terminate(hist, est, cfg)
        if reason != CONTINUE:
            break
        if k >= cfg.max_iterations:
            reason = MAX_ITERATIONS
            break
        res_max = np.maximum(res_max, res.norms)
        if (not disc.limiter_frozen and disc.cfg.limiter != "none"
                and np.all(res.norms <= res_max * 10.0 ** (-disc.cfg.limiter_freeze_orders))):
            disc.freeze_limiter(w)
            log.info("limiter frozen at iteration %d", k)
            res = disc.residual(w)
        try:
            w_new = solver.step(w, res.values)
        except SolverAbort as exc:
            reason = ABORTED
            message = str(exc)
            break
        dw = dw_metric(w_new, w)
        w = w_new
        res = disc.residual(w)
        k += 1
    return SolveResult(w, hist, reason, k, res.values, message)

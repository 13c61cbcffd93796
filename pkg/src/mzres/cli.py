"""Command-line entry point: grids, case runs, estimates, profiles and plots.

Case files are INI documents::

    [case]        name, physics (euler | navier-stokes), output
    [grid]        generator (joukowsky | flatplate) and its fields, or file = path;
                  scale multiplies coordinates and the reference length
    [freestream]  mach, angle_of_attack, p_inf, T_inf, reynolds, reference_length
    [flux]        entropy_fix, alpha, reconstruction, limiter, limiter_freeze_orders
    [solver]      any SolverConfig field
    [estimator]   eps, seed, rm_stride, rc_boundaries (case | freestream)
    [sweep]       dw_tolerance = list; each value runs a sub-case whose stop
                  tolerance and estimate eps both equal that value
    [profile]     x

Relative paths inside a case file are resolved against the file's directory.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FreestreamConditions, GasModel, NonPhysicalStateError
from .discretization import Discretization, NumericalFluxConfig
from .estimator import EstimateReport, MachineEpsilon, PerturbationRng, compute_rc, compute_rm
from .grid import Grid, GridError, read_grid, write_grid
from .gridgen import (FlatPlateGridSpec, JoukowskyGridSpec, generate_flatplate_grid,
                      generate_joukowsky_ogrid)
from .solver import EXIT_CODES, ConvergenceHistory, SolverConfig, solve

log = logging.getLogger("mzres")

PHYSICS = ("euler", "navier-stokes")
GENERATORS = {"joukowsky": (JoukowskyGridSpec, generate_joukowsky_ogrid),
              "flatplate": (FlatPlateGridSpec, generate_flatplate_grid)}


# --- configuration ----------------------------------------------------------

def _coerce(value: str, like):
    if isinstance(like, bool):
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value.strip()


def _fill(cls, section, skip=()):
    """Build dataclass ``cls`` from an INI section, typed by the field defaults."""
    defaults = cls()
    kwargs = {}
    names = {f.name for f in dataclasses.fields(cls)}
    for key, raw in section.items():
        if key in skip:
            continue
        if key not in names:
            raise ValueError(f"unknown key {key!r} for {cls.__name__}")
        kwargs[key] = _coerce(raw, getattr(defaults, key))
    return cls(**kwargs)


@dataclass
class CaseConfig:
    name: str
    physics: str
    grid_file: Path | None
    grid_generator: str | None
    grid_spec: object
    grid_scale: float
    freestream: FreestreamConditions
    flux: NumericalFluxConfig
    solver: SolverConfig
    eps: MachineEpsilon
    seed: int
    rm_stride: int
    rc_boundaries: str
    output: Path
    profile_x: float | None = None
    sweep: list = field(default_factory=list)

    def __post_init__(self):
        if self.physics not in PHYSICS:
            raise ValueError(f"physics must be one of {PHYSICS}")
        if self.grid_file is not None and not Path(self.grid_file).exists():
            raise FileNotFoundError(f"grid file {self.grid_file} does not exist")
        if self.rc_boundaries not in ("case", "freestream"):
            raise ValueError("rc_boundaries must be 'case' or 'freestream'")
        if self.rm_stride < 1:
            raise ValueError("rm_stride must be >= 1")
        if not self.grid_scale > 0.0:
            raise ValueError("grid scale must be positive")

    @property
    def viscous(self) -> bool:
        return self.physics == "navier-stokes"

    def build_grid(self) -> Grid:
        if self.grid_file is not None:
            grid = read_grid(self.grid_file)
        else:
            grid = GENERATORS[self.grid_generator][1](self.grid_spec)
        return grid.scaled(self.grid_scale) if self.grid_scale != 1.0 else grid

    def with_sweep_value(self, value: float) -> "CaseConfig":
        return dataclasses.replace(
            self, name=f"{self.name}-eps{value:.0e}", sweep=[],
            solver=dataclasses.replace(self.solver, dw_tolerance=value),
            eps=MachineEpsilon(value), output=self.output / f"eps{value:.0e}")


def _parse_overrides(overrides):
    out = []
    for item in overrides or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot:
            raise ValueError(f"override {item!r} must look like section.key=value")
        out.append((section.strip(), name.strip(), value.strip()))
    return out


def load_case(path, overrides=()) -> CaseConfig:
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep T_inf and p_inf as written
    if not cp.read(path):
        raise FileNotFoundError(f"case file {path} not found")
    for section, name, value in _parse_overrides(overrides):
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value)
    base = path.parent

    def sec(name):
        return cp[name] if cp.has_section(name) else {}

    case = sec("case")
    physics = case.get("physics", "euler")
    viscous = physics == "navier-stokes"

    g = dict(sec("grid"))
    scale = float(g.pop("scale", 1.0))
    grid_file = g.pop("file", None)
    generator = g.pop("generator", None)
    spec = None
    if grid_file is not None:
        grid_file = (base / grid_file).resolve()
    elif generator in GENERATORS:
        spec = _fill(GENERATORS[generator][0], g)
        spec.validate()
    else:
        raise ValueError(f"[grid] needs file = path or generator in {sorted(GENERATORS)}")

    fsd = dict(sec("freestream"))
    fs_kwargs = {k: float(v) for k, v in fsd.items()}
    if "mach" not in fs_kwargs:
        raise ValueError("[freestream] mach is required")
    fs_kwargs["reference_length"] = fs_kwargs.get("reference_length", 1.0) * scale
    if viscous and not fs_kwargs.get("reynolds", 0.0) > 0.0:
        raise ValueError("navier-stokes physics needs a positive Reynolds number")
    fs = FreestreamConditions(gas=GasModel(), **fs_kwargs)

    flux = dataclasses.replace(_fill(NumericalFluxConfig, sec("flux")), viscous=viscous)
    solver = _fill(SolverConfig, sec("solver"))

    est = sec("estimator")
    eps = MachineEpsilon(float(est.get("eps", 1e-16)))
    sweep = [float(t) for t in sec("sweep").get("dw_tolerance", "").replace(",", " ").split()]
    prof = sec("profile")
    out = Path(case.get("output", f"runs/{case.get('name', path.stem)}"))
    return CaseConfig(
        name=case.get("name", path.stem), physics=physics, grid_file=grid_file,
        grid_generator=generator, grid_spec=spec, grid_scale=scale, freestream=fs, flux=flux,
        solver=solver, eps=eps, seed=int(est.get("seed", 0)),
        rm_stride=int(est.get("rm_stride", 1)), rc_boundaries=est.get("rc_boundaries", "case"),
        output=out if out.is_absolute() else (base / out).resolve(),
        profile_x=float(prof["x"]) if "x" in prof else None, sweep=sweep)


# --- solution files -----------------------------------------------------------

def save_solution(path, grid: Grid, w, fs: FreestreamConditions):
    gas = fs.gas
    np.savez(path, nodes=grid.nodes, triangles=grid.triangles, w=np.asarray(w, float),
             mach=fs.mach, angle_of_attack=fs.angle_of_attack, p_inf=fs.p_inf, T_inf=fs.T_inf,
             reynolds=fs.reynolds, reference_length=fs.reference_length,
             gamma=gas.gamma, gas_constant=gas.gas_constant)


def load_solution(path):
    """Return ``(nodes, w, FreestreamConditions)`` from a saved solution."""
    with np.load(path) as z:
        gas = GasModel(gamma=float(z["gamma"]), gas_constant=float(z["gas_constant"]))
        fs = FreestreamConditions(mach=float(z["mach"]), angle_of_attack=float(z["angle_of_attack"]),
                                  p_inf=float(z["p_inf"]), T_inf=float(z["T_inf"]),
                                  reynolds=float(z["reynolds"]),
                                  reference_length=float(z["reference_length"]), gas=gas)
        return z["nodes"].copy(), z["w"].copy(), fs


def write_field_table(path, grid: Grid, w, fs: FreestreamConditions):
    """Plain-text node table for external visualisers: x y p' u v T mach."""
    gas = fs.gas
    a = np.sqrt(gas.gamma * gas.gas_constant * w[:, 3])
    mach = np.hypot(w[:, 1], w[:, 2]) / a
    np.savetxt(path, np.column_stack([grid.nodes, w, mach]), fmt="%.10e",
               header="x y p_gauge u v T mach")


# --- operations -----------------------------------------------------------------

def compute_estimates_rc(disc: Discretization, cfg: CaseConfig) -> np.ndarray:
    return compute_rc(disc, PerturbationRng(cfg.seed), float(cfg.eps),
                      all_freestream=cfg.rc_boundaries == "freestream")


def run_case(cfg: CaseConfig, restart=None, quiet=False) -> dict:
    """Solve one case and write its CSV history, JSON summary and solution."""
    if cfg.sweep:
        raise ValueError("sweep configs expand into several cases; use run_cases")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.build_grid()
    disc = Discretization(grid, cfg.freestream, cfg.flux)
    eps = float(cfg.eps)
    rng = PerturbationRng(cfg.seed)
    rc = compute_estimates_rc(disc, cfg)
    if restart is not None:
        nodes, w0, _ = load_solution(restart)
        if nodes.shape != grid.nodes.shape:
            raise GridError("restart solution does not match the case grid")
    else:
        w0 = np.tile(cfg.freestream.w_inf, (grid.n_nodes, 1))

    def rm_fn(w, res_values):
        return compute_rm(disc, w, rng, eps, source=res_values)

    def progress(k, hist):
        if not quiet and k % 50 == 0:
            log.info("%s it %5d  res %s", cfg.name, k,
                     " ".join(f"{v:.3e}" for v in hist.res[-1]))

    t0 = time.perf_counter()
    result = solve(disc, w0, cfg.solver, rc=rc, rm_fn=rm_fn, rm_stride=cfg.rm_stride,
                   callback=progress)
    wall = time.perf_counter() - t0
    hist = result.history
    rm_rows = hist.rm_array
    sampled = np.flatnonzero(np.all(np.isfinite(rm_rows), axis=1))
    rm_last = rm_rows[sampled[-1]] if sampled.size else None
    report = EstimateReport(rc=rc, rm=rm_last, eps=eps, seed=cfg.seed,
                            rm_iteration=int(hist.iters[sampled[-1]]) if sampled.size else None)
    final_res = hist.res[-1]
    level = report.level
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(level > 0.0, final_res / level, np.inf)

    hist.write_csv(out / "history.csv", report)
    save_solution(out / "solution.npz", grid, result.w, cfg.freestream)
    write_field_table(out / "solution.dat", grid, result.w, cfg.freestream)
    summary = {
        "case": cfg.name,
        "reason": result.reason,
        "exit_code": EXIT_CODES[result.reason],
        "message": result.message,
        "iterations": result.iterations,
        "wall_time": wall,
        "n_nodes": grid.n_nodes,
        "final_residual": [float(v) for v in final_res],
        "final_dw": [float(v) for v in hist.dw[-1]],
        "estimates": report.to_dict(),
        "ratios": [float(v) for v in ratios],
        "rc_boundaries": cfg.rc_boundaries,
        "dw_tolerance": cfg.solver.dw_tolerance,
        "restart": str(restart) if restart is not None else None,
        "limiter_frozen": bool(disc.limiter_frozen),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def run_cases(cfg: CaseConfig, restart=None, quiet=False) -> list[dict]:
    if not cfg.sweep:
        return [run_case(cfg, restart=restart, quiet=quiet)]
    return [run_case(cfg.with_sweep_value(v), restart=restart, quiet=quiet) for v in cfg.sweep]


def extract_profile(solution, x: float, plate_start: float = 0.0):
    """Sample the vertical grid line nearest ``x``.

    Returns an ``(M, 4)`` array of ``(eta, u/u_inf, v/u_inf * sqrt(Re_x), T)``
    sorted by height, with ``eta = y sqrt(Re_x) / (x - plate_start)``.
    """
    if isinstance(solution, (str, Path)):
        nodes, w, fs = load_solution(solution)
    else:
        nodes, w, fs = solution
    xs = nodes[:, 0]
    if not (xs.min() <= x <= xs.max()):
        raise ValueError(f"x = {x} lies outside the domain [{xs.min()}, {xs.max()}]")
    dist = x - plate_start
    if not dist > 0.0:
        raise ValueError("profile station must lie downstream of the plate start")
    line_x = xs[np.argmin(np.abs(xs - x))]
    tol = 1e-9 * max(1.0, abs(line_x))
    sel = np.flatnonzero(np.abs(xs - line_x) <= tol)
    sel = sel[np.argsort(nodes[sel, 1])]
    gas = fs.viscous_gas() if fs.reynolds > 0.0 else fs.gas
    u_inf = fs.speed
    if not (u_inf > 0.0 and gas.viscosity > 0.0):
        raise ValueError("profile extraction needs a moving viscous free stream")
    re_x = fs.rho_inf * u_inf * (line_x - plate_start) / gas.viscosity
    y = nodes[sel, 1]
    eta = y * np.sqrt(re_x) / (line_x - plate_start)
    return np.column_stack([eta, w[sel, 1] / u_inf, w[sel, 2] / u_inf * np.sqrt(re_x), w[sel, 3]])


def report_figures(csv_path, out_dir=None):
    """Residual and dw convergence plots (SVG).  Returns the written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    csv_path = Path(csv_path)
    hist, meta = ConvergenceHistory.read_csv(csv_path)
    if len(hist) == 0:
        raise ValueError(f"{csv_path}: empty convergence history")
    out_dir = Path(out_dir) if out_dir is not None else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    it = np.array(hist.iters)
    colors = ["C0", "C1", "C2", "C3"]

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    res = hist.res_array
    for i in range(4):
        ax.semilogy(it, res[:, i], color=colors[i], marker="." if len(it) == 1 else None,
                    label=f"Res({i + 1})")
        for key, style in (("rc", "--"), ("rm", ":")):
            if key in meta:
                ax.axhline(meta[key][i], color=colors[i], linestyle=style, linewidth=1.0,
                           label=f"R{key[1]}({i + 1})")
    ax.set_xlabel("iteration")
    ax.set_ylabel("L1 residual norm")
    ax.legend(fontsize=7, ncol=3)
    res_path = out_dir / "residual.svg"
    fig.savefig(res_path)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    dw = hist.dw_array
    for i in range(4):
        ok = np.isfinite(dw[:, i]) & (dw[:, i] > 0.0)
        ax.semilogy(it[ok], dw[ok, i], color=colors[i], marker=".", markersize=2,
                    linestyle="-" if ok.sum() > 1 else "none", label=f"dw({i + 1})")
    ax.set_xlabel("iteration")
    ax.set_ylabel("iterative solution difference")
    ax.legend(fontsize=7)
    dw_path = out_dir / "dw.svg"
    fig.savefig(dw_path)
    plt.close(fig)
    return [res_path, dw_path]


# --- argument parsing ---------------------------------------------------------------

def _add_spec_flags(p, cls, prefix):
    for f in dataclasses.fields(cls):
        default = f.default
        p.add_argument(f"--{prefix}{f.name.replace('_', '-')}", dest=f"{prefix}{f.name}",
                       type=type(default), default=None, help=f"(default {default})")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mzres", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gridgen", help="generate a grid file")
    g.add_argument("kind", choices=sorted(GENERATORS))
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--scale", type=float, default=1.0)
    _add_spec_flags(g, JoukowskyGridSpec, "")
    for f in dataclasses.fields(FlatPlateGridSpec):
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=type(f.default),
                       default=None, help=f"flat plate (default {f.default})")

    r = sub.add_parser("run", help="solve a case file")
    r.add_argument("case")
    r.add_argument("--restart", help="start from a saved solution.npz")
    r.add_argument("--output", help="override the case output directory")
    r.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")

    e = sub.add_parser("estimate", help="free-stream estimate only, no solve")
    e.add_argument("case")
    e.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")

    pr = sub.add_parser("profile", help="boundary-layer profile along a vertical grid line")
    pr.add_argument("solution")
    pr.add_argument("--x", type=float, default=0.9)
    pr.add_argument("--plate-start", type=float, default=0.0)
    pr.add_argument("-o", "--output")

    pl = sub.add_parser("plot", help="convergence plots from a history CSV")
    pl.add_argument("csv")
    pl.add_argument("-o", "--output-dir")
    return p


def _gridgen(args) -> int:
    cls = GENERATORS[args.kind][0]
    kw = {f.name: getattr(args, f.name) for f in dataclasses.fields(cls)
          if getattr(args, f.name, None) is not None}
    spec = cls(**kw)
    spec.validate()
    grid = GENERATORS[args.kind][1](spec)
    if args.scale != 1.0:
        grid = grid.scaled(args.scale)
    write_grid(grid, args.output)
    print(f"wrote {args.output}: {grid.n_nodes} nodes, {grid.triangles.shape[0]} triangles")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gridgen":
            return _gridgen(args)
        if args.command == "run":
            overrides = list(args.set)
            if args.output:
                overrides.append(f"case.output={Path(args.output).resolve()}")
            cfg = load_case(args.case, overrides)
            summaries = run_cases(cfg, restart=args.restart)
            for s in summaries:
                print(f"{s['case']}: {s['reason']} after {s['iterations']} iterations; "
                      f"Res/estimate = {' '.join(f'{v:.2g}' for v in s['ratios'])}")
            return max(s["exit_code"] for s in summaries)
        if args.command == "estimate":
            cfg = load_case(args.case, args.set)
            disc = Discretization(cfg.build_grid(), cfg.freestream, cfg.flux)
            rc = compute_estimates_rc(disc, cfg)
            print(json.dumps({"case": cfg.name, "eps": float(cfg.eps), "seed": cfg.seed,
                              "rc_boundaries": cfg.rc_boundaries,
                              "rc": [float(v) for v in rc]}, indent=2))
            return 0
        if args.command == "profile":
            table = extract_profile(args.solution, args.x, args.plate_start)
            header = "eta u_over_uinf v_scaled T"
            if args.output:
                np.savetxt(args.output, table, fmt="%.10e", header=header)
            else:
                print("# " + header)
                for row in table:
                    print(" ".join(f"{v:.10e}" for v in row))
            return 0
        if args.command == "plot":
            for path in report_figures(args.csv, args.output_dir):
                print(f"wrote {path}")
            return 0
    except (ValueError, FileNotFoundError, GridError, NonPhysicalStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())

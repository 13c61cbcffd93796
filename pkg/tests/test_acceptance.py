"""End-to-end acceptance checks.

The expensive runs (two plateau runs of the flat plate, one of the airfoil,
two partially converged flat-plate runs) are made once per session.  Set
``MZRES_ACCEPTANCE_DIR`` to keep their outputs; otherwise a temporary
directory is used.  Every criterion prints a single PASS/FAIL line.
"""
import json
import os
from pathlib import Path

import numpy as np
import pytest

from mzres.cli import extract_profile, load_case, run_case, run_cases
from mzres.core import FreestreamConditions
from mzres.discretization import Discretization, NumericalFluxConfig, SourceField
from mzres.estimator import PerturbationRng, compute_rc
from mzres.gridgen import (FlatPlateGridSpec, JoukowskyGridSpec, generate_flatplate_grid,
                           generate_joukowsky_ogrid)
from mzres.oracle import blasius_profile, fd_jacobian, linear_machine_zero, taylor_remainder
from mzres.solver import ConvergenceHistory

from conftest import smooth_state

CASES = Path(__file__).resolve().parents[1] / "cases"


@pytest.fixture
def report(capsys):
    def _report(number, ok, detail):
        line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return _report


@pytest.fixture(scope="session")
def outdir(tmp_path_factory):
    env = os.environ.get("MZRES_ACCEPTANCE_DIR")
    if env:
        path = Path(env)
        path.mkdir(parents=True, exist_ok=True)
        return path
    return tmp_path_factory.mktemp("acceptance")


def _run(case, out, overrides=(), restart=None):
    cfg = load_case(CASES / case, [f"case.output={out}", *overrides])
    if cfg.sweep:
        return cfg, run_cases(cfg, restart=restart, quiet=True)
    return cfg, run_case(cfg, restart=restart, quiet=True)


@pytest.fixture(scope="session")
def plate(outdir):
    return _run("flat-plate.ini", outdir / "flat-plate")


@pytest.fixture(scope="session")
def plate_scaled(outdir):
    return _run("flat-plate.ini", outdir / "flat-plate-x1000", ["grid.scale=1000"])


@pytest.fixture(scope="session")
def airfoil(outdir):
    return _run("airfoil-transonic.ini", outdir / "airfoil")


@pytest.fixture(scope="session")
def plate_partial(outdir):
    return _run("flat-plate-partial-eps.ini", outdir / "flat-plate-partial")


def _fmt(v):
    return "[" + ", ".join(f"{x:.3g}" for x in v) + "]"


# --- 1. estimate accuracy at machine zero ---------------------------------------

@pytest.mark.parametrize("which", ["plate", "airfoil"])
def test_criterion_1_estimates_match_plateau(which, request, report):
    cfg, s = request.getfixturevalue(which)
    ratios = np.array(s["ratios"])
    ok = bool(np.all((ratios >= 1 / 30) & (ratios <= 30)))
    report(1, ok, f"{cfg.name}: Res/max(Rc,Rm) = {_fmt(ratios)} after {s['iterations']} "
                  f"iterations ({s['reason']}), band [1/30, 30]")


# --- 2. R_m stability over the run ------------------------------------------------

@pytest.mark.parametrize("which", ["plate", "airfoil"])
def test_criterion_2_rm_stable(which, request, report):
    cfg, s = request.getfixturevalue(which)
    hist, _ = ConvergenceHistory.read_csv(cfg.output / "history.csv")
    rm = hist.rm_array
    start = int(np.ceil(0.1 * len(hist)))
    rows = rm[start:]
    rows = rows[np.all(np.isfinite(rows), axis=1)]
    spread = rows.max(axis=0) / rows.min(axis=0)
    ok = rows.shape[0] > 0 and bool(np.all(spread <= 100.0))
    report(2, ok, f"{cfg.name}: max/min of Rm after {start} iterations = {_fmt(spread)}, "
                  "limit 100")


# --- 3. partially converged runs ----------------------------------------------------

def test_criterion_3_partial_convergence(plate, plate_partial, report):
    full_cfg, full = plate
    sweep_cfg, parts = plate_partial
    x = full_cfg.profile_x
    ref = extract_profile(full_cfg.output / "solution.npz", x)
    lines, ok = [], True
    for value, s in zip(sweep_cfg.sweep, parts):
        sub = sweep_cfg.with_sweep_value(value)
        prof = extract_profile(sub.output / "solution.npz", x)
        du = float(np.max(np.abs(prof[:, 1] - ref[:, 1])))
        level = np.maximum(s["estimates"]["rc"], s["estimates"]["rm"])
        above = np.array(s["final_residual"]) / level
        fewer = s["iterations"] < full["iterations"]
        this = fewer and du <= 0.01 and bool(np.all(above > 100.0))
        ok = ok and this
        lines.append(f"eps {value:.0e}: {s['iterations']} vs {full['iterations']} iterations, "
                     f"max |du|/u_inf {du:.2e}, Res/estimate {_fmt(above)}")
    report(3, ok, "; ".join(lines) + " (need fewer iterations, |du| <= 1e-2, Res/estimate > 100)")


def test_plate_profile_is_blasius_like(plate):
    cfg, _ = plate
    prof = extract_profile(cfg.output / "solution.npz", cfg.profile_x)
    eta, u = prof[:, 0], prof[:, 1]
    assert u[0] == 0.0
    edge = int(np.argmax(u >= 0.99))
    assert edge > 0
    assert np.all(np.diff(u[:edge + 1]) > 0.0)
    inner = eta <= 8.0
    err = np.abs(u[inner] - blasius_profile(eta[inner]))
    assert err.max() <= 0.05, err.max()
    assert np.interp(5.0, eta, u) == pytest.approx(0.99, abs=0.05)


def test_plateau_history_monotone_tail(plate):
    # once the plateau is reached the residual hovers; it does not drift back up by orders
    cfg, s = plate
    hist, _ = ConvergenceHistory.read_csv(cfg.output / "history.csv")
    res = hist.res_array
    tail = res[-50:]
    assert np.all(tail.max(axis=0) <= 10.0 * tail.min(axis=0))


# --- 4. linear model exactness -------------------------------------------------------

def test_criterion_4_linear_exactness(report):
    rng = np.random.default_rng(11)
    worst = 0.0
    for seed in range(5):
        n = 10 + 5 * seed
        A = rng.normal(size=(n, n)) + n * np.eye(n)
        b = rng.normal(size=n)
        for eps in (1e-16, 1e-12, 1e-8):
            pred, meas = linear_machine_zero(A, b, eps, seed=seed)
            worst = max(worst, abs(meas - pred) / pred)
    report(4, worst <= 1e-12, f"max relative gap estimator vs extended precision {worst:.2e}, "
                              "limit 1e-12")


# --- 5. eps linearity on the flat-plate grid ---------------------------------------------

def test_criterion_5_eps_linearity(report):
    cfg = load_case(CASES / "flat-plate.ini")
    disc = Discretization(cfg.build_grid(), cfg.freestream, cfg.flux)
    rc = [compute_rc(disc, PerturbationRng(cfg.seed), e) for e in (1e-16, 1e-15, 1e-14)]
    r1, r2 = rc[1] / rc[0], rc[2] / rc[1]
    ok = bool(np.all(np.abs(np.concatenate([r1, r2]) - 10.0) <= 2.5))
    report(5, ok, f"Rc(1e-15)/Rc(1e-16) = {_fmt(r1)}, Rc(1e-14)/Rc(1e-15) = {_fmt(r2)}, "
                  "need 10 +- 2.5")


# --- 6. free-stream preservation and manufactured-source annihilation ----------------------

def test_criterion_6_preservation_and_annihilation(report):
    details, ok = [], True
    fs = FreestreamConditions(mach=0.85, angle_of_attack=1.25)
    g = generate_joukowsky_ogrid(JoukowskyGridSpec()).with_all_boundaries("freestream")
    for cfg in (NumericalFluxConfig(), NumericalFluxConfig(limiter="van-albada")):
        d = Discretization(g, fs, cfg)
        norms = d.residual(np.tile(fs.w_inf, (g.n_nodes, 1))).norms
        bound = 1e-12 * fs.rho_inf * fs.a_inf ** 2 * g.mean_face_area()
        ok = ok and bool(np.all(norms <= bound))
        details.append(f"max Res/bound {np.max(norms / bound):.2e}")
    fsv = FreestreamConditions(mach=0.15, reynolds=1e4)
    gp = generate_flatplate_grid(FlatPlateGridSpec(nx=41, ny=29))
    d = Discretization(gp, fsv, NumericalFluxConfig(viscous=True))
    w = d.apply_strong_bc(smooth_state(gp, fsv))
    src = SourceField.manufactured(d.residual(w))
    nonzero = int(np.count_nonzero(d.residual(w, src).values))
    ok = ok and nonzero == 0
    details.append(f"{nonzero} nonzero entries with the manufactured source")
    report(6, ok, "; ".join(details))


# --- 7. Jacobian consistency ----------------------------------------------------------------

def test_criterion_7_jacobian_order(report):
    fs = FreestreamConditions(mach=0.15, reynolds=1e4)
    g = generate_flatplate_grid(FlatPlateGridSpec(nx=10, ny=10))
    d = Discretization(g, fs, NumericalFluxConfig(viscous=True))
    w = d.apply_strong_bc(smooth_state(g, fs, amp=0.05))
    J = fd_jacobian(d, w)
    r = PerturbationRng(0).draws(g.n_nodes)
    rems = np.array([taylor_remainder(d, w, J, r, e) for e in (1e-4, 1e-5, 1e-6)])
    orders = np.log10(rems[:-1] / rems[1:])
    ok = g.n_nodes <= 100 and bool(np.all(orders >= 1.8))
    report(7, ok, f"{g.n_nodes} nodes, remainders {_fmt(rems)}, observed orders {_fmt(orders)}, "
                  "need >= 1.8")


# --- 8. grid-unit covariance ---------------------------------------------------------------

def test_criterion_8_grid_unit_covariance(plate, plate_scaled, report):
    _, s1 = plate
    _, s2 = plate_scaled
    r1, r2 = np.array(s1["ratios"]), np.array(s2["ratios"])
    change = np.maximum(r1 / r2, r2 / r1)
    shift = np.array(s2["final_residual"]) / np.array(s1["final_residual"])
    ok = bool(np.all(change < 10.0))
    report(8, ok, f"plateau shift x1000 grid {_fmt(shift)}, ratio change {_fmt(change)}, "
                  "limit 10")


# --- 9. restart short-circuit ------------------------------------------------------------------

def test_criterion_9_restart(plate, outdir, report):
    cfg, _ = plate
    _, s = _run("flat-plate.ini", outdir / "flat-plate-restart", ["solver.stop_on_estimate=true"],
                restart=cfg.output / "solution.npz")
    ok = s["reason"] == "converged_estimate" and s["iterations"] == 0
    report(9, ok, f"restart from converged solution: {s['reason']} after {s['iterations']} "
                  "iterations")
    saved = json.loads((outdir / "flat-plate-restart" / "summary.json").read_text())
    assert saved["restart"].endswith("solution.npz")

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mzres.core import (FreestreamConditions, GasModel, NonPhysicalStateError, ResidualField,
                        conservative_jacobian, conservative_to_primitive, l1_norms,
                        primitive_to_conservative)

GAS = GasModel()
P_INF = 101325.0


def test_freestream_density_hand_value():
    fs = FreestreamConditions(mach=0.5)
    U = primitive_to_conservative(fs.w_inf, GAS, P_INF)
    assert U[0] == pytest.approx(101325.0 / (287.05 * 288.15), rel=1e-15)
    assert U[0] == pytest.approx(1.2250, abs=5e-5)


def test_zero_velocity_gives_zero_momentum():
    U = primitive_to_conservative([0.0, 0.0, 0.0, 288.15], GAS, P_INF)
    assert U[1] == 0.0 and U[2] == 0.0
    assert U[0] == pytest.approx(FreestreamConditions(mach=0.0).rho_inf, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(pg=st.floats(-5e4, 5e4), u=st.floats(-600, 600), v=st.floats(-600, 600),
       T=st.floats(50.0, 2000.0))
def test_primitive_conservative_round_trip(pg, u, v, T):
    w = np.array([pg, u, v, T])
    back = conservative_to_primitive(primitive_to_conservative(w, GAS, P_INF), GAS, P_INF)
    scale = np.array([P_INF, max(abs(u), abs(v), 1.0), max(abs(u), abs(v), 1.0), T])
    assert np.all(np.abs(back - w) <= 1e-14 * scale * 8)


@pytest.mark.parametrize("w", [[0.0, 1.0, 0.0, 0.0], [0.0, 1.0, 0.0, -3.0], [-P_INF, 0, 0, 300.0]])
def test_non_physical_state_rejected_with_node(w):
    with pytest.raises(NonPhysicalStateError, match="node 0"):
        primitive_to_conservative(np.array([w]), GAS, P_INF)


def test_conservative_jacobian_matches_difference():
    w = np.array([[1200.0, 80.0, -30.0, 300.0]])
    M = conservative_jacobian(w, GAS, P_INF)[0]
    scales = [1.0, 1e-3, 1e-3, 1e-4]
    for i, h in enumerate(scales):
        d = np.zeros(4)
        d[i] = h
        fd = (primitive_to_conservative(w[0] + d, GAS, P_INF)
              - primitive_to_conservative(w[0] - d, GAS, P_INF)) / (2 * h)
        assert np.allclose(M[:, i], fd, rtol=1e-7, atol=1e-12)


def test_l1_norms_examples():
    assert np.all(l1_norms(np.zeros((5, 4))) == 0.0)
    res = np.zeros((2, 4))
    res[:, 0] = [3.0, -1.0]
    assert l1_norms(res)[0] == 2.0


def test_l1_norms_against_extended_precision():
    import mpmath

    rng = np.random.default_rng(4)
    res = rng.standard_normal((1000, 4)) * np.array([1e-3, 1.0, 1e2, 1e5])
    norms = l1_norms(res)
    with mpmath.workdps(40):
        for i in range(4):
            ref = mpmath.fsum(abs(mpmath.mpf(float(v))) for v in res[:, i]) / res.shape[0]
            assert abs(norms[i] - float(ref)) <= 1e-15 * float(ref)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(1e-3, 1e3))
def test_l1_norms_permutation_and_homogeneity(seed, c):
    rng = np.random.default_rng(seed)
    res = rng.standard_normal((17, 4))
    perm = rng.permutation(17)
    assert np.allclose(l1_norms(res[perm]), l1_norms(res), rtol=1e-15, atol=0)
    assert np.allclose(l1_norms(c * res), c * l1_norms(res), rtol=1e-14)


def test_residual_field_caches_norms():
    r = ResidualField(np.ones((3, 4)))
    assert r.norms is r.norms
    assert np.all((r - r).norms == 0.0)


def test_gas_and_freestream_validation():
    with pytest.raises(ValueError):
        GasModel(gamma=1.0)
    with pytest.raises(ValueError):
        GasModel(gas_constant=0.0)
    with pytest.raises(ValueError):
        FreestreamConditions(mach=0.5, p_inf=0.0)
    with pytest.raises(ValueError):
        FreestreamConditions(mach=-0.1)


def test_freestream_derived_quantities():
    fs = FreestreamConditions(mach=0.85, angle_of_attack=1.25)
    a = np.sqrt(1.4 * 287.05 * 288.15)
    assert fs.a_inf == pytest.approx(a, rel=1e-15)
    u, v = fs.velocity
    assert u == pytest.approx(0.85 * a * np.cos(np.radians(1.25)), rel=1e-15)
    assert v == pytest.approx(0.85 * a * np.sin(np.radians(1.25)), rel=1e-15)
    assert fs.w_inf[0] == 0.0
    visc = FreestreamConditions(mach=0.15, reynolds=1e4)
    mu = visc.viscosity_from_reynolds()
    assert visc.rho_inf * visc.speed * 1.0 / mu == pytest.approx(1e4, rel=1e-14)

import math

import numpy as np
import pytest
from conftest import random_state

from curvednbody.dynamics import (
    IntegratorOptions,
    SystemState,
    accelerations,
    diagnostics_of,
    integrate,
)
from curvednbody.errors import LengthMismatch, OffManifold, SingularConfiguration, StepUnderflow
from curvednbody.geometry import dot_sigma, wedge_bivector
from curvednbody.rotopulsator import RotopulsatorClass, RotopulsatorSpec, build


def _state(q, v, m, sigma):
    return SystemState(0.0, np.array(q, float), np.array(v, float), m, sigma)


def test_single_body_acceleration():
    st = _state([[1, 0, 0, 0]], [[0, 1, 0, 0]], [1.0], 1)
    np.testing.assert_array_equal(accelerations(st), [[-1, 0, 0, 0]])


def test_orthogonal_pair_on_sphere():
    st = _state([[1, 0, 0, 0], [0, 1, 0, 0]], np.zeros((2, 4)), [1.0, 1.0], 1)
    np.testing.assert_allclose(accelerations(st), [[0, 1, 0, 0], [1, 0, 0, 0]], atol=1e-16)


def test_pair_on_hyperboloid():
    r2 = math.sqrt(2)
    st = _state([[1, 0, 0, r2], [-1, 0, 0, r2]], np.zeros((2, 4)), [1.0, 1.0], -1)
    expected = np.array([-4, 0, 0, -2 * r2]) / 8**1.5
    np.testing.assert_allclose(accelerations(st)[0], expected, rtol=1e-14, atol=1e-17)
    np.testing.assert_allclose(accelerations(st)[0], [-0.176777, 0, 0, -0.125], atol=1e-6)


def test_acceleration_matches_pairwise_loop(rng):
    # oracle: straightforward double loop over pairs
    for sigma in (1, -1):
        st = random_state(rng, 4, sigma)
        q, v, m = st.positions, st.velocities, st.masses
        ref = np.zeros_like(q)
        for i in range(4):
            for j in range(4):
                if i != j:
                    c = dot_sigma(q[i], q[j], sigma)
                    ref[i] += m[j] * (q[j] - sigma * c * q[i]) / (sigma - sigma * c * c) ** 1.5
            ref[i] -= sigma * dot_sigma(v[i], v[i], sigma) * q[i]
        np.testing.assert_allclose(accelerations(st), ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("sigma", [1, -1])
def test_second_derivative_of_constraint_vanishes(rng, sigma):
    # d^2/dt^2 (q.q) = 2 (q.a + v.v) = 0 on the manifold
    for _ in range(200):
        st = random_state(rng, 3, sigma)
        a = accelerations(st)
        val = dot_sigma(st.positions, a, sigma) + dot_sigma(st.velocities, st.velocities, sigma)
        scale = 1 + np.abs(a).max() * np.abs(st.positions).max()
        assert np.all(np.abs(val) <= 1e-12 * scale)


@pytest.mark.parametrize("sigma", [1, -1])
def test_wedge_rate_vanishes(rng, sigma):
    # d/dt sum m q^v = sum m q^a
    for _ in range(50):
        st = random_state(rng, 4, sigma)
        rate = wedge_bivector(st.positions, accelerations(st), st.masses)
        scale = np.abs(accelerations(st)).max() * np.abs(st.positions).max() * st.masses.sum()
        assert np.abs(rate).max() <= 1e-12 * scale


def test_collision_raises_with_pair():
    q = [[1, 0, 0, 0], [0, 1, 0, 0], [1, 0, 0, 0]]
    st = _state(q, np.zeros((3, 4)), [1, 1, 1], 1)
    with pytest.raises(SingularConfiguration) as exc:
        accelerations(st)
    assert (exc.value.i, exc.value.j) == (0, 2)


def test_state_validation():
    with pytest.raises(OffManifold):
        _state([[2, 0, 0, 0]], np.zeros((1, 4)), [1], 1)
    with pytest.raises(OffManifold):
        _state([[1, 0, 0, 0]], [[1, 0, 0, 0]], [1], 1)
    with pytest.raises(OffManifold):
        _state([[0, 0, 0, -1]], np.zeros((1, 4)), [1], -1)
    with pytest.raises(LengthMismatch):
        _state([[1, 0, 0, 0]], np.zeros((1, 4)), [1, 1], 1)
    with pytest.raises(ValueError):
        _state([[1, 0, 0, 0]], np.zeros((1, 4)), [0.0], 1)


def test_state_is_immutable_and_compares_by_value():
    a = _state([[1, 0, 0, 0]], [[0, 1, 0, 0]], [1], 1)
    b = _state([[1, 0, 0, 0]], [[0, 1, 0, 0]], [1], 1)
    assert a == b
    with pytest.raises(ValueError):
        a.positions[0, 0] = 3.0


def test_options_validation():
    with pytest.raises(ValueError):
        IntegratorOptions(method="euler")
    with pytest.raises(ValueError):
        IntegratorOptions(rtol=0)
    with pytest.raises(ValueError):
        IntegratorOptions(sample_dt=-1)


def test_great_circle_period():
    st = _state([[1, 0, 0, 0]], [[0, 1, 0, 0]], [1], 1)
    traj = integrate(st, 2 * math.pi, IntegratorOptions(rtol=1e-12, atol=1e-14, sample_dt=0.5))
    np.testing.assert_allclose(traj.states[-1].positions[0], [1, 0, 0, 0], atol=1e-8)
    assert traj.times[-1] == 2 * math.pi
    assert np.all(np.diff(traj.times) > 0)


def _two_body(sigma):
    spec = RotopulsatorSpec(
        RotopulsatorClass.POSITIVE_ELLIPTIC if sigma == 1 else RotopulsatorClass.NEGATIVE_ELLIPTIC,
        2, r0=0.5, rdot0=0.1, thetadot0=0.8, z1_0=0.2, z1dot0=0.05,
    )
    return build(spec)


def test_rk4_is_fourth_order():
    st = _two_body(1)
    ref = integrate(st, 1.0, IntegratorOptions(rtol=1e-13, atol=1e-15, sample_dt=1.0)).states[-1].positions
    errs = []
    for h in (0.05, 0.025):
        end = integrate(st, 1.0, IntegratorOptions(method="rk4", h0=h, sample_dt=1.0)).states[-1].positions
        errs.append(np.abs(end - ref).max())
    assert 8 <= errs[0] / errs[1] <= 32


@pytest.mark.parametrize("sigma", [1, -1])
def test_time_reversal(sigma):
    st = _two_body(sigma)
    opts = IntegratorOptions(rtol=1e-11, atol=1e-13, sample_dt=1.0)
    end = integrate(st, 5.0, opts).states[-1]
    back = SystemState(0.0, end.positions, -end.velocities, end.masses, sigma)
    final = integrate(back, 5.0, opts).states[-1]
    np.testing.assert_allclose(final.positions, st.positions, atol=1e-6)
    np.testing.assert_allclose(final.velocities, -st.velocities, atol=1e-6)


@pytest.mark.parametrize("sigma", [1, -1])
def test_wedge_and_constraint_along_random_run(rng, sigma):
    st = random_state(rng, 3, sigma, speed=0.3)
    traj = integrate(st, 2.0, IntegratorOptions(rtol=1e-11, atol=1e-13, sample_dt=0.1))
    w = np.array([d.wedge for d in traj.diagnostics])
    assert np.abs(w - w[0]).max() <= 1e-8 * max(1.0, np.abs(w[0]).max())
    assert max(d.max_constraint_residual for d in traj.diagnostics) <= 1e-12


def test_rk4_samples_on_grid():
    traj = integrate(_two_body(-1), 1.0, IntegratorOptions(method="rk4", sample_dt=0.25))
    np.testing.assert_allclose(traj.times, [0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)
    assert traj.stats.steps_accepted == 4


def test_step_underflow():
    with pytest.raises(StepUnderflow):
        integrate(_two_body(1), 1.0, IntegratorOptions(min_step=10.0))


def test_head_on_collision_raises():
    spec = RotopulsatorSpec(RotopulsatorClass.POSITIVE_ELLIPTIC, 2, r0=0.5, rdot0=-0.5)
    with pytest.raises(SingularConfiguration):
        integrate(build(spec), 10.0)


def test_diagnostics_examples(rng):
    st = _two_body(1)
    d = diagnostics_of(st)
    assert d.max_constraint_residual <= 1e-12
    assert d.max_tangency_residual <= 1e-12
    assert d.rho_sq_phi_dot is None
    rest = SystemState(0.0, st.positions, np.zeros((2, 4)), st.masses, 1)
    assert not np.any(diagnostics_of(rest).wedge)
    heavy = SystemState(0.0, st.positions, st.velocities, 2 * st.masses, 1)
    np.testing.assert_array_equal(diagnostics_of(heavy).wedge, 2 * d.wedge)

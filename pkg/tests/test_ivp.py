import math

import numpy as np
import pytest

from floquetkit.ivp import (DivergenceError, IvpSpec, StepLimitError,
                            fundamental_matrix, integrate)
from floquetkit.periodic import PeriodicFn

from conftest import TWO_PI, random_planar_system


def test_scalar_exponential():
    spec = IvpSpec(1, lambda t, y: -y, 0.0, 1.0, [1.0])
    traj = integrate(spec)
    assert traj.final[0] == pytest.approx(math.exp(-1.0), abs=1e-9)


def test_rotation_returns_to_start():
    spec = IvpSpec(2, lambda t, y: np.array([y[1], -y[0]]), 0.0, TWO_PI,
                   [1.0, 0.0])
    traj = integrate(spec)
    assert np.max(np.abs(traj.final - [1.0, 0.0])) <= 1e-8


def test_riccati_blow_up_reports_escape_time():
    spec = IvpSpec(1, lambda t, y: y ** 2, 0.0, 2.0, [1.0])
    with pytest.raises(DivergenceError) as err:
        integrate(spec)
    # x(t) = 1/(1-t): escape detected just before the pole at t = 1
    assert err.value.escape_time == pytest.approx(1.0, abs=1e-6)
    assert err.value.state[0] > 0


def test_step_limit():
    spec = IvpSpec(1, lambda t, y: np.array([math.sin(40 * t)]), 0.0, 50.0,
                   [0.0], max_steps=10)
    with pytest.raises(StepLimitError):
        integrate(spec)


def test_determinism_bit_identical():
    def rhs(t, y):
        return np.array([y[1], -math.sin(t) * y[0]])
    t1 = integrate(IvpSpec(2, rhs, 0.0, 10.0, [1.0, 0.0]))
    t2 = integrate(IvpSpec(2, rhs, 0.0, 10.0, [1.0, 0.0]))
    assert np.array_equal(t1.ts, t2.ts)
    assert np.array_equal(t1.ys, t2.ys)


def test_tolerance_monotonicity():
    fn = PeriodicFn("0.4+0.3*sin(t)", TWO_PI)
    gn = PeriodicFn("0.2*cos(t)", TWO_PI)
    entries = ((fn, gn), (gn, fn))
    loose = fundamental_matrix(entries, TWO_PI, 1e-8, 1e-10)
    tight = fundamental_matrix(entries, TWO_PI, 1e-10, 1e-12)
    assert np.max(np.abs(loose - tight)) < 1e-8 * (1 + np.max(np.abs(tight)))


def test_checkpoints_are_exact_nodes():
    nodes = np.linspace(0.0, 1.0, 17)[1:-1]
    spec = IvpSpec(1, lambda t, y: -y, 0.0, 1.0, [1.0])
    traj = integrate(spec, checkpoints=nodes)
    for node in nodes:
        assert node in traj.ts
        idx = int(np.searchsorted(traj.ts, node))
        assert traj.ys[idx, 0] == pytest.approx(math.exp(-node), abs=1e-11)


def test_dense_output_accuracy():
    spec = IvpSpec(2, lambda t, y: np.array([y[1], -y[0]]), 0.0, TWO_PI,
                   [1.0, 0.0], dense=True)
    traj = integrate(spec)
    ts = np.linspace(0.1, TWO_PI - 0.1, 57)
    vals = traj.at(ts)
    assert np.max(np.abs(vals[:, 0] - np.cos(ts))) < 1e-8
    assert np.max(np.abs(vals[:, 1] + np.sin(ts))) < 1e-8


def test_dense_output_requires_flag():
    traj = integrate(IvpSpec(1, lambda t, y: -y, 0.0, 1.0, [1.0]))
    with pytest.raises(ValueError):
        traj.at(0.5)


def test_fundamental_matrix_diag():
    phi = fundamental_matrix(((lambda t: -1.0, lambda t: 0.0),
                              (lambda t: 0.0, lambda t: -2.0)), 1.0)
    assert phi[0, 0] == pytest.approx(math.exp(-1.0), rel=1e-10)
    assert phi[1, 1] == pytest.approx(math.exp(-2.0), rel=1e-10)
    assert abs(phi[0, 1]) + abs(phi[1, 0]) < 1e-12


def test_fundamental_matrix_rotation_identity():
    phi = fundamental_matrix(((lambda t: 0.0, lambda t: 1.0),
                              (lambda t: -1.0, lambda t: 0.0)), TWO_PI)
    assert np.max(np.abs(phi - np.eye(2))) <= 1e-8


def test_liouville_identity_random_systems(rng):
    # det Phi(T) = exp(int trace): the global sanity invariant
    for _ in range(12):
        sys = random_planar_system(rng)
        phi = fundamental_matrix(sys.entries(), TWO_PI)
        det = phi[0, 0] * phi[1, 1] - phi[0, 1] * phi[1, 0]
        expected = math.exp(sys.trace_integral())
        assert det == pytest.approx(expected, rel=1e-8)


def test_against_scipy_oracle():
    from scipy.integrate import solve_ivp

    def rhs(t, y):
        return np.array([y[1], -np.exp(0.2 * np.sin(t)) * y[0] - 0.1 * y[1]])
    ours = integrate(IvpSpec(2, rhs, 0.0, 7.0, [0.3, -0.2]))
    ref = solve_ivp(rhs, [0.0, 7.0], [0.3, -0.2], method="DOP853",
                    rtol=1e-12, atol=1e-14)
    assert np.max(np.abs(ours.final - ref.y[:, -1])) < 1e-9


def test_spec_validation():
    with pytest.raises(ValueError):
        IvpSpec(1, lambda t, y: -y, 1.0, 0.0, [1.0])   # t0 >= t1
    with pytest.raises(ValueError):
        IvpSpec(1, lambda t, y: -y, 0.0, 1.0, [1.0], rel_tol=0.0)
    with pytest.raises(ValueError):
        IvpSpec(2, lambda t, y: -y, 0.0, 1.0, [1.0])   # wrong state length

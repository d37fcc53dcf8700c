import csv

import numpy as np
import pytest

from robust_sof import simulator as sim
from robust_sof.system import NO_NONLINEARITY, DisturbanceSignal, UncertaintySignal, UncertainSystem


def scalar_like(A, H=None, B2=None):
    """Two-state plant with an identity-free structure for closed-form checks."""
    n = 2
    return UncertainSystem(A=A, B1=[[1.0], [0.0]], B2=np.eye(n)[:, :1] if B2 is None else B2,
                           C=[[1.0, 0.0]], D=np.zeros((1, 1)), H=np.eye(n) if H is None else H,
                           M1=np.zeros((n, 1)), M2=np.zeros((1, 1)), N=np.zeros((1, n)), phi=NO_NONLINEARITY)


def test_geometric_decay():
    s = scalar_like(0.5 * np.eye(2))
    x0 = np.array([1.0, -2.0])
    tr = sim.simulate(s, np.zeros((1, 1)), x0=x0, horizon=10)
    for k in range(11):
        np.testing.assert_array_equal(tr.x[k], 0.5**k * x0)


def test_zero_equilibrium(plant, design):
    tr = sim.simulate(plant, design.K, None, UncertaintySignal("random_switching", q=2), None, None, 20)
    assert not np.any(tr.x)


def test_impulse_gain_of_zero_plant():
    s = scalar_like(np.zeros((2, 2)))
    w = DisturbanceSignal("impulse", d=1)
    assert sim.empirical_l2_gain(s, np.zeros((1, 1)), None, None, [w], 5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sim.empirical_l2_gain(s, np.zeros((1, 1)), None, None, [DisturbanceSignal("zero", d=1)], 5)


def test_gain_homogeneous_for_linear_loop(plant, design):
    lin = plant.replace(phi=NO_NONLINEARITY)
    F = UncertaintySignal("random_switching", q=2, seed=1)
    w = DisturbanceSignal("finite_random", d=1, seed=2, horizon=30)
    g1 = sim.empirical_l2_gain(lin, design.K, None, F, [w], 80)
    g2 = sim.empirical_l2_gain(lin, design.K, None, F, [w.scaled(2.0)], 80)
    assert g1 == pytest.approx(g2, abs=1e-9)


def test_replay_and_determinism(plant, design):
    F = UncertaintySignal("random_switching", q=2, seed=5)
    w = DisturbanceSignal("finite_random", d=1, seed=6, horizon=20)
    x0 = np.array([0.3, -0.2, 0.1, 0.5, -0.4])
    a = sim.simulate(plant, design.K, None, F, w, x0, 60, design.P)
    b = sim.simulate(plant, design.K, None, F, w, x0, 60, design.P)
    assert a.replay_residual(plant) <= 1e-12
    for name in ("x", "u", "y", "z", "w", "V"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert a.horizon == 60 and len(a.k) == 61


def test_divergence_keeps_partial_trajectory():
    s = scalar_like(10.0 * np.eye(2))
    with pytest.raises(sim.Diverged) as err:
        sim.simulate(s, np.zeros((1, 1)), x0=[1.0, 1.0], horizon=50)
    assert 5 <= err.value.trajectory.horizon < 50


def test_lyapunov_check(plant, design):
    x0 = np.ones(5) / np.sqrt(5)
    F = UncertaintySignal("random_switching", q=2, seed=3)
    good = sim.simulate(plant, design.K, None, F, None, x0, 100, design.P)
    assert sim.lyapunov_decrement_check(good) == (True, None)
    bad = sim.simulate(plant, np.zeros((3, 2)), None, F, None, x0, 40, design.P)
    ok, idx = sim.lyapunov_decrement_check(bad)
    assert not ok and idx is not None
    zero = sim.simulate(plant, design.K, None, F, None, None, 10, design.P)
    assert sim.lyapunov_decrement_check(zero)[0]
    with pytest.raises(ValueError):
        sim.lyapunov_decrement_check(sim.simulate(plant, design.K, horizon=3))


def test_csv_layout(tmp_path, plant, design):
    tr = sim.simulate(plant, design.K, None, None, None, np.ones(5), 7, design.P)
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["k", *[f"x{i}" for i in range(1, 6)], "u1", "u2", "u3", "y1", "y2",
                       *[f"z{i}" for i in range(1, 6)], "w1", "V"]
    assert len(rows) == 1 + 8
    assert float(rows[3][1]) == tr.x[2, 0]  # 17 significant digits round-trip exactly


def test_monte_carlo(plant, design):
    assert sim.monte_carlo_robustness(plant, design.K, None, 0.0, trials=10, seed=1) == 1.0
    res = sim.monte_carlo_robustness(plant, design.K, None, 0.05, trials=5, seed=1, detail=True)
    assert len(res.converged) == 5
    with pytest.raises(ValueError):
        sim.monte_carlo_robustness(plant, design.K, None, -0.1)


def test_random_perturbation_lipschitz(rng):
    from robust_sof.system import estimate_lipschitz
    d = sim.random_sinusoid_perturbation(5, 0.2, rng)
    assert d.lipschitz == pytest.approx(0.2)
    assert estimate_lipschitz(d, samples=3000) <= 0.2 + 1e-9

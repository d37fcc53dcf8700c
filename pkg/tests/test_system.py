import json

import numpy as np
import pytest

from robust_sof.cli import benchmark_path
from robust_sof.system import (
    DisturbanceSignal,
    NonlinearityDescriptor,
    SystemDimensionError,
    SystemParseError,
    SystemRankError,
    UncertaintySignal,
    UncertainSystem,
    benchmark_system,
    coordinate_sinusoid_lipschitz,
    estimate_lipschitz,
    load_system,
    save_system,
    system_from_dict,
)


def test_benchmark_dimensions(plant):
    assert (plant.n, plant.m, plant.p, plant.q, plant.d) == (5, 3, 2, 2, 1)
    assert plant.phi.lipschitz == pytest.approx(0.3)
    # open loop is unstable
    assert np.max(np.abs(np.linalg.eigvals(plant.A))) > 1.0


def test_bundled_file_matches_builtin(plant):
    loaded = load_system(benchmark_path())
    for name in UncertainSystem.MATRICES:
        np.testing.assert_array_equal(getattr(loaded, name), getattr(plant, name))
    assert loaded.phi == plant.phi


def test_roundtrip(tmp_path, plant):
    path = tmp_path / "s.json"
    save_system(plant, path)
    again = load_system(path)
    np.testing.assert_array_equal(again.A, plant.A)


def _dict(plant, **changes):
    d = plant.to_dict()
    d.update(changes)
    return d


def test_unknown_field_rejected(plant):
    with pytest.raises(SystemParseError, match="Bogus"):
        system_from_dict(_dict(plant, Bogus=1))


def test_shape_mismatch_named(plant):
    d = _dict(plant, B1=np.zeros((5, 2)).tolist())
    with pytest.raises(SystemDimensionError, match="B1"):
        system_from_dict(d)


def test_rank_deficient_b1(plant):
    with pytest.raises(SystemRankError):
        plant.replace(B1=np.ones((5, 3)))


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SystemParseError):
        load_system(p)
    p.write_text(json.dumps({"n": -1}))
    with pytest.raises(SystemParseError, match="n"):
        load_system(p)


def test_closed_loop_matrices(plant, rng):
    K = rng.normal(size=(3, 2))
    cl = plant.closed_loop(K)
    np.testing.assert_allclose(cl.A, plant.A + plant.B1 @ K @ plant.C)
    np.testing.assert_allclose(cl.M1, plant.M1 + plant.B1 @ K @ plant.M2)
    np.testing.assert_allclose(cl.B, plant.B2 + plant.B1 @ K @ plant.D)


def test_sinusoid_lipschitz():
    # two components read the same source: constants combine in quadrature
    assert coordinate_sinusoid_lipschitz([0.3, 0.4], [0, 0]) == pytest.approx(0.5)
    assert coordinate_sinusoid_lipschitz([0.3, 0.4], [0, 1]) == pytest.approx(0.4)


def test_estimate_lipschitz_below_bound(plant):
    est = estimate_lipschitz(plant.phi, samples=4000, seed=1)
    assert 0.25 < est <= 0.3 + 1e-9
    assert estimate_lipschitz(plant.phi, samples=8000, seed=1) >= est


def test_nonlinearity_sum():
    a = NonlinearityDescriptor.sinusoid([0.1, 0.0], [1, 1])
    b = NonlinearityDescriptor.sinusoid([0.0, 0.2], [2, 2])
    s = a + b
    assert s.lipschitz == pytest.approx(0.3)
    np.testing.assert_allclose(s(np.array([0.5, 1.0])), [0.1 * np.sin(0.5), 0.2 * np.sin(1.0)])


def test_uncertainty_signals_admissible():
    for kind in ("zero", "constant", "random_switching", "sinusoidal"):
        sig = UncertaintySignal(kind, q=3, seed=4)
        for k in range(20):
            assert np.linalg.norm(sig.at(k), 2) <= 1.0 + 1e-12
    sig = UncertaintySignal("random_switching", q=3, seed=4)
    np.testing.assert_array_equal(sig.at(7), sig.at(7))
    assert not np.allclose(sig.at(7), sig.at(8))
    with pytest.raises(ValueError):
        UncertaintySignal("constant", q=2, matrix=2 * np.eye(2))


def test_disturbances(tmp_path):
    imp = DisturbanceSignal("impulse", d=2, amplitude=3.0)
    assert imp.energy() == pytest.approx(9.0)
    np.testing.assert_array_equal(imp.at(1), [0.0, 0.0])
    r = DisturbanceSignal("finite_random", d=1, seed=3, horizon=10)
    assert r.at(10)[0] == 0.0
    assert r.scaled(2.0).energy() == pytest.approx(4.0 * r.energy())
    p = tmp_path / "w.csv"
    p.write_text("1,2\n3,4\n")
    f = DisturbanceSignal.from_file(p, 2)
    assert f.horizon == 2 and f.energy() == pytest.approx(30.0)
    with pytest.raises(ValueError):
        DisturbanceSignal.from_file(p, 3)


def test_benchmark_h_scale():
    np.testing.assert_allclose(benchmark_system(0.5).H, 0.5 * np.eye(5))

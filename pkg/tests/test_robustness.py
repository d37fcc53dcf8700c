import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_sof import robustness as rb
from robust_sof.matrix_core import spectral_norm


def test_normwise_margin_examples():
    assert rb.normwise_margin(0.3, 1.6584) == pytest.approx(1.3584)
    assert rb.normwise_margin(0.7, 0.7) == 0.0
    assert rb.normwise_margin(0.5, 0.3) == pytest.approx(-0.2)
    with pytest.raises(ValueError):
        rb.normwise_margin(-0.1, 1.0)


def test_jacobian_margin_examples():
    assert rb.jacobian_margin_check(1.0, 1.3584)
    assert rb.jacobian_margin_check(1.3584, 1.3584)
    assert not rb.jacobian_margin_check(2.0, 1.3584)
    # a negative margin admits only the zero perturbation
    assert rb.jacobian_margin_check(0.0, -0.2)
    assert not rb.jacobian_margin_check(0.01, -0.2)


def test_hadamard_lemma_examples():
    assert rb.check_hadamard_lemma(np.eye(2), np.eye(2))
    assert rb.check_hadamard_lemma(np.zeros((3, 3)), np.ones((3, 3)))
    with pytest.raises(ValueError):
        rb.check_hadamard_lemma(2 * np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        rb.check_hadamard_lemma(np.eye(2), np.eye(3))


@settings(max_examples=100)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_hadamard_lemma_random(n, seed):
    g = np.random.default_rng(seed)
    S = g.normal(size=(n, n))
    T = np.abs(S) + np.abs(g.normal(size=(n, n)))
    assert rb.check_hadamard_lemma(S, T)


def test_admissible_perturbation_examples():
    Gs = np.abs(np.random.default_rng(0).normal(size=(4, 4)))
    assert rb.admissible_perturbation_check(np.zeros((4, 4)), Gs)
    edge = Gs / math.sqrt(4)
    assert rb.admissible_perturbation_check(edge, Gs)
    assert spectral_norm(edge) == pytest.approx(spectral_norm(Gs) / 2)
    assert not rb.admissible_perturbation_check(Gs, Gs)


def test_elementwise_bounds_examples():
    Gs = np.full((4, 4), 2.0)
    lo, hi = rb.elementwise_bounds(np.full((4, 4), 0.5), Gs)
    np.testing.assert_allclose(lo, -1.5)
    np.testing.assert_allclose(hi, 0.5)
    lo, hi = rb.elementwise_bounds(np.zeros((4, 4)), Gs)
    np.testing.assert_allclose(lo, -hi)
    lo, hi = rb.elementwise_bounds(Gs / 2, Gs)
    assert np.all(hi == 0.0)
    with pytest.raises(ValueError):
        rb.elementwise_bounds(np.zeros((2, 2)), -np.ones((2, 2)))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_elementwise_bounds_identities(n, seed):
    g = np.random.default_rng(seed)
    G, Gs = g.normal(size=(n, n)), np.abs(g.normal(size=(n, n)))
    lo, hi = rb.elementwise_bounds(G, Gs)
    assert np.all(lo <= hi)
    np.testing.assert_allclose(hi + G, Gs / math.sqrt(n), atol=1e-12)
    np.testing.assert_allclose(lo + G, -Gs / math.sqrt(n), atol=1e-12)


def test_report_json():
    rep = rb.robustness_report(0.3, 0.5, Gamma_star=np.eye(2))
    d = rep.to_dict()
    assert d["normwise_margin"] == pytest.approx(0.2)
    assert len(d["elementwise_upper"]) == 2

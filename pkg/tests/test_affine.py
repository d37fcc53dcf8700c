import numpy as np
import pytest

from robust_sof.affine import Affine, ProblemBuilder, bmat, lift


def test_symmetric_coordinates_preserve_inner_product(rng):
    b = ProblemBuilder()
    S = b.symmetric("S", 3)
    v = rng.normal(size=b.num_vars)
    M = S.value(v)
    np.testing.assert_allclose(M, M.T)
    # coordinate norm equals Frobenius norm
    assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(M))


def test_matrix_variable_is_column_major():
    b = ProblemBuilder()
    X = b.matrix("X", 2, 3)
    v = np.arange(6.0)
    np.testing.assert_array_equal(X.value(v), np.arange(6.0).reshape(2, 3, order="F"))
    assert b.variables["X"].size == 6


def test_algebra(rng):
    b = ProblemBuilder()
    X = b.matrix("X", 2, 2)
    t = b.scalar("t")
    A, B = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    expr = A @ X @ B + 2 * X.T - X + t * np.eye(2) + 1.0
    v = rng.normal(size=b.num_vars)
    Xv, tv = X.value(v), t.value(v)[0, 0]
    np.testing.assert_allclose(expr.value(v), A @ Xv @ B + 2 * Xv.T - Xv + tv * np.eye(2) + 1.0)
    assert (1.0 - t).value(v)[0, 0] == pytest.approx(1.0 - tv)


def test_products_of_variables_rejected():
    b = ProblemBuilder()
    X = b.matrix("X", 2, 2)
    with pytest.raises(TypeError):
        X @ X
    with pytest.raises(TypeError):
        X * X


def test_bmat_infers_zero_blocks():
    b = ProblemBuilder()
    X = b.matrix("X", 2, 3)
    M = bmat([[X, None], [None, np.eye(1)]])
    assert M.shape == (3, 4)
    with pytest.raises(ValueError):
        bmat([[X, np.eye(3)]])


def test_builder_guards():
    b = ProblemBuilder()
    b.scalar("a")
    with pytest.raises(ValueError):
        b.scalar("a")
    with pytest.raises(ValueError):
        b.lmi_neg(lift(np.ones((2, 3))))
    with pytest.raises(ValueError):
        b.minimize(lift(np.eye(2)))
    with pytest.raises(ValueError):
        Affine(np.zeros((2, 2)), np.zeros((1, 3, 3)))

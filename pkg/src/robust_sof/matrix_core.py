"""Dense real matrix helpers used across the package.

Matrices are plain ``numpy.ndarray`` objects. The helpers here add the
element-wise order, the column-stacking ``vec`` operator and a few
definiteness tests, plus two classical bounding inequalities that are
exposed as numerical checks for property testing.
"""

from __future__ import annotations

import numpy as np

DEFAULT_ATOL = 1e-10


class DimensionError(ValueError):
    """Raised when operands have incompatible shapes."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float array.

    Scalars become 1x1 and 1-D input becomes a column vector.
    """
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def kron(a, b) -> np.ndarray:
    """Kronecker product; block (i, j) of the result is ``a[i, j] * b``."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def hadamard(a, b) -> np.ndarray:
    """Entrywise product of two equally shaped matrices."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"hadamard needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def vec(a) -> np.ndarray:
    """Stack the columns of ``a`` into a single column vector."""
    a = as_matrix(a, "a")
    return a.reshape(-1, 1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v, dtype=float).reshape(rows, cols, order="F")


def elementwise_leq(a, b) -> bool:
    """True iff ``a[i, j] <= b[i, j]`` for every entry."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"elementwise_leq needs equal shapes, got {a.shape} and {b.shape}")
    return bool(np.all(a <= b))


def sym_eigvalsh(a) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix.

    LAPACK's symmetric driver (Householder tridiagonalisation followed by an
    implicit QL/QR or divide-and-conquer sweep) is used; only the symmetric
    part of ``a`` is read.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    return np.linalg.eigvalsh(symmetrize(a))


def lambda_max(a) -> float:
    return float(sym_eigvalsh(a)[-1])


def lambda_min(a) -> float:
    return float(sym_eigvalsh(a)[0])


def singular_values(a) -> np.ndarray:
    """Descending singular values, computed from the Gram matrix spectrum."""
    a = as_matrix(a)
    gram = a.T @ a if a.shape[0] >= a.shape[1] else a @ a.T
    ev = np.clip(sym_eigvalsh(gram), 0.0, None)
    return np.sqrt(ev)[::-1]


def spectral_norm(a) -> float:
    """Induced 2-norm (largest singular value)."""
    return float(singular_values(a)[0])


def default_margin(a) -> float:
    a = np.asarray(a, dtype=float)
    return 1e-9 * (1.0 + float(np.max(np.abs(a)))) if a.size else 1e-9


def is_positive_definite(a, margin: float | None = None) -> bool:
    """True iff the smallest eigenvalue of symmetric ``a`` exceeds ``margin``.

    ``margin`` defaults to ``1e-9 * (1 + max|a_ij|)``.
    """
    a = as_matrix(a)
    if margin is None:
        margin = default_margin(a)
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    return lambda_min(a) > margin


def rank(a, rtol: float = 1e-9) -> int:
    """Numerical rank with a threshold relative to the largest singular value."""
    s = np.linalg.svd(as_matrix(a), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def check_lemma1(x, y, p) -> bool:
    """Evaluate ``2 x'y <= x'Px + y'P^{-1}y`` for positive definite ``P``."""
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    p = symmetrize(as_matrix(p, "p"))
    if not is_positive_definite(p, 0.0):
        raise ValueError("p must be positive definite")
    lhs = 2.0 * float((x.T @ y)[0, 0])
    rhs = float((x.T @ p @ x)[0, 0]) + float((y.T @ np.linalg.solve(p, y))[0, 0])
    return lhs <= rhs + 1e-12 * (1.0 + abs(rhs))


def check_lemma2(a, d, e, f, p, eps: float) -> bool:
    """Evaluate the norm-bounded perturbation bound in the semidefinite order.

    Checks ``(A + D F E)' P (A + D F E) <= A' (P^{-1} - D D'/eps)^{-1} A + eps E'E``
    by the sign of the smallest eigenvalue of the difference.
    """
    a, d, e, f = (as_matrix(m, nm) for m, nm in ((a, "a"), (d, "d"), (e, "e"), (f, "f")))
    p = symmetrize(as_matrix(p, "p"))
    if eps <= 0:
        raise ValueError("eps must be positive")
    if spectral_norm(f) > 1.0 + 1e-12:
        raise ValueError("f must satisfy F'F <= I")
    if not is_positive_definite(p, 0.0):
        raise ValueError("p must be positive definite")
    inner = np.linalg.inv(p) - d @ d.T / eps
    if not is_positive_definite(inner, 0.0):
        raise ValueError("P^{-1} - D D'/eps must be positive definite")
    pert = a + d @ f @ e
    lhs = pert.T @ p @ pert
    rhs = a.T @ np.linalg.solve(inner, a) + eps * e.T @ e
    diff = symmetrize(rhs - lhs)
    scale = 1.0 + float(np.max(np.abs(rhs)))
    return lambda_min(diff) >= -1e-10 * scale

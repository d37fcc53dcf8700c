"""Affine matrix expressions over SDP decision variables.

A tiny modelling layer: matrix, symmetric and scalar variables are mapped
onto coordinates of the SDP decision vector, expressions stay affine under
``+``, ``-``, scalar scaling, multiplication by constant matrices, transposition
and block assembly, and :class:`ProblemBuilder` collects the resulting LMI
blocks and equalities into an :class:`~robust_sof.sdp.SdpProblem`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sdp import DEFAULT_BOUND, LmiBlock, SdpProblem

_SQRT2 = math.sqrt(2.0)


class Affine:
    """``const + sum_i v_i * coef[i]`` for a decision vector ``v``."""

    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, const, coef):
        self.const = np.asarray(const, dtype=float)
        self.coef = np.asarray(coef, dtype=float)
        if self.const.ndim != 2 or self.coef.shape[1:] != self.const.shape:
            raise ValueError(f"inconsistent affine shapes {self.const.shape} / {self.coef.shape}")

    @property
    def shape(self):
        return self.const.shape

    @property
    def nvars(self) -> int:
        return self.coef.shape[0]

    @property
    def T(self) -> "Affine":
        return Affine(self.const.T, self.coef.transpose(0, 2, 1))

    def padded(self, k: int) -> np.ndarray:
        if k == self.nvars:
            return self.coef
        out = np.zeros((k,) + self.shape)
        out[: self.nvars] = self.coef
        return out

    def __add__(self, other):
        other = lift(other, self.shape)
        k = max(self.nvars, other.nvars)
        if other.shape != self.shape:
            raise ValueError(f"cannot add shapes {self.shape} and {other.shape}")
        return Affine(self.const + other.const, self.padded(k) + other.padded(k))

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.const, -self.coef)

    def __sub__(self, other):
        return self + (-lift(other, self.shape))

    def __rsub__(self, other):
        return lift(other, self.shape) + (-self)

    def __mul__(self, scalar):
        if isinstance(scalar, Affine):
            raise TypeError("product of two affine expressions is not affine")
        m = np.asarray(scalar, dtype=float)
        if m.size == 1:
            s = float(m.reshape(()))
            return Affine(self.const * s, self.coef * s)
        if self.shape != (1, 1):
            raise TypeError("only scalar expressions can scale a matrix")
        m = np.atleast_2d(m)
        return Affine(self.const[0, 0] * m, self.coef[:, 0, 0, None, None] * m)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Affine):
            raise TypeError("product of two affine expressions is not affine")
        m = np.atleast_2d(np.asarray(other, dtype=float))
        return Affine(self.const @ m, self.coef @ m)

    def __rmatmul__(self, other):
        m = np.atleast_2d(np.asarray(other, dtype=float))
        return Affine(m @ self.const, m @ self.coef)

    def __getitem__(self, index):
        i, j = index
        return Affine(self.const[i:i + 1, j:j + 1], self.coef[:, i:i + 1, j:j + 1])

    def value(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.const + np.tensordot(v[: self.nvars], self.coef, axes=1)

    def __repr__(self):
        return f"Affine(shape={self.shape}, nvars={self.nvars})"


def lift(x, shape=None) -> Affine:
    """Wrap a constant as an :class:`Affine` expression with no variables."""
    if isinstance(x, Affine):
        return x
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 and shape is not None:
        arr = arr * np.ones(shape) if arr != 0 else np.zeros(shape)
    arr = np.atleast_2d(arr)
    return Affine(arr, np.zeros((0,) + arr.shape))


def bmat(rows) -> Affine:
    """Assemble a block matrix; ``None`` entries are zero blocks of inferred size."""
    heights = [None] * len(rows)
    widths = [None] * len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != len(widths):
            raise ValueError("ragged block rows")
        for j, blk in enumerate(row):
            if blk is None:
                continue
            shape = blk.shape if isinstance(blk, Affine) else np.atleast_2d(np.asarray(blk)).shape
            for store, idx, size in ((heights, i, shape[0]), (widths, j, shape[1])):
                if store[idx] is None:
                    store[idx] = size
                elif store[idx] != size:
                    raise ValueError(f"block ({i},{j}) has shape {shape}, conflicting with its row/column")
    if None in heights or None in widths:
        raise ValueError("every block row and column needs at least one sized entry")
    parts = [[lift(np.zeros((heights[i], widths[j])) if blk is None else blk)
              for j, blk in enumerate(row)] for i, row in enumerate(rows)]
    k = max(p.nvars for row in parts for p in row)
    const = np.block([[p.const for p in row] for row in parts])
    coef = np.concatenate([np.concatenate([p.padded(k) for p in row], axis=2) for row in parts], axis=1)
    return Affine(const, coef)


@dataclass
class VariableInfo:
    name: str
    kind: str
    shape: tuple[int, int]
    start: int
    size: int


class ProblemBuilder:
    """Collects variables, LMIs and equalities, then emits an :class:`SdpProblem`.

    Every ``lmi_neg(expr)`` becomes the constraint ``expr <= -tau I`` and
    ``lmi_pos(expr)`` the constraint ``expr >= tau I``.
    """

    def __init__(self):
        self.num_vars = 0
        self.variables: dict[str, VariableInfo] = {}
        self._names: list[str] = []
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._blocks: list[tuple[str, Affine]] = []
        self._eqs: list[tuple[str, Affine]] = []
        self._objective: Affine | None = None

    def _allocate(self, name, kind, shape, size, labels, lower, upper):
        if name in self.variables:
            raise ValueError(f"duplicate variable {name!r}")
        info = VariableInfo(name, kind, shape, self.num_vars, size)
        self.variables[name] = info
        self.num_vars += size
        self._names.extend(labels)
        self._lower.extend([lower] * size)
        self._upper.extend([upper] * size)
        return info

    def scalar(self, name: str, lower: float = -DEFAULT_BOUND, upper: float = DEFAULT_BOUND) -> Affine:
        info = self._allocate(name, "scalar", (1, 1), 1, [name], lower, upper)
        coef = np.zeros((self.num_vars, 1, 1))
        coef[info.start, 0, 0] = 1.0
        return Affine(np.zeros((1, 1)), coef)

    def matrix(self, name: str, rows: int, cols: int) -> Affine:
        labels = [f"{name}[{i},{j}]" for j in range(cols) for i in range(rows)]
        info = self._allocate(name, "matrix", (rows, cols), rows * cols, labels, -DEFAULT_BOUND, DEFAULT_BOUND)
        coef = np.zeros((self.num_vars, rows, cols))
        for j in range(cols):
            for i in range(rows):
                coef[info.start + j * rows + i, i, j] = 1.0
        return Affine(np.zeros((rows, cols)), coef)

    def symmetric(self, name: str, n: int) -> Affine:
        """Symmetric variable in scaled upper-triangle coordinates.

        Off-diagonal coordinates carry a factor ``sqrt(2)`` so that the
        coordinate inner product equals the trace inner product.
        """
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        labels = [f"{name}[{i},{j}]" for i, j in pairs]
        info = self._allocate(name, "symmetric", (n, n), len(pairs), labels, -DEFAULT_BOUND, DEFAULT_BOUND)
        coef = np.zeros((self.num_vars, n, n))
        for off, (i, j) in enumerate(pairs):
            if i == j:
                coef[info.start + off, i, i] = 1.0
            else:
                coef[info.start + off, i, j] = coef[info.start + off, j, i] = 1.0 / _SQRT2
        return Affine(np.zeros((n, n)), coef)

    def lmi_neg(self, expr: Affine, name: str = "") -> None:
        expr = lift(expr)
        if expr.shape[0] != expr.shape[1]:
            raise ValueError(f"LMI {name!r} is not square: {expr.shape}")
        self._blocks.append((name, expr))

    def lmi_pos(self, expr: Affine, name: str = "") -> None:
        self.lmi_neg(-lift(expr), name)

    def equal(self, expr: Affine, name: str = "") -> None:
        self._eqs.append((name, lift(expr)))

    def minimize(self, expr: Affine) -> None:
        expr = lift(expr)
        if expr.shape != (1, 1):
            raise ValueError("objective must be scalar")
        self._objective = expr

    def value(self, expr: Affine, v) -> np.ndarray:
        return lift(expr).value(v)

    def build(self) -> SdpProblem:
        k = self.num_vars
        c = np.zeros(k)
        if self._objective is not None:
            c = self._objective.padded(k)[:, 0, 0].copy()
        blocks = []
        for name, expr in self._blocks:
            coef = expr.padded(k)
            terms = tuple((i, coef[i]) for i in range(k) if np.any(coef[i] != 0.0))
            blocks.append(LmiBlock(expr.shape[0], expr.const, terms, name))
        eq_rows, eq_rhs = [], []
        for _, expr in self._eqs:
            coef = expr.padded(k)
            eq_rows.append(coef.reshape(k, -1).T)
            eq_rhs.append(-expr.const.reshape(-1))
        E = np.vstack(eq_rows) if eq_rows else None
        f = np.concatenate(eq_rhs) if eq_rhs else None
        return SdpProblem(k, c, tuple(blocks), E, f, np.array(self._lower), np.array(self._upper),
                          tuple(self._names))

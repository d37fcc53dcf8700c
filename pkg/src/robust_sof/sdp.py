"""Canonical semidefinite programs and a log-barrier reference solver.

A problem is

    minimize    c @ v
    subject to  F0_j + sum_i v_i F_ij  <=  -tau * I     for every LMI block j
                E @ v = f
                lower <= v <= upper

Strict matrix inequalities are represented with the margin ``tau`` from
:class:`SolverConfig`. Equalities are removed by parametrising ``v`` over the
null space of ``E``; a phase-I problem then finds a strictly feasible point
(or proves there is none) before the barrier path is followed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_BOUND = 1e6


class SdpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances for :func:`solve`.

    Attributes
    ----------
    tau : float
        Strictness margin; ``M < 0`` is enforced as ``M <= -tau I``.
    feas_tol : float
        Tolerance for block slacks and equality residuals.
    duality_gap_tol : float
        Bound on ``(c @ v - optimum) / max(1, |c @ v|)`` at termination.
    max_iterations : int
        Cap on Newton steps in each of phase I and phase II.
    """

    tau: float = 1e-6
    feas_tol: float = 1e-7
    duality_gap_tol: float = 1e-7
    max_iterations: int = 200

    def __post_init__(self):
        for name in ("tau", "feas_tol", "duality_gap_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class LmiBlock:
    """Affine symmetric map ``M(v) = F0 + sum v_i F_i`` constrained to ``M(v) <= -tau I``."""

    dim: int
    constant: np.ndarray
    coefficients: tuple[tuple[int, np.ndarray], ...] = ()
    name: str = ""

    def __post_init__(self):
        const = np.asarray(self.constant, dtype=float)
        if const.shape != (self.dim, self.dim):
            raise ValueError(f"block {self.name!r}: constant has shape {const.shape}, expected {(self.dim, self.dim)}")
        object.__setattr__(self, "constant", 0.5 * (const + const.T))
        coefs = []
        for idx, mat in self.coefficients:
            mat = np.asarray(mat, dtype=float)
            if mat.shape != (self.dim, self.dim):
                raise ValueError(f"block {self.name!r}: coefficient {idx} has shape {mat.shape}")
            coefs.append((int(idx), 0.5 * (mat + mat.T)))
        object.__setattr__(self, "coefficients", tuple(coefs))

    def evaluate(self, v) -> np.ndarray:
        out = self.constant.copy()
        for idx, mat in self.coefficients:
            out += v[idx] * mat
        return out

    def dense_coefficients(self, num_vars: int) -> np.ndarray:
        arr = np.zeros((num_vars, self.dim, self.dim))
        for idx, mat in self.coefficients:
            arr[idx] += mat
        return arr


@dataclass(frozen=True)
class SdpProblem:
    num_vars: int
    objective: np.ndarray
    lmi_blocks: tuple[LmiBlock, ...]
    eq_matrix: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    variable_names: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        if c.shape != (self.num_vars,):
            raise ValueError(f"objective length {c.size} != num_vars {self.num_vars}")
        object.__setattr__(self, "objective", c)
        if not self.lmi_blocks:
            raise ValueError("an SDP needs at least one LMI block")
        object.__setattr__(self, "lmi_blocks", tuple(self.lmi_blocks))
        for blk in self.lmi_blocks:
            for idx, _ in blk.coefficients:
                if not 0 <= idx < self.num_vars:
                    raise ValueError(f"block {blk.name!r} references variable {idx}")
        if self.eq_matrix is None:
            E = np.zeros((0, self.num_vars))
            f = np.zeros(0)
        else:
            E = np.atleast_2d(np.asarray(self.eq_matrix, dtype=float))
            f = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
            if E.shape[1] != self.num_vars or E.shape[0] != f.size:
                raise ValueError(f"equality system has shape {E.shape} with rhs {f.shape}")
        object.__setattr__(self, "eq_matrix", E)
        object.__setattr__(self, "eq_rhs", f)
        lo = np.full(self.num_vars, -DEFAULT_BOUND) if self.lower is None else np.asarray(self.lower, dtype=float)
        hi = np.full(self.num_vars, DEFAULT_BOUND) if self.upper is None else np.asarray(self.upper, dtype=float)
        if lo.shape != (self.num_vars,) or hi.shape != (self.num_vars,) or np.any(lo >= hi):
            raise ValueError("variable bounds must satisfy lower < upper for every variable")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def with_block(self, block: LmiBlock) -> "SdpProblem":
        return SdpProblem(self.num_vars, self.objective, self.lmi_blocks + (block,), self.eq_matrix,
                          self.eq_rhs, self.lower, self.upper, self.variable_names)


@dataclass
class SdpSolution:
    status: SdpStatus
    v: np.ndarray
    objective_value: float
    block_slacks: np.ndarray
    iterations: int
    equality_residual: float = 0.0
    phase1_value: float = math.nan
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


# ---------------------------------------------------------------------------
# barrier machinery on the reduced (equality-free) problem


@dataclass
class _Reduced:
    blocks: list  # (C0, Cs): S(y) = C0 + sum y_i Cs[i] must stay positive definite
    lin_a: np.ndarray  # rows a_k with b_k - a_k @ y > 0
    lin_b: np.ndarray
    c: np.ndarray
    v0: np.ndarray
    basis: np.ndarray
    c_offset: float = 0.0  # objective at v0
    degree: int = field(init=False)

    def __post_init__(self):
        self.degree = sum(c0.shape[0] for c0, _ in self.blocks) + self.lin_b.size


def _block_slack_matrices(blocks, x):
    return [c0 + np.tensordot(x, cs, axes=1) for c0, cs in blocks]


def _barrier_value(red: _Reduced, x, t):
    """Return ``t c@x + barrier(x)`` or ``inf`` outside the domain."""
    val = t * float(red.c @ x)
    for S in _block_slack_matrices(red.blocks, x):
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            return math.inf
        val -= 2.0 * float(np.sum(np.log(np.diag(L))))
    if red.lin_b.size:
        g = red.lin_b - red.lin_a @ x
        if np.any(g <= 0):
            return math.inf
        val -= float(np.sum(np.log(g)))
    return val


def _newton_system(red: _Reduced, x, t):
    k = x.size
    grad = t * red.c.copy()
    hess = np.zeros((k, k))
    for S, (_, cs) in zip(_block_slack_matrices(red.blocks, x), red.blocks):
        L = np.linalg.cholesky(S)
        Linv = np.linalg.inv(L)
        ch = Linv @ cs @ Linv.T
        grad -= np.einsum("kii->k", ch)
        flat = ch.reshape(k, -1)
        hess += flat @ flat.T
    if red.lin_b.size:
        g = red.lin_b - red.lin_a @ x
        w = 1.0 / g
        grad += red.lin_a.T @ w
        hess += (red.lin_a.T * w**2) @ red.lin_a
    return grad, hess


def _newton_direction(grad, hess):
    scale = np.sqrt(np.clip(np.diag(hess), 1e-300, None))
    hs = hess / np.outer(scale, scale)
    try:
        L = np.linalg.cholesky(hs + 1e-14 * np.eye(hs.shape[0]))
        dz = -np.linalg.solve(L.T, np.linalg.solve(L, grad / scale))
    except np.linalg.LinAlgError:
        dz = -np.linalg.lstsq(hs, grad / scale, rcond=None)[0]
    return dz / scale


class _IterationLimit(Exception):
    pass


def _center(red: _Reduced, x, t, budget, newton_tol=1e-9):
    """Damped Newton on ``t c@x + barrier``; returns (x, steps, stalled)."""
    steps = 0
    fx = _barrier_value(red, x, t)
    while True:
        if steps >= budget:
            raise _IterationLimit
        grad, hess = _newton_system(red, x, t)
        dx = _newton_direction(grad, hess)
        dec = -float(grad @ dx)
        if not np.all(np.isfinite(dx)):
            raise FloatingPointError("Newton direction is not finite")
        if dec / 2.0 <= newton_tol:
            return x, steps, False
        step = 1.0
        while True:
            xn = x + step * dx
            fn = _barrier_value(red, xn, t)
            if fn <= fx - 0.01 * step * dec:
                break
            if fn <= fx + 1e-15 * abs(fx) and step * np.max(np.abs(dx)) <= 1e-13 * (1.0 + np.max(np.abs(x))):
                # rounding floor reached: further steps cannot decrease f
                return x, steps, True
            step *= 0.5
            if step < 1e-14:
                return x, steps, True
        if not fn < fx:
            return x, steps, True
        x, fx = xn, fn
        steps += 1


def _barrier_path(red: _Reduced, x, t0, gap_tol, budget, mu=20.0, stop=None):
    """Follow the central path until ``degree / t < gap_tol * max(1, |c@x|)``.

    ``stop(x, t)`` may end the path early by returning a truthy value.
    Returns (x, t, steps, reason).
    """
    t = t0
    steps = 0
    while True:
        x, n, stalled = _center(red, x, t, budget - steps)
        steps += n
        if stop is not None:
            verdict = stop(x, t)
            if verdict:
                return x, t, steps, verdict
        scale = max(1.0, abs(float(red.c @ x) + red.c_offset))
        if red.degree / t < gap_tol * scale:
            return x, t, steps, "converged"
        if stalled and red.degree / t < 1e3 * gap_tol * scale:
            return x, t, steps, "converged"
        t *= mu


def _reduce(problem: SdpProblem, config: SolverConfig):
    """Eliminate equalities and fold the margin into the slack matrices."""
    k = problem.num_vars
    E, f = problem.eq_matrix, problem.eq_rhs
    if E.shape[0]:
        v0 = np.linalg.lstsq(E, f, rcond=None)[0]
        resid = float(np.max(np.abs(E @ v0 - f)))
        if resid > config.feas_tol:
            return None, f"equality system is inconsistent (residual {resid:.3e})"
        _, s, vt = np.linalg.svd(E)
        r = int(np.sum(s > 1e-10 * max(s[0], 1.0))) if s.size else 0
        basis = vt[r:].T
    else:
        v0 = np.zeros(k)
        basis = np.eye(k)
    blocks = []
    for blk in problem.lmi_blocks:
        F = blk.dense_coefficients(k)
        c0 = -(blk.constant + np.tensordot(v0, F, axes=1)) - config.tau * np.eye(blk.dim)
        cs = -np.tensordot(basis.T, F, axes=1)
        blocks.append((c0, cs))
    rows, rhs = [], []
    for i in range(k):
        zi = basis[i]
        fixed = np.allclose(zi, 0.0, atol=1e-14)
        lo, hi = problem.lower[i], problem.upper[i]
        if fixed:
            if not lo < v0[i] < hi:
                return None, f"variable {i} is fixed outside its bounds"
            continue
        if np.isfinite(hi):
            rows.append(zi)
            rhs.append(hi - v0[i])
        if np.isfinite(lo):
            rows.append(-zi)
            rhs.append(v0[i] - lo)
    lin_a = np.array(rows).reshape(-1, basis.shape[1])
    lin_b = np.array(rhs)
    if np.any(lin_b <= 0):
        return None, "particular solution of the equalities violates the variable bounds"
    return _Reduced(blocks, lin_a, lin_b, basis.T @ problem.objective, v0, basis,
                    float(problem.objective @ v0)), ""


def _phase_one(red: _Reduced, config: SolverConfig):
    """Minimise s subject to S_j(y) + s I > 0; returns (y, s, steps, verdict)."""
    r = red.basis.shape[1]
    worst = max(-float(np.linalg.eigvalsh(c0)[0]) for c0, _ in red.blocks)
    y0 = np.zeros(r)
    if worst < 0:
        return y0, worst, 0, "feasible"
    blocks = []
    for c0, cs in red.blocks:
        d = c0.shape[0]
        blocks.append((c0, np.concatenate([cs, np.eye(d)[None]], axis=0)))
    lin_a = np.zeros((red.lin_b.size + 1, r + 1))
    lin_a[:-1, :r] = red.lin_a
    lin_a[-1, r] = -1.0  # s > -1
    lin_b = np.append(red.lin_b, 1.0)
    c = np.zeros(r + 1)
    c[-1] = 1.0
    aux = _Reduced(blocks, lin_a, lin_b, c, np.zeros(r + 1), np.eye(r + 1))
    x0 = np.append(y0, worst + 1.0)

    def stop(x, t):
        s = x[-1]
        if s < 0:
            return "feasible"
        if s - aux.degree / t > 0:
            return "infeasible"
        return None

    x, t, steps, reason = _barrier_path(aux, x0, 1.0, config.duality_gap_tol, config.max_iterations, stop=stop)
    if reason == "converged":
        reason = "feasible" if x[-1] < 0 else "infeasible"
    return x[:r], float(x[-1]), steps, reason


def _finish(problem, red, y, status, steps, config, phase1=math.nan, message=""):
    v = red.v0 + red.basis @ y
    slacks = np.array([float(np.linalg.eigvalsh(b.evaluate(v))[-1]) for b in problem.lmi_blocks])
    eq_res = float(np.max(np.abs(problem.eq_matrix @ v - problem.eq_rhs))) if problem.eq_rhs.size else 0.0
    return SdpSolution(status, v, float(problem.objective @ v), slacks, steps, eq_res, phase1, message)


def solve(problem: SdpProblem, config: SolverConfig | None = None) -> SdpSolution:
    """Solve ``problem`` with the log-determinant barrier method.

    Returns a solution whose status is ``Optimal`` only when the returned
    point passes :func:`check_feasible`.
    """
    config = config or SolverConfig()
    red, why = _reduce(problem, config)
    nan = np.full(problem.num_vars, np.nan)
    if red is None:
        status = SdpStatus.INFEASIBLE if "inconsistent" in why else SdpStatus.NUMERICAL_FAILURE
        return SdpSolution(status, nan, math.nan, np.full(len(problem.lmi_blocks), np.nan), 0, message=why)
    steps = 0
    try:
        y, s, steps, verdict = _phase_one(red, config)
    except _IterationLimit:
        return _finish(problem, red, np.zeros(red.basis.shape[1]), SdpStatus.MAX_ITERATIONS,
                       config.max_iterations, config, message="phase I iteration limit")
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        return _finish(problem, red, np.zeros(red.basis.shape[1]), SdpStatus.NUMERICAL_FAILURE,
                       steps, config, message=f"phase I: {exc}")
    if verdict == "infeasible":
        return _finish(problem, red, y, SdpStatus.INFEASIBLE, steps, config, phase1=s,
                       message=f"phase I optimum {s:.3e} > 0")
    if not np.any(red.c):
        sol = _finish(problem, red, y, SdpStatus.OPTIMAL, steps, config, phase1=s)
    else:
        t0 = max(1.0, red.degree / max(1.0, abs(float(red.c @ y))))
        try:
            y, _, n2, _ = _barrier_path(red, y, t0, config.duality_gap_tol, config.max_iterations)
        except _IterationLimit:
            return _finish(problem, red, y, SdpStatus.MAX_ITERATIONS, steps + config.max_iterations,
                           config, phase1=s, message="phase II iteration limit")
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            return _finish(problem, red, y, SdpStatus.NUMERICAL_FAILURE, steps, config, phase1=s,
                           message=f"phase II: {exc}")
        sol = _finish(problem, red, y, SdpStatus.OPTIMAL, steps + n2, config, phase1=s)
    ok, _ = check_feasible(problem, sol.v, config)
    if not ok:
        sol.status = SdpStatus.NUMERICAL_FAILURE
        sol.message = "returned point fails the feasibility check"
    return sol


def check_feasible(problem: SdpProblem, v, config: SolverConfig | None = None) -> tuple[bool, np.ndarray]:
    """Check ``v`` against every block, the equalities and the bounds.

    Returns the verdict and the largest eigenvalue of each ``M_j(v)``.
    """
    config = config or SolverConfig()
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (problem.num_vars,):
        raise ValueError(f"v has length {v.size}, expected {problem.num_vars}")
    if not np.all(np.isfinite(v)):
        return False, np.full(len(problem.lmi_blocks), np.nan)
    slacks = np.array([float(np.linalg.eigvalsh(b.evaluate(v))[-1]) for b in problem.lmi_blocks])
    ok = bool(np.all(slacks <= -config.tau + config.feas_tol))
    if problem.eq_rhs.size:
        ok &= float(np.max(np.abs(problem.eq_matrix @ v - problem.eq_rhs))) <= config.feas_tol
    ok &= bool(np.all(v >= problem.lower - config.feas_tol) and np.all(v <= problem.upper + config.feas_tol))
    return ok, slacks


# ---------------------------------------------------------------------------
# text dump
#
#   sdp-dump 1
#   num_vars <k>
#   objective <c_1> ... <c_k>
#   blocks <B>
#   block <name|-> dim <d> terms <T>
#   F0                     then d rows of d numbers
#   F <index>              then d rows, repeated T times
#   equalities <R>         then R rows: E_r1 ... E_rk f_r
#   bounds                 then k rows: lower upper


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_problem(problem: SdpProblem, path: str | Path) -> None:
    """Write ``problem`` in the dense block text format described above."""
    lines = ["sdp-dump 1", f"num_vars {problem.num_vars}",
             "objective " + " ".join(_fmt(c) for c in problem.objective),
             f"blocks {len(problem.lmi_blocks)}"]
    for blk in problem.lmi_blocks:
        lines.append(f"block {blk.name or '-'} dim {blk.dim} terms {len(blk.coefficients)}")
        lines.append("F0")
        lines.extend(" ".join(_fmt(x) for x in row) for row in blk.constant)
        for idx, mat in blk.coefficients:
            lines.append(f"F {idx}")
            lines.extend(" ".join(_fmt(x) for x in row) for row in mat)
    lines.append(f"equalities {problem.eq_rhs.size}")
    for row, rhs in zip(problem.eq_matrix, problem.eq_rhs):
        lines.append(" ".join(_fmt(x) for x in row) + " " + _fmt(rhs))
    lines.append("bounds")
    lines.extend(f"{_fmt(lo)} {_fmt(hi)}" for lo, hi in zip(problem.lower, problem.upper))
    Path(path).write_text("\n".join(lines) + "\n")


def load_problem(path: str | Path) -> SdpProblem:
    tokens = iter(Path(path).read_text().splitlines())

    def rows(n):
        return np.array([[float(x) for x in next(tokens).split()] for _ in range(n)]).reshape(n, -1)

    header = next(tokens).split()
    if header != ["sdp-dump", "1"]:
        raise ValueError("not an sdp-dump v1 file")
    k = int(next(tokens).split()[1])
    c = np.array([float(x) for x in next(tokens).split()[1:]])
    nblocks = int(next(tokens).split()[1])
    blocks = []
    for _ in range(nblocks):
        _, name, _, dim, _, nterms = next(tokens).split()
        dim, nterms = int(dim), int(nterms)
        next(tokens)
        f0 = rows(dim)
        terms = []
        for _ in range(nterms):
            idx = int(next(tokens).split()[1])
            terms.append((idx, rows(dim)))
        blocks.append(LmiBlock(dim, f0, tuple(terms), "" if name == "-" else name))
    neq = int(next(tokens).split()[1])
    eq = rows(neq) if neq else np.zeros((0, k + 1))
    next(tokens)
    bounds = rows(k)
    return SdpProblem(k, c, tuple(blocks), eq[:, :k], eq[:, k], bounds[:, 0], bounds[:, 1])


def stack_blocks(blocks: Sequence[LmiBlock], name: str = "") -> LmiBlock:
    """Merge blocks into one block-diagonal block."""
    dims = [b.dim for b in blocks]
    total = sum(dims)
    offsets = np.cumsum([0] + dims)
    const = np.zeros((total, total))
    terms: dict[int, np.ndarray] = {}
    for off, blk in zip(offsets, blocks):
        sl = slice(off, off + blk.dim)
        const[sl, sl] = blk.constant
        for idx, mat in blk.coefficients:
            terms.setdefault(idx, np.zeros((total, total)))[sl, sl] += mat
    return LmiBlock(total, const, tuple(sorted(terms.items())), name)

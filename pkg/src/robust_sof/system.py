"""Plant data, nonlinearities and exogenous signals.

The plant is

    x(k+1) = (A + M1 F(k) N) x(k) + Phi(x, u) + B1 u(k) + B2 w(k)
    y(k)   = (C + M2 F(k) N) x(k) + D w(k)
    z(k)   = H x(k)

with ``F(k)' F(k) <= I`` and ``Phi`` Lipschitz in ``x`` uniformly in ``u``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .matrix_core import as_matrix, rank, spectral_norm

RANK_RTOL = 1e-9


class SystemFileError(ValueError):
    """Base class for problems with a system description."""

    code = "system"


class SystemParseError(SystemFileError):
    code = "parse"


class SystemDimensionError(SystemFileError):
    code = "dimension"


class SystemRankError(SystemFileError):
    code = "rank"


# ---------------------------------------------------------------------------
# nonlinearities


def coordinate_sinusoid_lipschitz(coefficients, sources) -> float:
    """Tight Lipschitz constant of ``x -> (a_i sin(x[s_i]))_i`` (0-based ``sources``).

    ``sum_i a_i^2 (sin x_{s_i} - sin y_{s_i})^2 <= max_j (sum_{s_i=j} a_i^2) |x - y|^2``,
    with equality approached near the origin along the worst coordinate.
    """
    a = np.asarray(coefficients, dtype=float)
    s = np.asarray(sources, dtype=int)
    if a.size == 0:
        return 0.0
    col = np.zeros(int(s.max()) + 1)
    np.add.at(col, s, a**2)
    return float(np.sqrt(col.max()))


@dataclass(frozen=True)
class NonlinearityDescriptor:
    """Description of ``Phi(x, u)``.

    ``kind`` is ``"none"``, ``"coordinate_sinusoid"`` (component ``i`` equals
    ``coefficients[i] * sin(x[sources[i] - 1])``, sources 1-based) or
    ``"custom"`` (an in-process ``callback(x, u)``). ``lipschitz`` is the
    declared Lipschitz constant.
    """

    kind: str = "none"
    coefficients: tuple[float, ...] = ()
    sources: tuple[int, ...] = ()
    lipschitz: float = 0.0
    callback: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("none", "coordinate_sinusoid", "custom"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.lipschitz < 0:
            raise ValueError("lipschitz must be nonnegative")
        if self.kind == "coordinate_sinusoid":
            if len(self.coefficients) != len(self.sources):
                raise ValueError("coefficients and sources must have equal length")
            n = len(self.sources)
            if any(not 1 <= int(s) <= n for s in self.sources):
                raise ValueError(f"sources must lie in 1..{n}")
            object.__setattr__(self, "coefficients", tuple(float(a) for a in self.coefficients))
            object.__setattr__(self, "sources", tuple(int(s) for s in self.sources))
        if self.kind == "custom" and self.callback is None:
            raise ValueError("custom nonlinearity needs a callback")

    @classmethod
    def sinusoid(cls, coefficients, sources, lipschitz: float | None = None) -> "NonlinearityDescriptor":
        """Coordinate sinusoid with the tight Lipschitz constant unless one is given."""
        if lipschitz is None:
            lipschitz = coordinate_sinusoid_lipschitz(coefficients, np.asarray(sources) - 1)
        return cls("coordinate_sinusoid", tuple(coefficients), tuple(sources), float(lipschitz))

    @classmethod
    def custom(cls, callback: Callable, lipschitz: float) -> "NonlinearityDescriptor":
        return cls("custom", lipschitz=float(lipschitz), callback=callback)

    def __call__(self, x, u=None) -> np.ndarray:
        return evaluate_nonlinearity(self, x, u)

    def __add__(self, other: "NonlinearityDescriptor") -> "NonlinearityDescriptor":
        """Sum of two nonlinearities; the declared constants add."""
        a, b = self, other
        return NonlinearityDescriptor.custom(lambda x, u: a(x, u) + b(x, u), a.lipschitz + b.lipschitz)

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom nonlinearities cannot be serialised")
        out = {"kind": self.kind, "lipschitz": self.lipschitz}
        if self.kind == "coordinate_sinusoid":
            out.update(coefficients=list(self.coefficients), sources=list(self.sources))
        return out


NO_NONLINEARITY = NonlinearityDescriptor()


def evaluate_nonlinearity(desc: NonlinearityDescriptor, x, u=None) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if desc.kind == "none":
        return np.zeros_like(x)
    if desc.kind == "coordinate_sinusoid":
        if x.size != len(desc.sources):
            raise ValueError(f"state has length {x.size}, nonlinearity expects {len(desc.sources)}")
        idx = np.asarray(desc.sources) - 1
        return np.asarray(desc.coefficients) * np.sin(x[idx])
    u = np.zeros(0) if u is None else np.asarray(u, dtype=float).reshape(-1)
    return np.asarray(desc.callback(x, u), dtype=float).reshape(-1)


def _norm_cdf(z):
    return 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))


def estimate_lipschitz(desc: NonlinearityDescriptor, region_radius: float = 1.0, samples: int = 10_000,
                       seed: int = 0, n: int | None = None, m: int = 0) -> float:
    """Largest sampled difference quotient ``|Phi(x1,u) - Phi(x2,u)| / |x1 - x2|``.

    Base points are uniform in the ball of radius ``region_radius``; partners
    sit at a random direction and a log-uniform distance in
    ``[1e-6 r, r]``. Each sample consumes its own row of random numbers, so
    the estimate is nondecreasing in ``samples`` for a fixed seed. ``n`` is
    inferred for coordinate sinusoids; ``m`` is the input dimension.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    if desc.kind == "none":
        return 0.0
    if n is None:
        if desc.kind != "coordinate_sinusoid":
            raise ValueError("state dimension n is required for custom nonlinearities")
        n = len(desc.sources)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, 2 * n + 2 + m))
    base_dir = z[:, :n] / np.linalg.norm(z[:, :n], axis=1, keepdims=True)
    radius = region_radius * _norm_cdf(z[:, n]) ** (1.0 / n)
    x1 = base_dir * radius[:, None]
    step_dir = z[:, n + 1: 2 * n + 1] / np.linalg.norm(z[:, n + 1: 2 * n + 1], axis=1, keepdims=True)
    h = region_radius * 10.0 ** (-6.0 * _norm_cdf(z[:, 2 * n + 1]))
    x2 = x1 + step_dir * h[:, None]
    u = z[:, 2 * n + 2:]
    best = 0.0
    for a, b, uu in zip(x1, x2, u):
        dx = np.linalg.norm(a - b)
        if dx == 0.0:
            continue
        ratio = np.linalg.norm(evaluate_nonlinearity(desc, a, uu) - evaluate_nonlinearity(desc, b, uu)) / dx
        best = max(best, float(ratio))
    return best


# ---------------------------------------------------------------------------
# plants


@dataclass(frozen=True)
class AutonomousSystem:
    """``x(k+1) = (A + M1 F N) x + Phi(x) + B w``, ``z = H x`` (no control input)."""

    A: np.ndarray
    B: np.ndarray
    H: np.ndarray
    M1: np.ndarray
    N: np.ndarray
    phi: NonlinearityDescriptor = NO_NONLINEARITY

    def __post_init__(self):
        for name in ("A", "B", "H", "M1", "N"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        n = self.A.shape[0]
        checks = {"A": (n, n), "B": (n, None), "H": (None, n), "M1": (n, None), "N": (self.M1.shape[1], n)}
        _check_shapes(self, checks)

    @property
    def n(self) -> int:
        return self.A.shape[0]


def _check_shapes(obj, checks):
    for name, (r, c) in checks.items():
        shape = getattr(obj, name).shape
        if (r is not None and shape[0] != r) or (c is not None and shape[1] != c):
            want = tuple("*" if s is None else s for s in (r, c))
            raise SystemDimensionError(f"{name}: shape {shape} does not match expected {want}")


@dataclass(frozen=True)
class UncertainSystem:
    """Uncertain Lipschitz plant with static output feedback channel.

    Shapes: ``A`` n x n, ``B1`` n x m, ``B2`` n x d, ``C`` p x n, ``D`` p x d,
    ``H`` n_z x n, ``M1`` n x q, ``M2`` p x q, ``N`` q x n. Requires
    ``rank(B1) = m < n`` and ``rank(C) = p < n``.
    """

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C: np.ndarray
    D: np.ndarray
    H: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    N: np.ndarray
    phi: NonlinearityDescriptor = NO_NONLINEARITY
    gamma: float | None = None

    MATRICES = ("A", "B1", "B2", "C", "D", "H", "M1", "M2", "N")

    def __post_init__(self):
        for name in self.MATRICES:
            try:
                object.__setattr__(self, name, as_matrix(getattr(self, name), name))
            except ValueError as exc:
                raise SystemParseError(str(exc)) from exc
        n = self.A.shape[0]
        m, d, p, q = self.B1.shape[1], self.B2.shape[1], self.C.shape[0], self.M1.shape[1]
        _check_shapes(self, {"A": (n, n), "B1": (n, m), "B2": (n, d), "C": (p, n), "D": (p, d),
                             "H": (None, n), "M1": (n, q), "M2": (p, q), "N": (q, n)})
        if rank(self.B1, RANK_RTOL) != m or not m < n:
            raise SystemRankError(f"B1: rank {rank(self.B1, RANK_RTOL)} but need rank(B1) = m = {m} < n = {n}")
        if rank(self.C, RANK_RTOL) != p or not p < n:
            raise SystemRankError(f"C: rank {rank(self.C, RANK_RTOL)} but need rank(C) = p = {p} < n = {n}")
        if self.phi.kind == "coordinate_sinusoid" and len(self.phi.sources) != n:
            raise SystemDimensionError(f"phi: {len(self.phi.sources)} components for n = {n}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", float(self.phi.lipschitz))

    n = property(lambda self: self.A.shape[0])
    m = property(lambda self: self.B1.shape[1])
    p = property(lambda self: self.C.shape[0])
    q = property(lambda self: self.M1.shape[1])
    d = property(lambda self: self.B2.shape[1])
    nz = property(lambda self: self.H.shape[0])

    def closed_loop(self, K) -> AutonomousSystem:
        """Substitute ``u = K y``; the result carries the closed-loop matrices."""
        K = as_matrix(K, "K")
        if K.shape != (self.m, self.p):
            raise SystemDimensionError(f"K: shape {K.shape}, expected {(self.m, self.p)}")
        return AutonomousSystem(
            A=self.A + self.B1 @ K @ self.C,
            B=self.B2 + self.B1 @ K @ self.D,
            H=self.H,
            M1=self.M1 + self.B1 @ K @ self.M2,
            N=self.N,
            phi=self.phi,
        )

    def replace(self, **changes) -> "UncertainSystem":
        fields = {name: getattr(self, name) for name in self.MATRICES + ("phi", "gamma")}
        fields.update(changes)
        if "phi" in changes and "gamma" not in changes:
            fields["gamma"] = None
        return UncertainSystem(**fields)

    def to_dict(self) -> dict:
        out = {"n": self.n, "m": self.m, "p": self.p, "q": self.q, "d": self.d}
        out.update({name: getattr(self, name).tolist() for name in self.MATRICES})
        if self.phi.kind != "none":
            out["phi"] = self.phi.to_dict()
        if self.gamma is not None:
            out["gamma"] = self.gamma
        return out


_ALLOWED_KEYS = {"n", "m", "p", "q", "d", "phi", "gamma", *UncertainSystem.MATRICES}
_PHI_KEYS = {"kind", "coefficients", "sources", "lipschitz"}


def system_from_dict(data: dict) -> UncertainSystem:
    """Validate and build a system from the JSON object layout."""
    if not isinstance(data, dict):
        raise SystemParseError("top level must be a JSON object")
    unknown = sorted(set(data) - _ALLOWED_KEYS)
    if unknown:
        raise SystemParseError(f"unknown field(s): {', '.join(unknown)}")
    dims = {}
    for key in ("n", "m", "p", "q", "d"):
        if key not in data:
            raise SystemParseError(f"{key}: missing")
        val = data[key]
        if isinstance(val, bool) or not isinstance(val, int) or val <= 0:
            raise SystemParseError(f"{key}: expected a positive integer, got {val!r}")
        dims[key] = val
    mats = {}
    for key in UncertainSystem.MATRICES:
        if key not in data:
            raise SystemParseError(f"{key}: missing")
        try:
            arr = np.array(data[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise SystemParseError(f"{key}: not a numeric matrix ({exc})") from exc
        if arr.ndim != 2:
            raise SystemParseError(f"{key}: expected a nested row-major array, got {arr.ndim}-D data")
        mats[key] = arr
    n, m, p, q, d = (dims[k] for k in ("n", "m", "p", "q", "d"))
    expected = {"A": (n, n), "B1": (n, m), "B2": (n, d), "C": (p, n), "D": (p, d), "M1": (n, q),
                "M2": (p, q), "N": (q, n), "H": (None, n)}
    for key, (r, c) in expected.items():
        shape = mats[key].shape
        if (r is not None and shape[0] != r) or shape[1] != c:
            raise SystemDimensionError(f"{key}: shape {shape} does not match declared dimensions {(r or '*', c)}")
    phi = NO_NONLINEARITY
    if "phi" in data:
        spec = data["phi"]
        if not isinstance(spec, dict):
            raise SystemParseError("phi: expected an object")
        extra = sorted(set(spec) - _PHI_KEYS)
        if extra:
            raise SystemParseError(f"phi: unknown field(s): {', '.join(extra)}")
        kind = spec.get("kind", "none")
        if kind == "custom":
            raise SystemParseError("phi.kind: custom callbacks cannot be loaded from files")
        try:
            if kind == "coordinate_sinusoid":
                phi = NonlinearityDescriptor.sinusoid(spec["coefficients"], spec["sources"], spec.get("lipschitz"))
                if len(phi.sources) != n:
                    raise SystemDimensionError(f"phi.sources: {len(phi.sources)} entries for n = {n}")
            elif kind == "none":
                phi = NonlinearityDescriptor("none", lipschitz=float(spec.get("lipschitz", 0.0)))
            else:
                raise SystemParseError(f"phi.kind: unknown kind {kind!r}")
        except KeyError as exc:
            raise SystemParseError(f"phi.{exc.args[0]}: missing") from exc
        except SystemFileError:
            raise
        except (TypeError, ValueError) as exc:
            raise SystemParseError(f"phi: {exc}") from exc
    gamma = data.get("gamma")
    if gamma is not None and (isinstance(gamma, bool) or not isinstance(gamma, (int, float)) or gamma < 0):
        raise SystemParseError(f"gamma: expected a nonnegative number, got {gamma!r}")
    return UncertainSystem(phi=phi, gamma=None if gamma is None else float(gamma), **mats)


def load_system(path: str | Path) -> UncertainSystem:
    """Read a system JSON file; raises a :class:`SystemFileError` subclass on bad input."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SystemParseError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SystemParseError(f"{path}: invalid JSON ({exc})") from exc
    return system_from_dict(data)


def save_system(system: UncertainSystem, path: str | Path) -> None:
    Path(path).write_text(json.dumps(system.to_dict(), indent=2) + "\n")


def benchmark_system(h_scale: float = 0.15) -> UncertainSystem:
    """Five-state unstable benchmark plant with a sinusoidal nonlinearity (Lipschitz 0.3)."""
    A = [[0.5000, -0.5975, 0.3735, 0.0457, 0.3575],
         [0.2500, 0.3000, 0.4017, 0.1114, 0.0227],
         [0.4880, 0.1384, 0.2500, 0.7500, 0.7500],
         [0.3838, 0.0974, 0.5000, 0.2500, 0.5000],
         [0.0347, 0.1865, -0.2500, 0.5000, 0.2500]]
    B1 = [[0.7, 0.8, 0.0], [0.4, 0.9, 0.9], [0.9, 0.9, 0.2], [0.9, 0.6, 0.7], [0.0, 0.5, 0.3]]
    C = [[0.5, 0.2, 0.0, 0.0, 0.3], [0.0, 0.2, 0.1, 0.3, 0.0]]
    M1 = [[0.1, 0.0], [0.1, 0.1], [0.1, 0.1], [0.0, 0.1], [0.0, 0.2]]
    M2 = [[0.0, 0.1], [0.1, 0.2]]
    N = [[0.3, 0.15, 0.1, 0.0, 0.2], [0.1, 0.2, 0.1, 0.2, 0.0]]
    phi = NonlinearityDescriptor.sinusoid([0.1, 0.2, 0.3, 0.0, 0.1], [3, 4, 1, 4, 2])
    return UncertainSystem(A=A, B1=B1, B2=np.ones((5, 1)), C=C, D=[[0.2], [0.2]], H=h_scale * np.eye(5),
                           M1=M1, M2=M2, N=N, phi=phi)


# ---------------------------------------------------------------------------
# exogenous signals


def _step_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, k])


def random_orthogonal(q: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (all singular values equal to 1)."""
    Z = rng.standard_normal((q, q))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


@dataclass(frozen=True)
class UncertaintySignal:
    """Generator of admissible ``F(k)`` (``q x q``, spectral norm at most one).

    ``F(k)`` is a pure function of ``(seed, k)``.
    """

    kind: str = "random_switching"
    q: int = 1
    seed: int = 0
    matrix: np.ndarray | None = None
    frequency: float = 0.3

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "random_switching", "sinusoidal"):
            raise ValueError(f"unknown uncertainty kind {self.kind!r}")
        if self.kind == "constant":
            mat = np.eye(self.q) if self.matrix is None else as_matrix(self.matrix, "F")
            if mat.shape != (self.q, self.q) or spectral_norm(mat) > 1.0 + 1e-12:
                raise ValueError("constant F must be q x q with spectral norm <= 1")
            object.__setattr__(self, "matrix", mat)

    def at(self, k: int) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros((self.q, self.q))
        if self.kind == "constant":
            return self.matrix
        if self.kind == "sinusoidal":
            phases = np.pi * np.arange(self.q) / self.q
            return np.diag(np.sin(self.frequency * k + phases + self.seed))
        return random_orthogonal(self.q, _step_rng(self.seed, k))


@dataclass(frozen=True)
class DisturbanceSignal:
    """Finite-energy disturbance ``w(k)`` of dimension ``d``.

    ``impulse`` puts ``amplitude`` on the first channel at ``k = 0``;
    ``finite_random`` draws ``amplitude * N(0, 1)`` entries for ``k < horizon``;
    ``from_file`` replays rows of ``data``. Every kind is zero from
    ``horizon`` on.
    """

    kind: str = "zero"
    d: int = 1
    seed: int = 0
    horizon: int = 50
    amplitude: float = 1.0
    data: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "impulse", "finite_random", "from_file"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.kind == "from_file":
            data = np.asarray(self.data, dtype=float).reshape(-1, self.d)
            object.__setattr__(self, "data", data)
            object.__setattr__(self, "horizon", data.shape[0])

    @classmethod
    def from_file(cls, path: str | Path, d: int) -> "DisturbanceSignal":
        """Load one row of ``d`` comma-separated values per time step."""
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        if data.shape[1] != d:
            raise ValueError(f"{path}: expected {d} columns, found {data.shape[1]}")
        return cls("from_file", d=d, data=data)

    def at(self, k: int) -> np.ndarray:
        if self.kind == "zero" or k >= self.horizon or k < 0:
            return np.zeros(self.d)
        if self.kind == "impulse":
            w = np.zeros(self.d)
            if k == 0:
                w[0] = self.amplitude
            return w
        if self.kind == "from_file":
            return self.data[k].copy()
        return self.amplitude * _step_rng(self.seed, k).standard_normal(self.d)

    def energy(self) -> float:
        return float(sum(np.sum(self.at(k) ** 2) for k in range(self.horizon)))

    def scaled(self, factor: float) -> "DisturbanceSignal":
        data = None if self.data is None else self.data * factor
        return DisturbanceSignal(self.kind, self.d, self.seed, self.horizon, self.amplitude * factor, data)

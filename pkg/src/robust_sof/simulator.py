"""Closed-loop rollout under ``u = K y`` with uncertainty, nonlinearity and disturbance."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .matrix_core import as_matrix
from .system import (
    DisturbanceSignal,
    NonlinearityDescriptor,
    UncertaintySignal,
    UncertainSystem,
    coordinate_sinusoid_lipschitz,
)

DIVERGENCE_LIMIT = 1e9
CONVERGENCE_RATIO = 1e-3
MC_HORIZON = 200


class Diverged(RuntimeError):
    """State norm exceeded the divergence limit; ``trajectory`` holds the rows so far."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass
class Trajectory:
    """Per-step records; row ``k`` holds ``x(k)`` and the signals applied at ``k``."""

    k: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    z: np.ndarray
    w: np.ndarray
    F: list = field(default_factory=list, repr=False)
    phi: np.ndarray | None = field(default=None, repr=False)
    V: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return len(self.k) - 1

    def header(self) -> list[str]:
        cols = ["k"]
        for name, arr in (("x", self.x), ("u", self.u), ("y", self.y), ("z", self.z), ("w", self.w)):
            cols += [f"{name}{i + 1}" for i in range(arr.shape[1])]
        if self.V is not None:
            cols.append("V")
        return cols

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            for i, k in enumerate(self.k):
                row = [str(int(k))]
                for arr in (self.x, self.u, self.y, self.z, self.w):
                    row += [f"{v:.17g}" for v in arr[i]]
                if self.V is not None:
                    row.append(f"{self.V[i]:.17g}")
                writer.writerow(row)

    def replay_residual(self, system: UncertainSystem) -> float:
        """Largest dynamics mismatch over all recorded transitions."""
        worst = 0.0
        for i in range(self.horizon):
            Ak = system.A + system.M1 @ self.F[i] @ system.N
            pred = Ak @ self.x[i] + self.phi[i] + system.B1 @ self.u[i] + system.B2 @ self.w[i]
            worst = max(worst, float(np.max(np.abs(self.x[i + 1] - pred), initial=0.0)))
        return worst


def simulate(system: UncertainSystem, K, phi: NonlinearityDescriptor | None = None,
             F: UncertaintySignal | None = None, w: DisturbanceSignal | None = None,
             x0=None, horizon: int = MC_HORIZON, P=None) -> Trajectory:
    """Roll the closed loop forward ``horizon`` steps from ``x0``.

    ``phi`` defaults to the system's own nonlinearity, ``F`` to zero and
    ``w`` to zero. Raises :class:`Diverged` once ``||x|| > 1e9``.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    n, m, p, q, d = system.n, system.m, system.p, system.q, system.d
    K = as_matrix(K, "K")
    if K.shape != (m, p):
        raise ValueError(f"K must be {m}x{p}, got {K.shape}")
    phi = system.phi if phi is None else phi
    F = UncertaintySignal("zero", q=q) if F is None else F
    w = DisturbanceSignal("zero", d=d) if w is None else w
    if F.q != q or w.d != d:
        raise ValueError("signal dimensions do not match the system")
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x.size != n:
        raise ValueError(f"x0 must have length {n}")
    P = None if P is None else as_matrix(P, "P")

    rows = {name: [] for name in ("x", "u", "y", "z", "w", "phi")}
    Fs = []

    def pack(count):
        arr = {key: np.array(val).reshape(count, -1) for key, val in rows.items()}
        V = None if P is None else np.einsum("ki,ij,kj->k", arr["x"], P, arr["x"])
        return Trajectory(np.arange(count), arr["x"], arr["u"], arr["y"], arr["z"], arr["w"],
                          Fs, arr["phi"], V)

    for k in range(horizon + 1):
        Fk = F.at(k)
        wk = w.at(k)
        yk = (system.C + system.M2 @ Fk @ system.N) @ x + system.D @ wk
        uk = K @ yk
        ph = phi(x, uk)
        for key, val in (("x", x), ("u", uk), ("y", yk), ("z", system.H @ x), ("w", wk), ("phi", ph)):
            rows[key].append(val)
        Fs.append(Fk)
        if k == horizon:
            break
        x = (system.A + system.M1 @ Fk @ system.N) @ x + ph + system.B1 @ uk + system.B2 @ wk
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_LIMIT:
            raise Diverged(f"state norm exceeded {DIVERGENCE_LIMIT:g} at step {k + 1}", pack(k + 1))
    return pack(horizon + 1)


def empirical_l2_gain(system: UncertainSystem, K, phi, F, w_ensemble, horizon: int) -> float:
    """Worst ``||z|| / ||w||`` over the ensemble, starting from ``x0 = 0``."""
    worst = 0.0
    for w in w_ensemble:
        traj = simulate(system, K, phi, F, w, x0=None, horizon=horizon)
        ew = float(np.sum(traj.w**2))
        if ew == 0.0:
            raise ValueError("disturbance with zero energy over the horizon")
        worst = max(worst, float(np.sqrt(np.sum(traj.z**2) / ew)))
    return worst


def lyapunov_decrement_check(trajectory: Trajectory, tolerance: float = 1e-9) -> tuple[bool, int | None]:
    """``(True, None)`` iff ``V(k+1) < V(k)`` wherever ``||x(k)|| > tolerance``."""
    if trajectory.V is None:
        raise ValueError("trajectory has no Lyapunov values; simulate with P")
    V = trajectory.V
    norms = np.linalg.norm(trajectory.x, axis=1)
    for k in range(len(V) - 1):
        if norms[k] > tolerance and not V[k + 1] < V[k]:
            return False, k
    return True, None


def random_sinusoid_perturbation(n: int, lipschitz: float, rng: np.random.Generator) -> NonlinearityDescriptor:
    """Random coordinate sinusoid whose tight Lipschitz constant equals ``lipschitz``."""
    coef = rng.uniform(-1.0, 1.0, n)
    sources = rng.integers(0, n, n)
    raw = coordinate_sinusoid_lipschitz(coef, sources)
    coef = coef * (lipschitz / raw) if raw > 0 else np.zeros(n)
    return NonlinearityDescriptor.sinusoid(coef, sources + 1, lipschitz=float(lipschitz))


@dataclass
class MonteCarloResult:
    fraction: float
    converged: list[bool]
    final_ratio: list[float]


def monte_carlo_robustness(system: UncertainSystem, K, base_phi: NonlinearityDescriptor | None,
                           perturbation_lipschitz: float, trials: int = 100, seed: int = 0,
                           horizon: int = MC_HORIZON, detail: bool = False):
    """Fraction of random trials that converge under ``base_phi + dPhi``.

    Each trial draws a unit-norm ``x0``, a random switching ``F(k)`` and a
    coordinate-sinusoid perturbation with the given Lipschitz constant.
    Trials are independent and seeded from ``seed`` by index.
    """
    if perturbation_lipschitz < 0:
        raise ValueError("perturbation_lipschitz must be nonnegative")
    if trials < 1:
        raise ValueError("trials must be positive")
    base = system.phi if base_phi is None else base_phi
    flags, ratios = [], []
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        x0 = rng.standard_normal(system.n)
        x0 /= np.linalg.norm(x0)
        dphi = random_sinusoid_perturbation(system.n, perturbation_lipschitz, rng)
        phi = base + dphi if base.kind != "none" else dphi
        F = UncertaintySignal("random_switching", q=system.q, seed=int(rng.integers(2**31)))
        try:
            traj = simulate(system, K, phi, F, None, x0, horizon)
            ratio = float(np.linalg.norm(traj.x[-1]))
        except Diverged:
            ratio = float("inf")
        ratios.append(ratio)
        flags.append(ratio <= CONVERGENCE_RATIO)
    result = MonteCarloResult(float(np.mean(flags)), flags, ratios)
    return result if detail else result.fraction


__all__ = [
    "Diverged",
    "MonteCarloResult",
    "Trajectory",
    "empirical_l2_gain",
    "lyapunov_decrement_check",
    "monte_carlo_robustness",
    "random_sinusoid_perturbation",
    "simulate",
]

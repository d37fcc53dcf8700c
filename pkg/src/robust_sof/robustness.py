"""Tolerable nonlinear-uncertainty bounds derived from a synthesis result.

Two flavours are provided. The norm-wise margin ``gamma_star - gamma`` bounds
the Lipschitz constant of any additive perturbation of the nonlinearity. The
element-wise version works with matrix Lipschitz constants and bounds each
entry separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix_core import (
    DimensionError,
    as_matrix,
    elementwise_leq,
    hadamard,
    lambda_min,
    spectral_norm,
    symmetrize,
)

SLACK_TOL = 1e-10


@dataclass
class RobustnessReport:
    gamma_actual: float
    gamma_star: float
    normwise_margin: float
    elementwise_lower: np.ndarray | None = None
    elementwise_upper: np.ndarray | None = None
    Gamma_actual: np.ndarray | None = None
    Gamma_star: np.ndarray | None = None

    def to_dict(self) -> dict:
        def mat(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "gamma_actual": self.gamma_actual,
            "gamma_star": self.gamma_star,
            "normwise_margin": self.normwise_margin,
            "Gamma_actual": mat(self.Gamma_actual),
            "Gamma_star": mat(self.Gamma_star),
            "elementwise_lower": mat(self.elementwise_lower),
            "elementwise_upper": mat(self.elementwise_upper),
        }


def normwise_margin(gamma_actual: float, gamma_star: float) -> float:
    """``gamma_star - gamma_actual``; negative means no certified margin."""
    if gamma_actual < 0 or gamma_star < 0:
        raise ValueError("Lipschitz constants must be nonnegative")
    return float(gamma_star) - float(gamma_actual)


def jacobian_margin_check(jacobian_norm_bound: float, margin: float) -> bool:
    """True iff a perturbation with this Jacobian norm bound fits inside ``margin``."""
    if jacobian_norm_bound < 0:
        raise ValueError("jacobian_norm_bound must be nonnegative")
    return jacobian_norm_bound <= max(0.0, margin)


def _square_pair(S, T, names=("S", "T")):
    S = as_matrix(S, names[0])
    T = as_matrix(T, names[1])
    if S.shape[0] != S.shape[1] or S.shape != T.shape:
        raise DimensionError(f"{names[0]} and {names[1]} must be square of equal size, got {S.shape} and {T.shape}")
    return S, T


def hadamard_slack(S, T) -> float:
    """Smallest eigenvalue of ``(T T') o (n I) - S S'``."""
    S, T = _square_pair(S, T)
    n = S.shape[0]
    return lambda_min(symmetrize(hadamard(T @ T.T, n * np.eye(n)) - S @ S.T))


def check_hadamard_lemma(S, T) -> bool:
    """Evaluate ``S S' <= (T T') o nI`` for ``|S| <= T`` entrywise."""
    S, T = _square_pair(S, T)
    if not elementwise_leq(np.abs(S), T):
        raise ValueError("precondition |S| <= T (entrywise) violated")
    scale = 1.0 + float(np.max(T @ T.T, initial=0.0)) * S.shape[0]
    return hadamard_slack(S, T) >= -SLACK_TOL * scale


def admissible_perturbation_check(Gamma_delta, Gamma_star) -> bool:
    """True iff ``|Gamma_delta| <= Gamma_star / sqrt(n)`` entrywise.

    When it holds, the spectral-norm consequence is asserted as well.
    """
    Gd, Gs = _square_pair(Gamma_delta, Gamma_star, ("Gamma_delta", "Gamma_star"))
    n = Gd.shape[0]
    ok = elementwise_leq(np.abs(Gd), Gs / math.sqrt(n))
    if ok:
        lhs, rhs = spectral_norm(Gd), spectral_norm(Gs)
        if lhs > rhs + 1e-10 * (1.0 + rhs):
            raise AssertionError(f"spectral bound violated: {lhs} > {rhs}")
    return ok


def elementwise_bounds(Gamma, Gamma_star) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise interval ``-g*/sqrt(n) - g <= delta <= g*/sqrt(n) - g``."""
    G, Gs = _square_pair(Gamma, Gamma_star, ("Gamma", "Gamma_star"))
    if np.any(Gs < 0):
        raise ValueError("Gamma_star must be entrywise nonnegative")
    r = Gs / math.sqrt(G.shape[0])
    return -r - G, r - G


def robustness_report(gamma_actual: float, gamma_star: float, Gamma_actual=None, Gamma_star=None) -> RobustnessReport:
    report = RobustnessReport(gamma_actual, gamma_star, normwise_margin(gamma_actual, gamma_star))
    if Gamma_star is not None:
        Gs = as_matrix(Gamma_star, "Gamma_star")
        G = np.zeros_like(Gs) if Gamma_actual is None else as_matrix(Gamma_actual, "Gamma_actual")
        report.Gamma_actual, report.Gamma_star = G, Gs
        report.elementwise_lower, report.elementwise_upper = elementwise_bounds(G, np.abs(Gs))
    return report

"""Robust H-infinity static output feedback synthesis.

Four LMI programs share one block pattern (``n`` states, ``q`` uncertainty
channels, ``d`` disturbances):

    [ L1    X12   Lam    0        0     ]
    [ *     X22   0      0        0     ]
    [ *     *     -P/2   P        PM    ]   < 0
    [ *     *     *      P-2e1 I  0     ]
    [ *     *     *      *        -e2 I ]

    [ -zeta I   Lam4   Lam4 ]
    [ *         -P/2   0    ]   < 0,        L1 = H'H - P + e2 N'N
    [ *         *      -I   ]

* ``analyze_lemma3``: ``Lam = A'P``, ``PM = P M1``, ``Lam4 = B'P`` for an
  autonomous plant.
* ``synth_theorem1``: ``G = P B1 K`` (n x p), ``Lam = A'P + C'G'``,
  ``PM = P M1 + G M2``, ``Lam4 = B2'P + D'G'``; ``K = B1' Kbar`` with
  ``P B1 B1' Kbar = G`` solved through Kronecker vectorisation.
* ``synth_corollary1``: ``G = Q K`` (m x p) with ``P B1 = B1 Q``,
  ``Lam = A'P + C'G'B1'``, ``PM = P M1 + B1 G M2``, ``Lam4 = B2'P + D'G'B1'``,
  and ``[[I, I-Q], [*, I]] > 0`` so that ``K = Q^{-1} G`` exists.
* ``synth_corollary2``: as ``synth_corollary1`` but ``X12`` is a free matrix ``Acal``
  with ``X22 = -I`` and the objective ``min e1 - omega`` with
  ``c_ij Acal_ij > omega``.

With ``X12 = I`` and ``X22 = -alpha I`` the admissible Lipschitz constant is
``1 / sqrt(alpha (1 + e1))``. For a fixed Lipschitz constant ``g`` the second
row and column are dropped and ``(1 + e1) g^2 I`` is added to ``L1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import sdp
from .affine import Affine, ProblemBuilder, bmat
from .matrix_core import kron, lambda_max, rank, spectral_norm, unvec, vec
from .sdp import SdpProblem, SdpSolution, SdpStatus, SolverConfig
from .system import AutonomousSystem, UncertainSystem

METHODS = ("lemma3_analysis", "theorem1", "corollary1", "corollary2")
RANK_RTOL = 1e-9

Solver = Callable[[SdpProblem, SolverConfig], SdpSolution]


class QSingularError(RuntimeError):
    """The multiplier Q returned by the solver cannot be inverted."""


class NotInvertibleError(ValueError):
    """``I + K D1`` is singular, so the feedthrough cannot be removed."""


@dataclass(frozen=True)
class SynthesisRequest:
    """What to solve and how.

    Attributes
    ----------
    method : str
        One of ``lemma3_analysis``, ``theorem1``, ``corollary1``, ``corollary2``.
    mu : float or None
        Fixed attenuation level; ``None`` makes ``zeta = mu^2`` a decision
        variable weighted by ``w_attenuation``.
    gamma : float or None
        ``None`` maximises the admissible Lipschitz constant; a number turns
        the problem into a feasibility test at that Lipschitz constant.
    w_lipschitz, w_attenuation : float
        Scalarisation weights on ``alpha + e1`` (``e1 - omega`` for
        ``corollary2``) and on ``zeta``.
    weights : array or None
        Positive ``c_ij`` for ``corollary2`` (default all ones).
    bound_p_by_identity : bool
        Add ``P <= (1 - tau) I``.
    """

    method: str = "corollary1"
    mu: float | None = 2.5
    gamma: float | None = None
    w_lipschitz: float = 1.0
    w_attenuation: float = 1.0
    weights: np.ndarray | None = None
    bound_p_by_identity: bool = True
    config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.mu is not None and not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.w_lipschitz < 0 or self.w_attenuation < 0:
            raise ValueError("weights must be nonnegative")
        if self.mu is None and self.w_attenuation <= 0:
            raise ValueError("optimising mu needs a positive w_attenuation, otherwise the objective is unbounded")
        if self.method == "corollary2":
            if self.mu is None:
                raise ValueError("corollary2 needs a fixed mu")
            if self.gamma is not None:
                raise ValueError("corollary2 optimises the matrix Lipschitz bound; gamma must be None")
            if self.weights is not None and not np.all(np.asarray(self.weights) > 0):
                raise ValueError("corollary2 weights must be positive")


@dataclass
class SynthesisResult:
    method: str
    status: SdpStatus
    P: np.ndarray | None = None
    G: np.ndarray | None = None
    Q: np.ndarray | None = None
    Acal: np.ndarray | None = None
    alpha_star: float | None = None
    eps1_star: float | None = None
    eps2: float | None = None
    omega: float | None = None
    gamma_star: float | None = None
    mu: float | None = None
    K: np.ndarray | None = None
    Kbar: np.ndarray | None = None
    Gamma_star: np.ndarray | None = None
    gain_recovery: str | None = None
    gain_residual: float | None = None
    rank_condition_holds: bool | None = None
    objective_value: float | None = None
    solution: SdpSolution | None = field(default=None, repr=False)
    problem: SdpProblem | None = field(default=None, repr=False)
    block_names: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status is SdpStatus.OPTIMAL

    def to_dict(self) -> dict:
        def mat(x):
            return None if x is None else np.asarray(x).tolist()

        out = {
            "method": self.method,
            "status": self.status.value,
            "alpha_star": self.alpha_star,
            "eps1_star": self.eps1_star,
            "eps2": self.eps2,
            "omega": self.omega,
            "gamma_star": self.gamma_star,
            "mu": self.mu,
            "objective_value": self.objective_value,
            "P": mat(self.P),
            "G": mat(self.G),
            "Q": mat(self.Q),
            "Acal": mat(self.Acal),
            "Gamma_star": mat(self.Gamma_star),
            "K": mat(self.K),
            "Kbar": mat(self.Kbar),
            "diagnostics": {
                "gain_recovery": self.gain_recovery,
                "gain_residual": self.gain_residual,
                "rank_condition_holds": self.rank_condition_holds,
            },
        }
        if self.solution is not None:
            sol = self.solution
            out["diagnostics"].update(
                block_slacks=dict(zip(self.block_names, map(float, sol.block_slacks))),
                equality_residual=sol.equality_residual,
                iterations=sol.iterations,
                phase1_value=None if math.isnan(sol.phase1_value) else sol.phase1_value,
                solver_message=sol.message,
            )
        return out


# ---------------------------------------------------------------------------
# block assembly shared by all formulations


def performance_lmis(P, Lam, PM, Lam4, H, N, eps1, eps2, zeta, *, alpha=None, gamma=None, Acal=None):
    """Return the two performance LMI matrices (stability block, attenuation block).

    Works for numeric arrays and :class:`~robust_sof.affine.Affine`
    expressions alike. Exactly one of ``alpha`` (Lipschitz maximisation),
    ``gamma`` (fixed Lipschitz constant) or ``Acal`` (matrix bound) is used.
    """
    n = H.shape[1]
    q = N.shape[0]
    d = Lam4.shape[0]
    In = np.eye(n)
    L1 = H.T @ H - P + eps2 * (N.T @ N)
    if gamma is not None:
        L1 = L1 + gamma**2 * In + (gamma**2 * In) * eps1
    Znn, Znq, Zqn = np.zeros((n, n)), np.zeros((n, q)), np.zeros((q, n))
    top = [L1, Lam, Znn, Znq]
    mid = [Lam.T, -0.5 * P, P, PM]
    low = [Znn, P, P - 2.0 * In * eps1, Znq]
    bot = [Zqn, PM.T, Zqn, -np.eye(q) * eps2]
    if gamma is not None:
        rows = [top, mid, low, bot]
    else:
        x12, x22 = (Acal, -In) if Acal is not None else (In, -In * alpha)
        rows = [
            [top[0], x12] + top[1:],
            [x12.T, x22, Znn, Znn, Znq],
            [mid[0], Znn] + mid[1:],
            [low[0], Znn] + low[1:],
            [bot[0], Zqn] + bot[1:],
        ]
    stab = _assemble(rows)
    att = _assemble([
        [-np.eye(d) * zeta, Lam4, Lam4],
        [Lam4.T, -0.5 * P, np.zeros((n, n))],
        [Lam4.T, np.zeros((n, n)), -In],
    ])
    return stab, att


def _assemble(rows):
    if any(isinstance(b, Affine) for row in rows for b in row):
        return bmat(rows)
    return np.block([[np.asarray(b, dtype=float) for b in row] for row in rows])


def _scalar(b: ProblemBuilder, name: str) -> Affine:
    var = b.scalar(name)
    b.lmi_pos(var, f"{name}>0")
    return var


def _finalise(b: ProblemBuilder, request: SynthesisRequest, lipschitz_obj, zeta, zeta_is_var):
    obj = lipschitz_obj * request.w_lipschitz if lipschitz_obj is not None else None
    if zeta_is_var:
        obj = zeta * request.w_attenuation if obj is None else obj + zeta * request.w_attenuation
    if obj is not None:
        b.minimize(obj)
    return b.build()


def _common_variables(b: ProblemBuilder, n: int, request: SynthesisRequest):
    P = b.symmetric("P", n)
    b.lmi_pos(P, "P>0")
    if request.bound_p_by_identity:
        b.lmi_neg(P - np.eye(n), "P<I")
    eps1 = _scalar(b, "eps1")
    eps2 = _scalar(b, "eps2")
    if request.mu is None:
        zeta = _scalar(b, "zeta")
    else:
        zeta = request.mu**2
    alpha = None
    if request.gamma is None and request.method != "corollary2":
        alpha = _scalar(b, "alpha")
    return P, eps1, eps2, zeta, alpha


def _add_performance(b, request, P, Lam, PM, Lam4, H, N, eps1, eps2, zeta, alpha, Acal=None):
    stab, att = performance_lmis(P, Lam, PM, Lam4, H, N, eps1, eps2, zeta,
                                 alpha=alpha, gamma=request.gamma, Acal=Acal)
    b.lmi_neg(stab, "stability")
    b.lmi_neg(att, "attenuation")


def _value(b, expr, sol):
    return b.value(expr, sol.v)


def _scalars(result: SynthesisResult, b, sol, request, eps1, eps2, zeta, alpha):
    result.eps1_star = float(_value(b, eps1, sol)[0, 0])
    result.eps2 = float(_value(b, eps2, sol)[0, 0])
    result.mu = math.sqrt(float(_value(b, zeta, sol)[0, 0])) if request.mu is None else request.mu
    if alpha is not None:
        result.alpha_star = float(_value(b, alpha, sol)[0, 0])
        result.gamma_star = admissible_lipschitz(result.alpha_star, result.eps1_star)
    elif request.gamma is not None:
        result.gamma_star = request.gamma


def admissible_lipschitz(alpha: float, eps1: float) -> float:
    """``1 / sqrt(alpha (1 + eps1))``."""
    return 1.0 / math.sqrt(alpha * (1.0 + eps1))


def _new_result(request, problem, b, sol):
    names = tuple(blk.name for blk in problem.lmi_blocks)
    res = SynthesisResult(request.method, sol.status, solution=sol, problem=problem, block_names=names)
    if sol.ok:
        res.objective_value = sol.objective_value
    return res


# ---------------------------------------------------------------------------
# formulations


def build_lemma3(system: AutonomousSystem | UncertainSystem, request: SynthesisRequest):
    sys2 = _autonomous(system)
    n = sys2.n
    b = ProblemBuilder()
    P, eps1, eps2, zeta, alpha = _common_variables(b, n, request)
    _add_performance(b, request, P, sys2.A.T @ P, P @ sys2.M1, sys2.B.T @ P, sys2.H, sys2.N,
                     eps1, eps2, zeta, alpha)
    lip = None if alpha is None else alpha + eps1
    problem = _finalise(b, request, lip, zeta, request.mu is None)
    return b, problem, dict(P=P, eps1=eps1, eps2=eps2, zeta=zeta, alpha=alpha)


def _autonomous(system) -> AutonomousSystem:
    if isinstance(system, AutonomousSystem):
        return system
    return AutonomousSystem(system.A, system.B2, system.H, system.M1, system.N, system.phi)


def analyze_lemma3(system: AutonomousSystem | UncertainSystem, request: SynthesisRequest | None = None,
                   solver: Solver = sdp.solve) -> SynthesisResult:
    """Robust stability / attenuation analysis of an autonomous uncertain plant.

    An :class:`UncertainSystem` is read as ``(A, B2, H, M1, N)``, i.e. with the
    control channel open.
    """
    request = request or SynthesisRequest(method="lemma3_analysis")
    if request.method != "lemma3_analysis":
        raise ValueError("analyze_lemma3 needs method='lemma3_analysis'")
    b, problem, v = build_lemma3(system, request)
    sol = solver(problem, request.config)
    res = _new_result(request, problem, b, sol)
    if sol.ok:
        res.P = _value(b, v["P"], sol)
        _scalars(res, b, sol, request, v["eps1"], v["eps2"], v["zeta"], v["alpha"])
    return res


def build_theorem1(system: UncertainSystem, request: SynthesisRequest):
    s = system
    b = ProblemBuilder()
    P, eps1, eps2, zeta, alpha = _common_variables(b, s.n, request)
    G = b.matrix("G", s.n, s.p)
    Lam = s.A.T @ P + s.C.T @ G.T
    PM = P @ s.M1 + G @ s.M2
    Lam4 = s.B2.T @ P + s.D.T @ G.T
    _add_performance(b, request, P, Lam, PM, Lam4, s.H, s.N, eps1, eps2, zeta, alpha)
    lip = None if alpha is None else alpha + eps1
    problem = _finalise(b, request, lip, zeta, request.mu is None)
    return b, problem, dict(P=P, G=G, eps1=eps1, eps2=eps2, zeta=zeta, alpha=alpha)


def synth_theorem1(system: UncertainSystem, request: SynthesisRequest | None = None,
                   solver: Solver = sdp.solve) -> SynthesisResult:
    """Solve the ``G = P B1 K`` formulation and recover ``K = B1' Kbar``.

    The gain is exact only when ``vec(G)`` lies in the range of
    ``I_p (x) P B1 B1'``; otherwise the least-squares gain is returned and
    ``rank_condition_holds`` is false.
    """
    request = request or SynthesisRequest(method="theorem1")
    if request.method != "theorem1":
        raise ValueError("synth_theorem1 needs method='theorem1'")
    b, problem, v = build_theorem1(system, request)
    sol = solver(problem, request.config)
    res = _new_result(request, problem, b, sol)
    if not sol.ok:
        return res
    res.P = _value(b, v["P"], sol)
    res.G = _value(b, v["G"], sol)
    _scalars(res, b, sol, request, v["eps1"], v["eps2"], v["zeta"], v["alpha"])
    kbar, residual, cond = solve_gain_kronecker(res.P, system.B1, res.G)
    res.Kbar = kbar
    res.gain_residual = residual
    res.rank_condition_holds = cond
    if not np.all(np.isfinite(kbar)):
        res.gain_recovery = "failed"
        return res
    res.K = system.B1.T @ kbar
    res.gain_recovery = "exact" if cond else "least_squares"
    return res


def solve_gain_kronecker(P, B1, G) -> tuple[np.ndarray, float, bool]:
    """Solve ``P B1 B1' Kbar = G`` in the least-squares sense.

    Returns ``(Kbar, residual, rank_condition)`` where ``residual`` is the
    spectral norm of ``P B1 B1' Kbar - G`` and ``rank_condition`` compares
    the ranks of ``I_p (x) P B1 B1'`` with and without ``vec(G)`` appended.
    """
    P = np.asarray(P, dtype=float)
    B1 = np.asarray(B1, dtype=float)
    G = np.asarray(G, dtype=float)
    n, p = G.shape
    W = P @ B1 @ B1.T
    coef = kron(np.eye(p), W)
    g = vec(G)
    sol = np.linalg.lstsq(coef, g, rcond=None)[0]
    kbar = unvec(sol, n, p)
    aug = np.hstack([coef, g])
    smax = np.linalg.svd(aug, compute_uv=False)[0] if aug.size else 0.0
    if smax == 0.0:
        cond = True
    else:
        s_coef = np.linalg.svd(coef, compute_uv=False)
        s_aug = np.linalg.svd(aug, compute_uv=False)
        cond = int(np.sum(s_coef > RANK_RTOL * smax)) == int(np.sum(s_aug > RANK_RTOL * smax))
    residual = spectral_norm(W @ kbar - G)
    return kbar, residual, bool(cond)


def build_corollary(system: UncertainSystem, request: SynthesisRequest):
    s = system
    b = ProblemBuilder()
    P, eps1, eps2, zeta, alpha = _common_variables(b, s.n, request)
    G = b.matrix("G", s.m, s.p)
    Q = b.matrix("Q", s.m, s.m)
    b.equal(P @ s.B1 - s.B1 @ Q, "PB1=B1Q")
    Im = np.eye(s.m)
    b.lmi_pos(bmat([[Im, Im - Q], [(Im - Q).T, Im]]), "Pi1")
    Lam = s.A.T @ P + s.C.T @ G.T @ s.B1.T
    PM = P @ s.M1 + s.B1 @ G @ s.M2
    Lam4 = s.B2.T @ P + s.D.T @ G.T @ s.B1.T
    extra = dict(P=P, G=G, Q=Q, eps1=eps1, eps2=eps2, zeta=zeta, alpha=alpha)
    if request.method == "corollary2":
        n = s.n
        Acal = b.matrix("Acal", n, n)
        omega = _scalar(b, "omega")
        c = np.ones((n, n)) if request.weights is None else np.asarray(request.weights, dtype=float)
        if c.shape != (n, n):
            raise ValueError(f"corollary2 weights must be {n} x {n}")
        entries = [Acal[i, j] * c[i, j] - omega for i in range(n) for j in range(n)]
        b.lmi_pos(_diag(entries), "c_ij*Acal_ij>omega")
        _add_performance(b, request, P, Lam, PM, Lam4, s.H, s.N, eps1, eps2, zeta, None, Acal=Acal)
        problem = _finalise(b, request, eps1 - omega, zeta, False)
        extra.update(Acal=Acal, omega=omega)
    else:
        _add_performance(b, request, P, Lam, PM, Lam4, s.H, s.N, eps1, eps2, zeta, alpha)
        lip = None if alpha is None else alpha + eps1
        problem = _finalise(b, request, lip, zeta, request.mu is None)
    return b, problem, extra


def _diag(entries) -> Affine:
    k = len(entries)
    return bmat([[entries[i] if i == j else np.zeros((1, 1)) for j in range(k)] for i in range(k)])


def _recover_q_gain(res: SynthesisResult):
    smin = np.linalg.svd(res.Q, compute_uv=False)[-1]
    if smin <= 1e-9:
        raise QSingularError(f"smallest singular value of Q is {smin:.3e}")
    res.K = np.linalg.solve(res.Q, res.G)
    res.gain_recovery = "exact"
    res.gain_residual = spectral_norm(res.Q @ res.K - res.G)


def synth_corollary1(system: UncertainSystem, request: SynthesisRequest | None = None,
                     solver: Solver = sdp.solve) -> SynthesisResult:
    """Solve the equality-constrained SDP (``P B1 = B1 Q``) and return ``K = Q^{-1} G``."""
    request = request or SynthesisRequest(method="corollary1")
    if request.method != "corollary1":
        raise ValueError("synth_corollary1 needs method='corollary1'")
    b, problem, v = build_corollary(system, request)
    sol = solver(problem, request.config)
    res = _new_result(request, problem, b, sol)
    if not sol.ok:
        return res
    res.P = _value(b, v["P"], sol)
    res.G = _value(b, v["G"], sol)
    res.Q = _value(b, v["Q"], sol)
    _scalars(res, b, sol, request, v["eps1"], v["eps2"], v["zeta"], v["alpha"])
    _recover_q_gain(res)
    return res


def synth_corollary2(system: UncertainSystem, request: SynthesisRequest | None = None,
                     solver: Solver = sdp.solve) -> SynthesisResult:
    """Maximise a weighted matrix-type Lipschitz bound.

    Returns ``Gamma_star = Acal / sqrt(1 + e1)`` together with ``K = Q^{-1} G``.
    The stability block carries ``Acal`` in position (1, 2), so it certifies
    ``|Phi(x1) - Phi(x2)| <= |Gamma_star' (x1 - x2)|``.
    """
    request = request or SynthesisRequest(method="corollary2")
    if request.method != "corollary2":
        raise ValueError("synth_corollary2 needs method='corollary2'")
    b, problem, v = build_corollary(system, request)
    sol = solver(problem, request.config)
    res = _new_result(request, problem, b, sol)
    if not sol.ok:
        return res
    res.P = _value(b, v["P"], sol)
    res.G = _value(b, v["G"], sol)
    res.Q = _value(b, v["Q"], sol)
    res.Acal = _value(b, v["Acal"], sol)
    res.omega = float(_value(b, v["omega"], sol)[0, 0])
    _scalars(res, b, sol, request, v["eps1"], v["eps2"], v["zeta"], None)
    res.Gamma_star = res.Acal / math.sqrt(1.0 + res.eps1_star)
    _recover_q_gain(res)
    return res


def synthesize(system, request: SynthesisRequest, solver: Solver = sdp.solve) -> SynthesisResult:
    """Dispatch on ``request.method``."""
    fn = {"lemma3_analysis": analyze_lemma3, "theorem1": synth_theorem1,
          "corollary1": synth_corollary1, "corollary2": synth_corollary2}[request.method]
    return fn(system, request, solver)


def transform_feedthrough(K, D1) -> np.ndarray:
    """Gain for ``y = C x + D1 u + D2 w`` from a gain designed for ``y - D1 u``.

    Returns ``(I + K D1)^{-1} K``.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    D1 = np.atleast_2d(np.asarray(D1, dtype=float))
    M = np.eye(K.shape[0]) + K @ D1
    if np.linalg.svd(M, compute_uv=False)[-1] <= 1e-9:
        raise NotInvertibleError("I + K D1 is singular")
    return np.linalg.solve(M, K)


# ---------------------------------------------------------------------------
# certificate checks


def closed_loop_certificate(system: UncertainSystem | AutonomousSystem, result: SynthesisResult,
                            K=None) -> dict[str, float]:
    """Largest eigenvalues of the analysis LMIs rebuilt on the closed loop.

    Substitutes ``u = K y`` (``K`` defaults to ``result.K``) and evaluates the
    autonomous-plant blocks with the returned ``P`` and scalars, independently
    of the synthesis parametrisation. Every value must be at most
    ``-tau + feas_tol`` for the certificate to hold.
    """
    if result.P is None:
        raise ValueError("result carries no certificate")
    if isinstance(system, UncertainSystem):
        K = result.K if K is None else K
        if K is None:
            raise ValueError("no gain to close the loop with")
        sys2 = system.closed_loop(K)
    else:
        sys2 = system
    P = result.P
    zeta = result.mu**2
    kw = {}
    if result.Acal is not None:
        kw["Acal"] = result.Acal
    elif result.alpha_star is not None:
        kw["alpha"] = result.alpha_star
    else:
        kw["gamma"] = result.gamma_star
    stab, att = performance_lmis(P, sys2.A.T @ P, P @ sys2.M1, sys2.B.T @ P, sys2.H, sys2.N,
                                 result.eps1_star, result.eps2, zeta, **kw)
    n = sys2.n
    out = {"stability": lambda_max(stab), "attenuation": lambda_max(att),
           "P>0": -float(np.linalg.eigvalsh(P)[0]), "P<I": lambda_max(P - np.eye(n))}
    if result.Q is not None:
        m = result.Q.shape[0]
        Im = np.eye(m)
        out["Pi1"] = lambda_max(-np.block([[Im, Im - result.Q], [(Im - result.Q).T, Im]]))
    return out


def max_admissible_lipschitz(system, request: SynthesisRequest, upper: float = 10.0, tol: float = 1e-4,
                             solver: Solver = sdp.solve) -> float:
    """Largest Lipschitz constant for which the fixed-constant problem is feasible (bisection)."""
    def feasible(g):
        return synthesize(system, replace(request, gamma=g), solver).ok

    lo, hi = 0.0, upper
    if not feasible(lo):
        return math.nan
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo

"""Command-line front end.

Exit codes: 0 success, 1 infeasible or failed computation (diagnostics are
still written), 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import robustness, simulator, synthesis
from .sdp import SolverConfig
from .svg import write_state_plot
from .system import (
    DisturbanceSignal,
    SystemFileError,
    UncertaintySignal,
    UncertainSystem,
    benchmark_system,
    load_system,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad user input; the message names the offending flag or field."""


# ---------------------------------------------------------------------------
# argument types


def _number(kind, cond, what):
    def parse(text):
        try:
            val = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {what}, got {text!r}") from None
        if isinstance(val, float) and not math.isfinite(val) or not cond(val):
            raise argparse.ArgumentTypeError(f"expected {what}, got {text!r}")
        return val
    return parse


positive_float = _number(float, lambda v: v > 0, "a positive number")
nonneg_float = _number(float, lambda v: v >= 0, "a nonnegative number")
positive_int = _number(int, lambda v: v > 0, "a positive integer")
nonneg_int = _number(int, lambda v: v >= 0, "a nonnegative integer")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--tau", type=positive_float, default=1e-6, help="strictness margin (default 1e-6)")
    g.add_argument("--feas-tol", type=positive_float, default=1e-7)
    g.add_argument("--gap-tol", type=positive_float, default=1e-7)
    g.add_argument("--max-iterations", type=positive_int, default=200)


def _synthesis_flags(p, method_default="corollary1"):
    p.add_argument("--method", choices=synthesis.METHODS, default=method_default)
    p.add_argument("--mu", type=positive_float, default=2.5, help="attenuation level (default 2.5)")
    p.add_argument("--optimize-mu", action="store_true", help="treat mu as a decision variable")
    p.add_argument("--gamma-fixed", type=nonneg_float, default=None,
                   help="feasibility test at this Lipschitz constant instead of maximising it")
    p.add_argument("--w-lipschitz", type=nonneg_float, default=1.0)
    p.add_argument("--w-attenuation", type=nonneg_float, default=1.0)
    p.add_argument("--no-p-bound", action="store_true", help="drop the P <= I normalisation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robust-sof", description="Robust static output feedback synthesis and validation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="stability/performance analysis of a closed loop")
    p.add_argument("--system", required=True, help="system JSON file, or 'benchmark'")
    p.add_argument("--gain", help="results JSON providing K (default: open loop, K = 0)")
    p.add_argument("--mu", type=positive_float, default=2.5)
    p.add_argument("--gamma-fixed", type=nonneg_float, default=None)
    p.add_argument("--no-p-bound", action="store_true")
    p.add_argument("--out", help="results JSON path")
    _solver_flags(p)

    p = sub.add_parser("synth", help="synthesise a static output feedback gain")
    p.add_argument("--system", required=True, help="system JSON file, or 'benchmark'")
    _synthesis_flags(p)
    p.add_argument("--out", help="results JSON path")
    _solver_flags(p)

    p = sub.add_parser("simulate", help="closed-loop simulation")
    p.add_argument("--system", required=True, help="system JSON file, or 'benchmark'")
    p.add_argument("--gain", required=True, help="results JSON providing K (and P for V = x'Px)")
    p.add_argument("--steps", type=positive_int, default=200)
    p.add_argument("--x0", default="random", help="'random', 'zero' or comma-separated values")
    p.add_argument("--seed", type=nonneg_int, default=0)
    p.add_argument("--uncertainty", choices=("zero", "random_switching", "sinusoidal"), default="random_switching")
    p.add_argument("--disturbance", choices=("zero", "impulse", "finite_random"), default="zero")
    p.add_argument("--disturbance-file", help="CSV with one row of d values per step")
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--plot", help="SVG path for the state plot")

    p = sub.add_parser("robustness", help="tolerable-uncertainty margins and Monte Carlo check")
    p.add_argument("--system", required=True, help="system JSON file, or 'benchmark'")
    p.add_argument("--gain", required=True, help="results JSON from synth")
    p.add_argument("--gamma-actual", type=nonneg_float, default=None,
                   help="Lipschitz constant of the nominal nonlinearity (default: from the system file)")
    p.add_argument("--trials", type=positive_int, default=100)
    p.add_argument("--seed", type=nonneg_int, default=0)
    p.add_argument("--perturbation", type=nonneg_float, default=None,
                   help="Lipschitz constant of random perturbations (default 0.9 x margin)")
    p.add_argument("--out", help="report JSON path")

    p = sub.add_parser("demo", help="synthesis and simulation on the built-in five-state plant")
    _synthesis_flags(p)
    p.add_argument("--steps", type=positive_int, default=200)
    p.add_argument("--seed", type=nonneg_int, default=7)
    p.add_argument("--out-dir", default="demo_output")
    _solver_flags(p)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _load_system(arg: str) -> UncertainSystem:
    if arg == "benchmark":
        return benchmark_system()
    try:
        return load_system(arg)
    except SystemFileError as exc:
        raise InputError(f"--system {arg}: {exc}") from exc


def _config(args) -> SolverConfig:
    return SolverConfig(tau=args.tau, feas_tol=args.feas_tol, duality_gap_tol=args.gap_tol,
                        max_iterations=args.max_iterations)


def _request(args, method=None) -> synthesis.SynthesisRequest:
    try:
        return synthesis.SynthesisRequest(
            method=method or args.method,
            mu=None if getattr(args, "optimize_mu", False) else args.mu,
            gamma=args.gamma_fixed,
            w_lipschitz=getattr(args, "w_lipschitz", 1.0),
            w_attenuation=getattr(args, "w_attenuation", 1.0),
            bound_p_by_identity=not args.no_p_bound,
            config=_config(args),
        )
    except ValueError as exc:
        raise InputError(f"--method {method or args.method}: {exc}") from exc


def _read_gain(path: str, system: UncertainSystem):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"--gain {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"--gain {path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise InputError(f"--gain {path}: top level must be an object")
    res = data.get("result", data)
    if res.get("K") is None:
        raise InputError(f"--gain {path}: field K is missing or null")
    try:
        K = np.array(res["K"], dtype=float)
        P = None if res.get("P") is None else np.array(res["P"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"--gain {path}: field K/P is not numeric ({exc})") from exc
    if K.shape != (system.m, system.p):
        raise InputError(f"--gain {path}: field K has shape {K.shape}, expected {(system.m, system.p)}")
    if P is not None and P.shape != (system.n, system.n):
        raise InputError(f"--gain {path}: field P has shape {P.shape}, expected {(system.n, system.n)}")
    return K, P, res


def _write_json(path, payload, argv):
    if not path:
        return
    doc = dict(payload)
    doc["metadata"] = {"created": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "argv": list(argv)}
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    return obj


def _parse_x0(text: str, n: int, seed: int) -> np.ndarray:
    if text == "random":
        x0 = np.random.default_rng(seed).standard_normal(n)
        return x0 / np.linalg.norm(x0)
    if text == "zero":
        return np.zeros(n)
    try:
        x0 = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise InputError(f"--x0: expected 'random', 'zero' or {n} comma-separated numbers") from None
    if x0.size != n or not np.all(np.isfinite(x0)):
        raise InputError(f"--x0: expected {n} finite values, got {x0.size}")
    return x0


def _fmt(v, digits=6):
    return "n/a" if v is None else f"{v:.{digits}g}"


def _print_result(res: synthesis.SynthesisResult, out=None):
    out = out or sys.stdout
    print(f"method      : {res.method}", file=out)
    print(f"status      : {res.status.value}", file=out)
    if res.ok:
        print(f"alpha*      : {_fmt(res.alpha_star)}", file=out)
        print(f"eps1*       : {_fmt(res.eps1_star)}", file=out)
        print(f"gamma*      : {_fmt(res.gamma_star)}", file=out)
        print(f"mu          : {_fmt(res.mu)}", file=out)
        if res.Gamma_star is not None:
            print("Gamma*      :", np.array2string(res.Gamma_star, precision=4), file=out)
        if res.K is not None:
            print("K           :", np.array2string(res.K, precision=5, prefix="K           : "), file=out)
        if res.rank_condition_holds is not None:
            verdict = "holds" if res.rank_condition_holds else "fails"
            print(f"rank cond.  : {verdict} (gain recovery {res.gain_recovery}, "
                  f"residual {_fmt(res.gain_residual, 3)})", file=out)
    elif res.solution is not None:
        print(f"solver      : {res.solution.message}", file=out)


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args, argv) -> int:
    system = _load_system(args.system)
    K = np.zeros((system.m, system.p)) if not args.gain else _read_gain(args.gain, system)[0]
    req = _request(args, "lemma3_analysis")
    res = synthesis.analyze_lemma3(system.closed_loop(K), req)
    _print_result(res)
    _write_json(args.out, {"result": _clean(res.to_dict())}, argv)
    return EXIT_OK if res.ok else EXIT_FAILED


def cmd_synth(args, argv) -> int:
    system = _load_system(args.system)
    req = _request(args)
    try:
        res = synthesis.synthesize(system, req)
    except synthesis.QSingularError as exc:
        print(f"gain recovery failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    _print_result(res)
    payload = {"result": _clean(res.to_dict())}
    if res.ok and res.K is not None:
        payload["certificate"] = synthesis.closed_loop_certificate(system, res)
    _write_json(args.out, payload, argv)
    return EXIT_OK if res.ok else EXIT_FAILED


def cmd_simulate(args, argv) -> int:
    system = _load_system(args.system)
    K, P, _ = _read_gain(args.gain, system)
    x0 = _parse_x0(args.x0, system.n, args.seed)
    F = UncertaintySignal(args.uncertainty, q=system.q, seed=args.seed)
    if args.disturbance_file:
        try:
            w = DisturbanceSignal.from_file(args.disturbance_file, system.d)
        except (OSError, ValueError) as exc:
            raise InputError(f"--disturbance-file: {exc}") from exc
    else:
        w = DisturbanceSignal(args.disturbance, d=system.d, seed=args.seed, horizon=args.steps)
    code = EXIT_OK
    try:
        traj = simulator.simulate(system, K, None, F, w, x0, args.steps, P)
    except simulator.Diverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        traj, code = exc.trajectory, EXIT_FAILED
    if args.out:
        traj.to_csv(args.out)
    if args.plot:
        write_state_plot(traj, args.plot)
    print(f"steps       : {traj.horizon}")
    print(f"|x0|        : {_fmt(float(np.linalg.norm(traj.x[0])))}")
    print(f"|x(final)|  : {_fmt(float(np.linalg.norm(traj.x[-1])))}")
    if traj.V is not None and not np.any(traj.w):
        ok, idx = simulator.lyapunov_decrement_check(traj)
        print(f"V decreasing: {'yes' if ok else f'no (first violation at k={idx})'}")
    return code


def cmd_robustness(args, argv) -> int:
    system = _load_system(args.system)
    K, _, res = _read_gain(args.gain, system)
    gamma_star = res.get("gamma_star")
    if gamma_star is None:
        raise InputError(f"--gain {args.gain}: field gamma_star is missing or null")
    gamma_actual = system.phi.lipschitz if args.gamma_actual is None else args.gamma_actual
    report = robustness.robustness_report(gamma_actual, float(gamma_star), None, res.get("Gamma_star"))
    margin = report.normwise_margin
    pert = args.perturbation if args.perturbation is not None else 0.9 * max(margin, 0.0)
    mc = simulator.monte_carlo_robustness(system, K, None, pert, trials=args.trials, seed=args.seed, detail=True)
    print(f"gamma actual: {_fmt(gamma_actual)}")
    print(f"gamma*      : {_fmt(float(gamma_star))}")
    print(f"margin      : {_fmt(margin)}" + ("  (no certified margin)" if margin < 0 else ""))
    print(f"Monte Carlo : perturbation Lipschitz {_fmt(pert)}, stable fraction {mc.fraction:.3f} "
          f"over {args.trials} trials")
    payload = {"report": report.to_dict(),
               "monte_carlo": {"perturbation_lipschitz": pert, "trials": args.trials, "seed": args.seed,
                               "fraction_stable": mc.fraction}}
    _write_json(args.out, _clean(payload), argv)
    return EXIT_OK


def cmd_demo(args, argv) -> int:
    system = benchmark_system()
    req = _request(args)
    print(f"five-state plant, H = 0.15 I, nonlinearity Lipschitz constant {system.phi.lipschitz:g}")
    try:
        res = synthesis.synthesize(system, req)
    except synthesis.QSingularError as exc:
        print(f"gain recovery failed: {exc}")
        return EXIT_FAILED
    if args.gamma_fixed is not None:
        print(f"fixed Lipschitz constant {args.gamma_fixed:g}: {'feasible' if res.ok else 'infeasible'}")
        if not res.ok:
            return EXIT_FAILED
    _print_result(res)
    if not res.ok:
        return EXIT_FAILED
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if res.gamma_star is not None:
        margin = robustness.normwise_margin(system.phi.lipschitz, res.gamma_star)
        print(f"margin      : gamma* - gamma = {_fmt(margin)}" + ("  (no certified margin)" if margin < 0 else ""))
    if res.K is None:
        return EXIT_OK
    x0 = _parse_x0("random", system.n, args.seed)
    F = UncertaintySignal("random_switching", q=system.q, seed=args.seed)
    traj = simulator.simulate(system, res.K, None, F, None, x0, args.steps, res.P)
    ok, _ = simulator.lyapunov_decrement_check(traj)
    print(f"simulation  : |x({args.steps})| = {_fmt(float(np.linalg.norm(traj.x[-1])))}, "
          f"V decreasing: {'yes' if ok else 'no'}")
    traj.to_csv(out_dir / "trajectory.csv")
    write_state_plot(traj, out_dir / "trajectory.svg", "Closed-loop states")
    _write_json(out_dir / "result.json", {"result": _clean(res.to_dict())}, argv)
    print(f"wrote       : {out_dir / 'trajectory.csv'}, {out_dir / 'trajectory.svg'}, {out_dir / 'result.json'}")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "synth": cmd_synth, "simulate": cmd_simulate,
            "robustness": cmd_robustness, "demo": cmd_demo}


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run_demo(argv=()) -> int:
    return run(["demo", *argv])


def benchmark_path() -> Path:
    """Location of the bundled five-state system file."""
    return Path(str(resources.files("robust_sof") / "data" / "benchmark_5state.json"))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line front end: ``obslae solve|ilc|bench``.

Exit codes: 0 success, 1 parse or dimension error, 2 gain validation failure
(or a plant whose input never reaches its output), 3 no convergence or
divergence, 4 oracle verification mismatch.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import ilc, lalg, oracle, solver, textio
from .errors import (
    DimensionError,
    IllConditionedError,
    NoCertificateError,
    NonFiniteError,
    NumericalError,
    PropertyPViolatedError,
    SigmaOutOfRangeError,
    ZeroTransferError,
)
from .problems import RANK_CLASSES, random_problem
from .rng import Lcg

EXIT_OK, EXIT_PARSE, EXIT_GAIN, EXIT_NO_CONVERGENCE, EXIT_VERIFY = range(5)
VERIFY_RTOL = 1e-5

log = logging.getLogger("obslae")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fmt(x: float) -> str:
    return textio.format_number(float(x))


def _vec(x) -> str:
    return "[" + ", ".join("%.10g" % v for v in np.asarray(x)) + "]"


# --- gain parsing -----------------------------------------------------------

def parse_gain(text: str):
    """``sigma[:VALUE]``, ``deadbeat[:zero|shift]`` or ``custom:<path>``."""
    kind, _, arg = text.partition(":")
    if kind == "sigma":
        return solver.SigmaTranspose(float(arg) if arg else None)
    if kind == "deadbeat":
        try:
            return solver.Deadbeat(solver.NilpotentKind(arg or "zero"))
        except ValueError:
            raise CliError(EXIT_PARSE, f"unknown deadbeat kind {arg!r}; use zero or shift") from None
    if kind == "custom":
        if not arg:
            raise CliError(EXIT_PARSE, "custom gain needs a file path: custom:<path>")
        return solver.Custom(textio.load_matrix(arg))
    raise CliError(EXIT_PARSE, f"unknown gain {text!r}")


def _load_u0(text: str | None, n: int, default=None) -> np.ndarray | None:
    if text is None:
        return default
    if text == "zero":
        return np.zeros(n)
    u0 = textio.load_vector(text)
    if u0.shape[0] != n:
        raise DimensionError(f"u0 has {u0.shape[0]} entries, expected {n}")
    return u0


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# --- solve ------------------------------------------------------------------

def cmd_solve(args, out=sys.stdout) -> int:
    pf = textio.load_problem(args.problem)
    try:
        problem = solver.LaeProblem(pf.g, pf.y_d)
    except ValueError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc
    spec = parse_gain(args.gain or pf.gain or "sigma")
    try:
        gain = solver.make_gain(problem, spec)
    except (SigmaOutOfRangeError, NumericalError) as exc:
        raise CliError(EXIT_GAIN, f"gain rejected: {exc}") from exc

    solvability = solver.classify_solvability(problem)
    if not gain.property_p and solvability is solver.Solvability.UNSOLVABLE:
        raise CliError(EXIT_GAIN, "gain violates property P: F^T has columns outside span(G), "
                                  "so the limit need not be a least-squares solution")
    if isinstance(gain.certificate, solver.SpectralEstimate) and gain.certificate.diverging:
        raise CliError(EXIT_GAIN, f"gain diverges: {gain.certificate}")

    config = solver.SolverConfig(
        epsilon=args.epsilon if args.epsilon is not None else (pf.epsilon or 1e-5),
        residual_epsilon=args.residual_epsilon if args.residual_epsilon is not None else (pf.residual_epsilon or 1e-3),
        max_iters=args.max_iters if args.max_iters is not None else (pf.max_iters or 1_000_000),
        u0=_load_u0(args.u0, problem.q, pf.u0),
        record_trace=args.trace is not None,
    )
    try:
        outcome = solver.solve(problem, gain, config)
    except NonFiniteError as exc:
        raise CliError(EXIT_NO_CONVERGENCE, str(exc)) from exc

    print(f"problem: {problem.p}x{problem.q}, rank {problem.rank}", file=out)
    print(f"gain: {args.gain or pf.gain or 'sigma'}  certificate: {gain.certificate}  property_p: {gain.property_p}", file=out)
    print(f"iterations: {outcome.iterations}", file=out)
    print(f"converged: {'yes' if outcome.converged else 'no'}", file=out)
    if outcome.converged:
        print(f"converged_at: {outcome.converged_at}", file=out)
    print(f"final_step_norm: {_fmt(outcome.final_step_norm)}", file=out)
    print(f"residual: {_fmt(outcome.final_residual)}", file=out)
    print(f"residual_below_{_fmt(config.residual_epsilon)}: {'yes' if outcome.residual_probe_passed else 'no'}", file=out)
    print(f"solvability: {outcome.solvability.value}", file=out)
    print(f"least_squares: {'yes' if outcome.solvability is solver.Solvability.UNSOLVABLE else 'no'}", file=out)
    print(f"u_inf: {_vec(outcome.u_inf)}", file=out)

    if args.trace:
        _write_csv(args.trace, ["k", "step_norm", "residual_norm"],
                   ([k, _fmt(s), _fmt(r)] for k, s, r in outcome.trace.rows()))

    if args.solution_set:
        try:
            sset = solver.solution_set(problem, gain)
        except (PropertyPViolatedError, NoCertificateError) as exc:
            raise CliError(EXIT_GAIN, f"solution set unavailable: {exc}") from exc
        print(f"particular: {_vec(sset.particular)}", file=out)
        print(f"null_dimension: {len(sset.null_basis)}", file=out)
        for i, vec in enumerate(sset.null_basis):
            print(f"null_basis[{i}]: {_vec(vec)}", file=out)

    if not outcome.converged:
        raise CliError(EXIT_NO_CONVERGENCE, f"no convergence after {outcome.iterations} iterations")

    if args.verify:
        return _verify(problem, gain, config, outcome, spec, out)
    return EXIT_OK


def _verify(problem, gain, config, outcome, spec, out) -> int:
    try:
        ref = oracle.min_norm_least_squares(problem.g, problem.y_d)
    except IllConditionedError as exc:
        print(f"verify: oracle unavailable ({exc})", file=out)
        return EXIT_VERIFY
    g_ref = lalg.matmul(problem.g, ref.solution)
    g_u = lalg.matmul(problem.g, outcome.u_inf)
    fit_gap = lalg.norm2(g_u - g_ref) / max(1.0, lalg.norm2(g_ref))
    ok = fit_gap <= VERIFY_RTOL
    print(f"verify: oracle residual {_fmt(ref.residual)}, fitted-output gap {fit_gap:.3e}", file=out)
    starts_at_zero = config.u0 is None or lalg.max_abs(config.u0) == 0.0
    if isinstance(spec, solver.SigmaTranspose) and starts_at_zero:
        gap = lalg.norm2(outcome.u_inf - ref.solution) / max(1.0, lalg.norm2(ref.solution))
        print(f"verify: minimum-norm solution gap {gap:.3e}", file=out)
        ok = ok and gap <= VERIFY_RTOL
    print(f"verify: {'PASS' if ok else 'FAIL'}", file=out)
    return EXIT_OK if ok else EXIT_VERIFY


# --- ilc --------------------------------------------------------------------

def _ilc_gain(text: str, lifted: ilc.LiftedSystem, n: int) -> np.ndarray:
    kind, _, arg = text.partition(":")
    if kind == "f0":
        if not arg:
            raise CliError(EXIT_PARSE, "f0 gain needs a file path: f0:<path>")
        return ilc.ptype_gain(textio.load_matrix(arg), n)
    if kind == "full":
        if not arg:
            raise CliError(EXIT_PARSE, "full gain needs a file path: full:<path>")
        return textio.load_matrix(arg)
    if kind == "sigma":
        bound = 2.0 / lalg.trace_gram(lifted.g)
        sigma = float(arg) if arg else 1.0 / lalg.trace_gram(lifted.g)
        if not 0.0 < sigma < bound:
            raise CliError(EXIT_GAIN, f"sigma={sigma!r} must lie in (0, {bound!r})")
        return sigma * lifted.g.T
    raise CliError(EXIT_PARSE, f"unknown ILC gain {text!r}")


def cmd_ilc(args, out=sys.stdout) -> int:
    plant = textio.load_plant(args.plant)
    reference = textio.load_matrix(args.reference)
    try:
        lifted = ilc.lift(plant, reference)
    except ZeroTransferError as exc:
        raise CliError(EXIT_GAIN, str(exc)) from exc
    n = plant.horizon_n
    f = _ilc_gain(args.gain, lifted, n)
    if f.shape != (n * plant.n_i, n * plant.n_o):
        raise DimensionError(f"lifted gain must be {n * plant.n_i}x{n * plant.n_o}, got {f.shape[0]}x{f.shape[1]}")
    if args.u0 is None or args.u0 == "zero":
        u0 = np.zeros((n, plant.n_i))
    else:
        u0 = textio.load_matrix(args.u0)

    if lalg.max_abs(lifted.y_tilde_d) > 0.0:
        problem = solver.LaeProblem(lifted.g, lifted.y_tilde_d)
        cert = str(solver.validate_gain(problem, f).certificate)
        solvable = solver.classify_solvability(problem).value
    else:
        cert, solvable = "Unverified (zero lifted target)", solver.Solvability.SOLVABLE.value

    try:
        run = ilc.run_ilc(plant, reference, f, u0, args.iters)
    except NonFiniteError as exc:
        raise CliError(EXIT_NO_CONVERGENCE, str(exc)) from exc

    print(f"relative_degree: {lifted.r}", file=out)
    print(f"lifted_G: {lifted.g.shape[0]}x{lifted.g.shape[1]}  rank {lalg.rank(lifted.g)}", file=out)
    print(f"lifted_equation: {solvable}", file=out)
    print(f"gain_certificate: {cert}", file=out)
    print(f"trials: {run.iterations + 1}", file=out)
    print(f"initial_tracking_error: {_fmt(run.errors[0])}", file=out)
    print(f"final_tracking_error: {_fmt(run.errors[-1])}", file=out)
    if args.trace:
        _write_csv(args.trace, ["k", "tracking_error"], ([k, _fmt(e)] for k, e in enumerate(run.errors)))
    return EXIT_OK


# --- bench ------------------------------------------------------------------

def _parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for item in text.split(","):
        p, sep, q = item.strip().lower().partition("x")
        try:
            if not sep:
                raise ValueError
            sizes.append((int(p), int(q)))
        except ValueError:
            raise CliError(EXIT_PARSE, f"bad size {item!r}; use PxQ, e.g. 20x30") from None
        if sizes[-1][0] < 1 or sizes[-1][1] < 1:
            raise CliError(EXIT_PARSE, f"sizes must be positive: {item!r}")
    return sizes


BENCH_HEADER = ["case", "p", "q", "rank", "solvability", "gain", "iterations",
                "converged_at", "residual", "u0_gap", "check"]


def bench_rows(sizes, rank_class: str, seed: int, repeats: int, epsilon: float,
               max_iters: int, timing: bool = False):
    rng = Lcg(seed)
    case = 0
    for p, q in sizes:
        for _ in range(repeats):
            try:
                g, y, m = random_problem(rng, p, q, rank_class)
            except ValueError as exc:
                raise CliError(EXIT_PARSE, str(exc)) from exc
            problem = solver.LaeProblem(g, y)
            solv = solver.classify_solvability(problem).value
            limit_tol = max(1e-6, 10 * epsilon)

            runs = []
            sigma_gain = solver.default_gain(problem)
            limits = []
            for u0 in (rng.uniform(-1.0, 1.0, q), rng.uniform(-1.0, 1.0, q)):
                t0 = time.perf_counter()
                res = solver.solve(problem, sigma_gain, solver.SolverConfig(epsilon=epsilon, max_iters=max_iters, u0=u0))
                limits.append(res.u_inf)
                elapsed = time.perf_counter() - t0
            gap = lalg.max_abs(limits[0] - limits[1])
            if rank_class == "full-col":
                check = "ok" if res.converged and gap <= limit_tol else "FAIL"
            else:
                check = "ok" if res.converged else "FAIL"
            runs.append(("sigma", res, _fmt(gap), check, elapsed))

            u0 = rng.uniform(-1.0, 1.0, q)
            for kind in solver.NilpotentKind:
                t0 = time.perf_counter()
                gain = solver.deadbeat_gain(problem, kind)
                res = solver.solve(problem, gain, solver.SolverConfig(epsilon=epsilon, max_iters=max_iters, u0=u0))
                elapsed = time.perf_counter() - t0
                check = "ok" if res.converged and res.converged_at <= m else "FAIL"
                runs.append((f"deadbeat:{kind.value}", res, "", check, elapsed))

            for name, res, gap_text, check, elapsed in runs:
                row = [case, p, q, m, solv, name, res.iterations,
                       res.converged_at if res.converged else "", _fmt(res.final_residual), gap_text, check]
                if timing:
                    row.append("%.6f" % elapsed)
                yield row
            case += 1


def cmd_bench(args, out=sys.stdout) -> int:
    sizes = _parse_sizes(args.sizes)
    if args.rank_class not in RANK_CLASSES:
        raise CliError(EXIT_PARSE, f"unknown rank class {args.rank_class!r}")
    if args.repeats < 1 or args.epsilon <= 0 or args.max_iters < 1:
        raise CliError(EXIT_PARSE, "repeats, epsilon and max-iters must be positive")
    header = BENCH_HEADER + (["time_s"] if args.timing else [])
    rows = list(bench_rows(sizes, args.rank_class, args.seed, args.repeats, args.epsilon, args.max_iters, args.timing))
    failures = sum(1 for r in rows if r[10] == "FAIL")
    if args.out:
        _write_csv(args.out, header, rows)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        out.write(buf.getvalue())
    if failures:
        print(f"bench: {failures} row(s) failed their check", file=sys.stderr)
    return EXIT_OK


# --- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obslae", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve Y_d = G U by the observer iteration")
    s.add_argument("--problem", required=True, help="problem file (blocks G and Y)")
    s.add_argument("--gain", help="sigma[:VALUE] | deadbeat[:zero|shift] | custom:<path> (default sigma)")
    s.add_argument("--epsilon", type=float, help="stop when ||U_k - U_{k-1}|| < epsilon (default 1e-5)")
    s.add_argument("--residual-epsilon", type=float, help="solvability probe on ||Y_d - G U|| (default 1e-3)")
    s.add_argument("--u0", help="initial guess file, or 'zero' (default zero)")
    s.add_argument("--max-iters", type=int, help="iteration cap (default 1000000)")
    s.add_argument("--trace", help="write k,step_norm,residual_norm CSV here")
    s.add_argument("--verify", action="store_true", help="cross-check against the ridge-ladder oracle")
    s.add_argument("--solution-set", action="store_true", help="print the particular solution and null-space basis")
    s.set_defaults(func=cmd_solve)

    i = sub.add_parser("ilc", help="run iterative learning control on a lifted plant")
    i.add_argument("--plant", required=True)
    i.add_argument("--reference", required=True, help="N x n_o matrix of y_d(r..r+N-1)")
    i.add_argument("--gain", default="sigma", help="f0:<path> | full:<path> | sigma[:VALUE]")
    i.add_argument("--u0", help="N x n_i initial input file, or 'zero'")
    i.add_argument("--iters", type=int, default=50)
    i.add_argument("--trace", help="write k,tracking_error CSV here")
    i.set_defaults(func=cmd_ilc)

    b = sub.add_parser("bench", help="seeded random benchmark of sigma and deadbeat gains")
    b.add_argument("--sizes", required=True, help="comma list of PxQ, e.g. 20x30,10x10")
    b.add_argument("--rank-class", required=True, choices=RANK_CLASSES)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeats", type=int, default=1, help="problems per size")
    b.add_argument("--epsilon", type=float, default=1e-10)
    b.add_argument("--max-iters", type=int, default=1_000_000)
    b.add_argument("--timing", action="store_true", help="add a wall-clock column (breaks byte-identical output)")
    b.add_argument("--out", help="CSV path (default stdout)")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = out or sys.stdout
    try:
        return args.func(args, out=out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (textio.ParseError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``shrinkdimer {run,converge,verify}``.

Exit codes: 0 success, 1 input error or divergence, 2 check failure.
"""

import argparse
import logging
import sys

from . import __version__
from .dynamics import SaddleConfig, integrate
from .exceptions import SaddleError
from .extrapolation import richardson_combine
from .harness import (
    DEFAULT_PROBE_TAUS,
    DEFAULT_REF_TAU,
    DEFAULT_TAUS,
    RATE_WINDOWS,
    convergence_ladder,
    scaling_probe,
)
from .problems import InitialCondition, default_initial_condition, load_problem_file, registry_get
from .serialization import write_trajectory_jsonl

log = logging.getLogger("shrinkdimer")

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2
PROBE_SLOPE_MIN = 1.8
FRAME_WARN_TOL = 1e-8
LEMMAS = {"cross": "cross", "norm": "norm_defect", "gs": "gs_correction"}
_VECTOR_FLAGS = ("--x0", "--v0", "--taus")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_vector(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}") from None


def parse_frame(text):
    return [parse_vector(part) for part in text.split(";") if part.strip()]


def _add_problem_args(p):
    p.add_argument("--problem", required=True, help="registered problem name (or a label with --problem-file)")
    p.add_argument("--problem-file", help="JSON linear problem {name, matrix, offset}")
    p.add_argument("--k", type=int, default=1, help="saddle index")
    p.add_argument("--mode", choices=["gradient", "non-gradient"])
    p.add_argument("--x0", type=parse_vector)
    p.add_argument("--v0", type=parse_frame, help="frame: vectors separated by ';'")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--l0", type=float, help="fixed initial dimer length (default sqrt(tau))")


def build_parser():
    parser = _Parser(prog="shrinkdimer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="integrate once and write a JSON-lines trajectory")
    _add_problem_args(run)
    run.add_argument("--tau", type=float, default=DEFAULT_TAUS[0])
    run.add_argument("--richardson", action="store_true", help="write the extrapolated trajectory")
    run.add_argument("--output", "-o", help="trajectory path ('-' for stdout)")

    conv = sub.add_parser("converge", help="error/rate table over a dyadic step ladder")
    _add_problem_args(conv)
    conv.add_argument("--taus", type=parse_vector, default=list(DEFAULT_TAUS))
    conv.add_argument("--ref-tau", type=float, default=DEFAULT_REF_TAU)
    conv.add_argument("--scheme", choices=["euler", "richardson"], default="euler")
    conv.add_argument("--format", choices=["csv", "json", "md"], default="md")
    conv.add_argument("--output", "-o")
    conv.add_argument("--cache-dir", help="reference cache (default $SADDLE_CACHE_DIR)")
    conv.add_argument("--check", action="store_true", help="exit 2 unless every rate is in the acceptance window")

    ver = sub.add_parser("verify", help="scaling probe for the pre-orthonormalization defects")
    _add_problem_args(ver)
    ver.add_argument("--lemma", choices=sorted(LEMMAS), required=True)
    ver.add_argument("--taus", type=parse_vector, default=list(DEFAULT_PROBE_TAUS))
    return parser


def _join_negative_values(argv):
    """Let ``--x0 -1,1,0`` through: argparse would read ``-1,1,0`` as a flag."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _VECTOR_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def _problem_and_ic(args):
    problem = load_problem_file(args.problem_file) if args.problem_file else registry_get(args.problem)
    if args.x0 is None and args.v0 is None:
        ic = default_initial_condition(problem.name, args.k)
    elif args.x0 is None or args.v0 is None:
        raise UsageError("--x0 and --v0 must be given together")
    else:
        ic = InitialCondition(x0=args.x0, frame0=args.v0)
        if ic.frame_correction > FRAME_WARN_TOL:
            log.warning("initial frame re-orthonormalized (correction %.3e)", ic.frame_correction)
    if ic.k != args.k:
        raise UsageError(f"--v0 has {ic.k} vectors but --k is {args.k}")
    return problem, ic


def _config(args, tau):
    return SaddleConfig(
        k=args.k, tau=tau, beta=args.beta, gamma=args.gamma, T=args.T, l0=args.l0, mode=args.mode
    )


def _emit(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)


def cmd_run(args):
    problem, ic = _problem_and_ic(args)
    config = _config(args, args.tau)
    traj = integrate(problem, ic, config)
    if args.richardson:
        fine = integrate(problem, ic, config.with_tau(config.tau / 2.0))
        out_traj = richardson_combine(traj, fine)
    else:
        out_traj = traj
    output = args.output or f"{problem.name}-k{args.k}.jsonl"
    write_trajectory_jsonl(out_traj, output)
    stream = sys.stderr if output == "-" else sys.stdout
    final_x = ",".join(repr(float(c)) for c in out_traj.x[-1])
    print(f"final residual {float(traj.residual[-1])!r}", file=stream)
    print(f"final x {final_x}", file=stream)
    if output != "-":
        print(f"wrote {output}", file=stream)
    return EXIT_OK


def cmd_converge(args):
    problem, ic = _problem_and_ic(args)
    # the ladder validates its own steps; the base only carries shared settings
    base = _config(args, args.ref_tau)
    report = convergence_ladder(
        problem, ic, base, taus=args.taus, ref_tau=args.ref_tau, scheme=args.scheme, cache_dir=args.cache_dir
    )
    _emit(report.render(args.format), args.output)
    if args.check:
        bad = report.check()
        if bad:
            lo, hi = RATE_WINDOWS[args.scheme]
            for row in bad:
                print(
                    f"check failed at 1/tau={row.inv_tau}: cr_x={row.cr_x}, cr_v={row.cr_v} "
                    f"outside [{lo}, {hi}]",
                    file=sys.stderr,
                )
            return EXIT_CHECK
    return EXIT_OK


def cmd_verify(args):
    problem, ic = _problem_and_ic(args)
    base = _config(args, args.taus[0])
    result = scaling_probe(problem, ic, base, taus=args.taus, quantity=LEMMAS[args.lemma])
    for tau, m in zip(result.taus, result.maxima):
        print(f"tau={tau!r} max={m!r}")
    ok = result.slope >= PROBE_SLOPE_MIN
    print(f"slope {result.slope:.4f} ({'ok' if ok else 'below'} {PROBE_SLOPE_MIN})")
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {"run": cmd_run, "converge": cmd_converge, "verify": cmd_verify}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"shrinkdimer: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SaddleError as exc:
        print(f"shrinkdimer: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: ``fishtank <subcommand> [options]``.

Every subcommand writes a (lambda, statistic, value) CSV to stdout or to
``--out``.  Identical invocations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import estimation, fishmonger, infotheory, oracle, sketches
from .harness import audit, hbb, merge, study
from .sketches import LogLogSketch, OffsetMode, PcsaSketch, SketchParams

DEFAULT_TRIALS = {"simulate": 1000, "fishmonger": 100, "hbb": 2000}


def _global_flags(parser, suppress: bool):
    # the flags are accepted both before and after the subcommand name
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=d(0), help="master seed (u64)")
    parser.add_argument("--trials", type=int, default=d(None), help="independent trials per point")
    parser.add_argument("--out", default=d(None), help="CSV output path (default: stdout)")
    parser.add_argument("--poissonize", action="store_true", default=d(False),
                        help="insert each element Poisson(1) times")


def parse_curve(spec: str) -> np.ndarray:
    """``lo:hi:steps`` -> geometric grid of `steps` cardinalities from lo to hi."""
    try:
        lo, hi, steps = spec.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {spec!r}") from None
    if not (0 < lo < hi) or steps < 2:
        raise argparse.ArgumentTypeError("need 0 < lo < hi and steps >= 2")
    return np.geomspace(lo, hi, steps)


def parse_lambdas(spec: str) -> list[int]:
    """Either a comma list ``1000,2000`` or a log grid ``2^16:2^24:4`` (exponents, points per octave)."""
    if ":" in spec:
        try:
            lo, hi, per = spec.split(":")
            exp = [float(x.split("^", 1)[1]) if "^" in x else math.log2(float(x)) for x in (lo, hi)]
            return study.log_grid(exp[0], exp[1], int(per))
        except (ValueError, IndexError):
            raise argparse.ArgumentTypeError(f"bad lambda grid {spec!r}") from None
    try:
        return [int(float(x)) for x in spec.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda list {spec!r}") from None


def parse_until(spec: str) -> tuple[int, int]:
    """``L=12,HW=31`` -> (12, 31)."""
    fields = {}
    for part in spec.split(","):
        key, _, val = part.partition("=")
        fields[key.strip().upper()] = int(val)
    if set(fields) != {"L", "HW"}:
        raise argparse.ArgumentTypeError(f"expected L=<int>,HW=<int>, got {spec!r}")
    return fields["L"], fields["HW"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fishtank", description=__doc__.splitlines()[0])
    _global_flags(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = sub.add_parser("info", parents=[common], help="Fish numbers, curves and lemma checks")
    p.add_argument("--q", type=float, default=math.e)
    p.add_argument("--sketch", choices=("pcsa", "ll"), default="pcsa")
    p.add_argument("--curve", type=parse_curve, help="lo:hi:steps grid of cardinalities")
    p.add_argument("--lemmas", action="store_true", help="also run the numeric lemma checks")

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo standard-error study")
    p.add_argument("--sketch", choices=study.SKETCH_KINDS, default="ll")
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--W", type=int)
    p.add_argument("--offsets", choices=("none", "uniform", "random"), default="none")
    p.add_argument("--lambdas", type=parse_lambdas, default=[1000],
                   help="comma list, or lo:hi:per_octave with lo/hi as 2^k or plain numbers")
    p.add_argument("--estimator", default=None, help="mle, harmonic, geometric or martingale")
    p.add_argument("--alpha", type=float, help="harmonic/geometric constant (default: calibrate)")
    p.add_argument("--mode", choices=("sample", "stream"), default=None)
    p.add_argument("--window", type=int, help="also report windowed-median oscillation")

    p = sub.add_parser("fishmonger", parents=[common], help="Fishmonger space and error audit")
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--lambda-max", type=lambda s: int(float(s)), default=10**6)
    p.add_argument("--mode", choices=audit.MODES, default="events")
    p.add_argument("--U-bits", dest="U_bits", type=int, default=64)
    p.add_argument("--delta", type=float, default=0.05)

    p = sub.add_parser("hbb", parents=[common], help="HyperBitBit insertion-order demo")
    p.add_argument("--lambda", dest="lam", type=lambda s: int(float(s)), default=400_000)
    p.add_argument("--until", type=parse_until, help="stop at L=<int>,HW=<int> and report termination")
    p.add_argument("--level-offset", type=int, default=hbb.LEVEL_OFFSET)

    p = sub.add_parser("merge", parents=[common], help="merge sketch files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--output", "-o", help="where to write the merged sketch")

    p = sub.add_parser("sketch", parents=[common], help="build a sketch from newline-delimited elements")
    p.add_argument("input", nargs="?", default="-", help="element file ('-' for stdin)")
    p.add_argument("--kind", choices=("pcsa", "ll", "fishmonger"), default="pcsa")
    p.add_argument("--q", type=float, default=math.e)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--W", type=int)
    p.add_argument("--offsets", choices=("none", "uniform", "random"), default="uniform")
    p.add_argument("--output", "-o", help="where to write the serialized sketch")
    return ap


# ---------------------------------------------------------------- subcommands

def cmd_info(args):
    fr = infotheory.fish_pcsa(args.q) if args.sketch == "pcsa" else infotheory.fish_ll(args.q)
    rows = [
        ("", "q", args.q),
        ("", "H_avg", fr.H_avg),
        ("", "I_avg", fr.I_avg),
        ("", "fish", fr.fish),
        ("", "h0", infotheory.h0()),
        ("", "i0", infotheory.i0()),
        ("", "h0_over_i0", infotheory.h0() / infotheory.i0()),
    ]
    if args.curve is not None:
        for lam in args.curve:
            cp = infotheory.curves(args.sketch, args.q, float(lam))
            rows.append((float(lam), "entropy_bits", cp.entropy_bits))
            rows.append((float(lam), "norm_info", cp.norm_info))
    if args.lemmas:
        for c in infotheory.verify_lemmas().checks:
            rows.append(("", f"lemma:{c.name}", int(c.passed)))
    return rows


def cmd_simulate(args):
    est = args.estimator or study.ESTIMATORS[args.sketch][0]
    mode = args.mode or ("stream" if args.sketch.startswith("martingale") else "sample")
    cfg = study.TrialConfig(
        sketch=args.sketch, q=args.q, m=args.m, W=args.W, offsets=args.offsets,
        lambdas=args.lambdas, trials=args.trials or DEFAULT_TRIALS["simulate"], seed=args.seed,
        estimator=est, poissonize=args.poissonize, mode=mode, alpha=args.alpha,
    )
    results = study.run_error_study(cfg)
    rows = list(study.results_rows(results))
    if args.window:
        med = study.windowed_medians(results, args.window)
        for r, v in zip(results, med):
            rows.append((r.lam, f"windowed_median_{args.window}", float(v)))
        rows.append(("", "peak_to_trough", study.peak_to_trough(med)))
    return rows


def cmd_fishmonger(args):
    rep = audit.run_fishmonger_audit(args.m, args.lambda_max, args.trials or DEFAULT_TRIALS["fishmonger"],
                                     args.seed, args.mode, args.U_bits, args.delta)
    return rep.rows()


def cmd_hbb(args):
    rep = hbb.run_hbb_demo(args.lam, args.trials or DEFAULT_TRIALS["hbb"], args.seed, args.until,
                           args.level_offset)
    return rep.rows()


def _describe(sk):
    if isinstance(sk, fishmonger.FishmongerSketch):
        return [("", "kind", "fishmonger"), ("", "m", sk.params.m), ("", "estimate", sk.estimate()),
                ("", "size_bits", sk.size_bits()), ("", "revert_count", sk.revert_count)]
    est = estimation.estimate(sk)
    kind = "pcsa" if isinstance(sk, PcsaSketch) else "ll"
    return [("", "kind", kind), ("", "m", sk.params.m), ("", "estimate", est.lambda_hat),
            ("", "saturated", int(est.saturated))]


def cmd_merge(args):
    return _describe(merge.merge_files(args.paths, args.output))


def read_elements(path: str):
    fh = sys.stdin if path == "-" else open(path)
    try:
        ids = [oracle.element_id(line) for line in fh if line.strip()]
    finally:
        if fh is not sys.stdin:
            fh.close()
    return np.array(ids, dtype=np.uint64)


def cmd_sketch(args):
    elements = read_elements(args.input)
    if args.poissonize:
        elements = np.fromiter(oracle.poissonize(args.seed, elements), dtype=np.uint64)
    if args.kind == "fishmonger":
        sk = fishmonger.FishmongerSketch(fishmonger.FishmongerParams(args.m), args.seed)
    else:
        params = SketchParams(q=args.q, m=args.m, W=args.W, offsets=OffsetMode.parse(args.offsets))
        sk = (PcsaSketch if args.kind == "pcsa" else LogLogSketch)(params, args.seed)
    sk.update(elements)
    if args.output:
        merge.save_any(sk, args.output)
    return [("", "elements_read", int(elements.size))] + _describe(sk)


COMMANDS = {
    "info": cmd_info,
    "simulate": cmd_simulate,
    "fishmonger": cmd_fishmonger,
    "hbb": cmd_hbb,
    "merge": cmd_merge,
    "sketch": cmd_sketch,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        rows = COMMANDS[args.command](args)
    except (ValueError, OSError, sketches.IncompatibleSketches) as exc:
        print(f"fishtank {args.command}: error: {exc}", file=sys.stderr)
        return 2
    study.write_rows(rows, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

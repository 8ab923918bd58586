"""Command-line front end.

Each verb runs one experiment and writes a JSON or CSV report to --out
(atomically) or to standard output.  Exit codes: 0 success, 1 parameter
error, 2 resource error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import jsonschema

from .bounds import (PreconditionError, closed_form_bound, overflow_probability,
                     paper_bound_hardy)
from .carleson import VARIANTS, one_box_constant
from .disk_geometry import METRICS
from .montecarlo import (TrialPlan, ZeroCoveragePlan, classify_empirical,
                         dsep_event_frequency, overflow_frequency, separation_trend,
                         tail_csv, tail_table, zero_coverage, _trend)
from .profiles import ProfileError, RadiiProfile, classify, counterexample_profile, load_profile
from .sampler import ResourceError, sample_steinhaus
from .schemas import validate_file

EXIT_OK, EXIT_PARAM, EXIT_RESOURCE = 0, 1, 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _uint64(text: str) -> int:
    v = int(text, 0)
    if not (0 <= v < 1 << 64):
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--profile", type=Path)
    common.add_argument("--alpha", type=float)
    common.add_argument("--max-n", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=_uint64)
    common.add_argument("--out", type=Path)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=int, default=1)

    p = _Parser(prog="randinterp", description="Random interpolating sequences toolkit")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    sub.add_parser("classify", parents=[common], help="symbolic 0-1 verdicts")

    s = sub.add_parser("sample", parents=[common], help="sample configurations")
    s.add_argument("--trial-index", type=int, default=0)

    s = sub.add_parser("carleson", parents=[common], help="one-box constant of a sample")
    s.add_argument("--trial-index", type=int, default=0)
    s.add_argument("--depth", type=int)
    s.add_argument("--variant", choices=VARIANTS, default="exact")

    s = sub.add_parser("tail", parents=[common], help="empirical window tails vs bounds")
    s.add_argument("--ns", type=_int_list)
    s.add_argument("--A", type=float)

    s = sub.add_parser("separation", parents=[common], help="separation trend over depths")
    s.add_argument("--metric", choices=METRICS)
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--depths", type=_int_list, default=[6, 10, 14])

    s = sub.add_parser("dsep-event", parents=[common], help="close pair inside one annulus")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--gamma", type=float, required=True)

    s = sub.add_parser("overflow", parents=[common], help="counterexample window overflow")
    s.add_argument("--gamma", type=float)
    s.add_argument("--ns", type=_int_list, required=True)
    s.add_argument("--N", type=int, default=0)
    s.add_argument("--k", type=int)

    s = sub.add_parser("zeros", parents=[common], help="random interval coverage")
    s.add_argument("--kappa", type=float, default=2.0)
    s.add_argument("--L", type=int, default=10_000)
    s.add_argument("--grid", type=int, default=1 << 16)

    s = sub.add_parser("report", parents=[common], help="empirical vs symbolic, or validate")
    s.add_argument("--validate", type=Path, nargs="+")
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--C", type=float, default=8.0)
    s.add_argument("--depths", type=_int_list, default=[6, 10, 14])
    return p


# -- helpers ---------------------------------------------------------------

def _need(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise UsageError(f"--{name} is required for '{args.verb}'")


def _profile(args) -> RadiiProfile:
    _need(args, "profile")
    prof = load_profile(args.profile)
    return prof


def _max_n(args, prof: RadiiProfile) -> int:
    m = prof.max_n if args.max_n is None else args.max_n
    if m < 0:
        raise UsageError("--max-n must be >= 0")
    return m


def _trials(args, default: int) -> int:
    t = default if args.trials is None else args.trials
    if t < 1:
        raise UsageError("--trials must be >= 1")
    return t


def _alpha(args, default: float | None = None) -> float:
    if args.alpha is None:
        if default is None:
            raise UsageError(f"--alpha is required for '{args.verb}'")
        return default
    return args.alpha


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO(newline="")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str) -> None:
    """Write via a temp file in the target directory and rename over it."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- verbs -----------------------------------------------------------------

def cmd_classify(args) -> str:
    prof = _profile(args)
    alpha = _alpha(args)
    rep = classify(prof, alpha, _max_n(args, prof))
    doc = {"schema": "v1", "type": "classification", "profile": prof.to_dict(),
           "alpha": rep.alpha, "interpolating": rep.interpolating,
           "separated": rep.separated, "zero_set": rep.zero_set, "carleson": rep.carleson,
           "basis": rep.basis["interpolating"], "bases": dict(rep.basis),
           "criteria_used": [c.to_dict() for c in rep.criteria_used]}
    if args.format == "csv":
        return _csv([["property", "verdict", "theorem"]] +
                    [[k, getattr(rep, k), rep.basis[k]]
                     for k in ("interpolating", "separated", "zero_set", "carleson")])
    return _dump(doc)


def cmd_sample(args) -> str:
    prof = _profile(args)
    _need(args, "seed")
    max_n, trials = _max_n(args, prof), _trials(args, 1)
    confs = [sample_steinhaus(prof, max_n, args.seed, args.trial_index + i)
             for i in range(trials)]
    if args.format == "csv":
        if trials == 1:
            return confs[0].to_csv()
        lines = ["trial,index,annulus,radius,angle"]
        for c in confs:
            lines += [f"{c.trial_index},{row}" for row in c.to_csv().splitlines()[1:]]
        return "\n".join(lines) + "\n"
    if trials == 1:
        return _dump(confs[0].to_dict())
    return _dump({"schema": "v1", "type": "configurations",
                  "configurations": [c.to_dict() for c in confs]})


def cmd_carleson(args) -> str:
    prof = _profile(args)
    _need(args, "seed")
    alpha = _alpha(args)
    conf = sample_steinhaus(prof, _max_n(args, prof), args.seed, args.trial_index)
    rep = one_box_constant(conf, alpha, args.depth, args.variant)
    if args.format == "csv":
        return rep.generations_csv()
    doc = rep.to_dict()
    doc.update(profile=prof.to_dict(), seed=args.seed, trial_index=args.trial_index)
    return _dump(doc)


def _default_A(alpha: float) -> float:
    if alpha == 0:
        return 8.0          # 4 / eps at eps = 1/2
    if alpha == 1:
        return 4.0
    return 4.0 / alpha


def cmd_tail(args) -> str:
    prof = _profile(args)
    _need(args, "seed")
    alpha = _alpha(args)
    max_n = _max_n(args, prof)
    ns = args.ns or list(range(1, max_n + 1))
    if any(n < 0 or n > max_n for n in ns):
        raise UsageError("--ns entries must lie in [0, max_n]")
    A = args.A if args.A is not None else _default_A(alpha)

    def closed(n):
        try:
            if alpha == 0:
                return paper_bound_hardy(0.5, n).paper_closed_form if A == 8.0 else None
            if alpha == 1:
                return closed_form_bound("dirichlet", n, prof, max_n=max_n).paper_closed_form
            return closed_form_bound("dalpha", n, prof, alpha, max_n).paper_closed_form
        except PreconditionError:
            return None

    plan = TrialPlan(prof, alpha, max_n, _trials(args, 10_000), args.seed, "tail", args.workers)
    rows = tail_table(plan, ns, A, closed)
    if args.format == "csv":
        return tail_csv(rows)
    return _dump({"schema": "v1", "type": "tail", "profile": prof.to_dict(), "alpha": alpha,
                  "trials": plan.trials, "seed": args.seed, "rows": [r.to_dict() for r in rows]})


def cmd_separation(args) -> str:
    prof = _profile(args)
    _need(args, "seed")
    metric = args.metric or ("dirichlet" if _alpha(args, 0.0) == 1 else "pseudohyperbolic")
    trials = _trials(args, 200)
    stats = separation_trend(prof, metric, args.delta, args.depths, trials, args.seed, args.workers)
    if args.format == "csv":
        return _csv([["depth", "estimate", "wilson_lo", "wilson_hi", "trials"]] +
                    [[d, repr(s.estimate), repr(s.wilson_95[0]), repr(s.wilson_95[1]), s.trials]
                     for d, s in zip(args.depths, stats)])
    return _dump({"schema": "v1", "type": "separation", "profile": prof.to_dict(),
                  "metric": metric, "delta": args.delta, "depths": args.depths,
                  "seed": args.seed, "per_depth": [s.to_dict() for s in stats],
                  "trend": _trend(stats)})


def cmd_dsep(args) -> str:
    prof = _profile(args)
    _need(args, "seed")
    stats, closed = dsep_event_frequency(prof, args.k, args.gamma, _trials(args, 10_000),
                                         args.seed, args.workers)
    if args.format == "csv":
        return _csv([["k", "gamma", "estimate", "closed_form", "trials"],
                     [args.k, repr(args.gamma), repr(stats.estimate), repr(closed), stats.trials]])
    return _dump({"schema": "v1", "type": "dsep_event", "profile": prof.to_dict(),
                  "k": args.k, "gamma": args.gamma, "alpha": _alpha(args, 1.0),
                  "seed": args.seed, "stats": stats.to_dict(), "closed_form": closed})


def cmd_overflow(args) -> str:
    _need(args, "seed")
    if args.gamma is not None:
        prof = counterexample_profile(args.gamma, max(args.ns) + args.N)
        source = f"gamma={args.gamma!r}"
    else:
        prof = _profile(args)
        source = prof.descriptor
    trials = _trials(args, 10_000)
    rows = []
    for n in args.ns:
        if n < 1:
            raise UsageError("--ns entries must be >= 1")
        st = overflow_frequency(prof, n, args.N, trials, args.seed, args.k, args.workers)
        rows.append((n, st, overflow_probability(prof, n, args.N)))
    if args.format == "csv":
        return _csv([["n", "estimate", "exact", "samples"]] +
                    [[n, repr(st.estimate), repr(ex), st.trials] for n, st, ex in rows])
    return _dump({"schema": "v1", "type": "overflow", "gamma_or_profile": source,
                  "N": args.N, "k": args.k, "seed": args.seed,
                  "rows": [{"n": n, "stats": st.to_dict(), "exact": ex} for n, st, ex in rows]})


def cmd_zeros(args) -> str:
    prof = _profile(args)
    _need(args, "seed")
    plan = ZeroCoveragePlan(_alpha(args), args.kappa, args.L, args.grid)
    res = zero_coverage(plan, prof, _trials(args, 20), args.seed, args.workers)
    if args.format == "csv":
        return res.curve_csv()
    doc = res.to_dict()
    doc.update(profile=prof.to_dict(), seed=args.seed)
    return _dump(doc)


def cmd_report(args) -> str:
    if args.validate:
        for path in args.validate:
            validate_file(path)
        return _dump({"valid": [str(p) for p in args.validate]})
    prof = _profile(args)
    _need(args, "seed")
    rep = classify_empirical(prof, _alpha(args), args.depths, args.delta, args.C,
                             _trials(args, 200), args.seed, args.workers)
    if args.format == "csv":
        return rep.curve_csv()
    doc = rep.to_dict()
    doc["seed"] = args.seed
    return _dump(doc)


VERBS = {"classify": cmd_classify, "sample": cmd_sample, "carleson": cmd_carleson,
         "tail": cmd_tail, "separation": cmd_separation, "dsep-event": cmd_dsep,
         "overflow": cmd_overflow, "zeros": cmd_zeros, "report": cmd_report}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        text = VERBS[args.verb](args)
    except (ResourceError, MemoryError) as exc:
        print(f"resource error: {exc}", file=stderr)
        return EXIT_RESOURCE
    except (UsageError, ProfileError, PreconditionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_PARAM
    except jsonschema.ValidationError as exc:
        print(f"error: invalid report: {exc.message}", file=stderr)
        return EXIT_PARAM
    if args.out is not None:
        try:
            write_atomic(args.out, text)
        except OSError as exc:
            print(f"error: {exc}", file=stderr)
            return EXIT_PARAM
    else:
        stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line interface.

Subcommands map onto the verification experiments; every run writes JSONL
sample records, a JSON report, and a CSV summary next to the given output
stem.  A flat key=value config file supplies defaults; explicit flags win.
Exit codes: 0 all gates passed, 1 at least one gate failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import verify

USAGE_ERROR = 2


def load_config(path):
    out = {}
    try:
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{ln}: expected key = value")
                key, val = (s.strip() for s in line.split("=", 1))
                out[key.replace("-", "_")] = val
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    return out


def build_parser():
    top = argparse.ArgumentParser(prog="forge", description=__doc__)
    top.add_argument("--config", help="flat key=value defaults file")
    sub = top.add_subparsers(dest="command", required=True)

    ver = sub.add_parser("verify", help="closed-form identity suites")
    ver.add_argument("what", choices=["exact", "series"])
    ver.add_argument("--out", help="output stem")

    peel = sub.add_parser("peel", help="peeling chain vs the limit law")
    peel.add_argument("--L", type=int, default=1024)
    peel.add_argument("--p0", type=int, default=1)
    peel.add_argument("--runs", type=int, default=20000)
    peel.add_argument("--seed", type=int, default=0)
    peel.add_argument("--step-cap", type=int, default=None)
    peel.add_argument("--out", required=True)

    snk = sub.add_parser("snake", help="forest laws: hitting, exit Laplace, "
                                       "total exit measure")
    snk.add_argument("--xi", type=float, default=1.0)
    snk.add_argument("--n", type=int, default=2048)
    snk.add_argument("--s0", type=float, default=1e-3)
    snk.add_argument("--delta", type=float, default=1e-4)
    snk.add_argument("--runs", type=int, default=2000)
    snk.add_argument("--seed", type=int, default=0)
    snk.add_argument("--out", required=True)

    dsk = sub.add_parser("disk", help="metric identities and the "
                                      "intrinsic-vs-star distortion trend")
    dsk.add_argument("--n", type=int, default=2048)
    dsk.add_argument("--runs", type=int, default=50)
    dsk.add_argument("--seed", type=int, default=0)
    dsk.add_argument("--K", type=int, default=1024)
    dsk.add_argument("--out", required=True)

    hul = sub.add_parser("hull", help="hull decomposition, independence, "
                                      "reweighting")
    hul.add_argument("--alpha", type=float, default=0.5)
    hul.add_argument("--r", type=float, default=0.15)
    hul.add_argument("--runs", type=int, default=1000)
    hul.add_argument("--seed", type=int, default=0)
    hul.add_argument("--out", required=True)

    rep = sub.add_parser("report", help="re-check report files against an "
                                        "acceptance table")
    rep.add_argument("--in", dest="inputs", nargs="+", required=True)
    rep.add_argument("--acceptance", required=True)
    return top


def apply_config(parser, args, argv):
    if not args.config:
        return args
    cfg = load_config(args.config)
    if not cfg:
        return args
    explicit = {a.lstrip("-").split("=", 1)[0].replace("-", "_")
                for a in argv if a.startswith("--")}
    for key, val in cfg.items():
        if key in explicit or not hasattr(args, key):
            continue
        cur = getattr(args, key)
        try:
            if isinstance(cur, bool):
                val = val.lower() in ("1", "true", "yes")
            elif isinstance(cur, int):
                val = int(val)
            elif isinstance(cur, float):
                val = float(val)
        except ValueError as exc:
            raise ValueError(f"config key {key}: {exc}") from exc
        setattr(args, key, val)
    return args


def dump_acceptance_table(path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "criterion", "threshold", "comparator"])
        for name, (crit, thr, cmp_kind) in sorted(verify.ACCEPTANCE.items()):
            w.writerow([name, crit, repr(float(thr)), cmp_kind])


def run_report(inputs, table_path):
    table = {}
    with open(table_path) as fh:
        for row in csv.DictReader(fh):
            table[row["name"]] = (float(row["threshold"]), row["comparator"])
    any_fail = False
    for path in inputs:
        with open(path) as fh:
            for rec in json.load(fh):
                if rec["name"] not in table:
                    print(f"{path}: {rec['name']}: not in acceptance table "
                          "(skipped)")
                    continue
                thr, cmp_kind = table[rec["name"]]
                v = rec["value"]
                if cmp_kind == "le":
                    ok = v <= thr
                elif cmp_kind == "ge":
                    ok = v >= thr
                else:
                    ok = bool(v)
                any_fail |= not ok
                print(f"{rec['name']}: value={v:.6g} threshold={thr:.6g} "
                      f"{'PASS' if ok else 'FAIL'}")
    return 1 if any_fail else 0


def dispatch(args):
    if args.command == "verify":
        if args.what == "exact":
            reports, records = verify.exact_identities()
        else:
            reports, records = verify.series_checks()
        out = args.out
    elif args.command == "peel":
        reports, records = verify.peel_limit(
            L_values=(args.L,), runs=args.runs, p0=args.p0, seed=args.seed,
            step_cap=args.step_cap)
        out = args.out
    elif args.command == "snake":
        base = args.delta
        r1, rec1 = verify.tree_laws(
            s0=args.s0, deltas=(16 * base, 4 * base, base),
            n_trees=(args.runs,) * 3, seed=args.seed)
        r2, rec2 = verify.zu_law(n_forests=args.runs, n_base=args.n,
                                 s0=args.s0, delta=args.delta, seed=args.seed)
        reports, records = r1 + r2, rec1 + rec2
        out = args.out
    elif args.command == "disk":
        ks = tuple(max(2, args.K // f) for f in (8, 4, 2, 1))
        reports, records = verify.metric_identities(
            n_replicas=args.runs, K_values=ks, n_base=args.n, seed=args.seed)
        out = args.out
    elif args.command == "hull":
        r1, rec1 = verify.spatial_markov(n_target=args.runs, alpha=args.alpha,
                                         r=args.r, seed=args.seed)
        r2, rec2 = verify.reweighting(seed=args.seed)
        reports, records = r1 + r2, rec1 + rec2
        out = args.out
    else:
        raise AssertionError(args.command)
    verify.write_report_files(out, reports, records)
    for r in reports:
        print(f"{r.name}: value={r.value:.6g} threshold={r.threshold:.6g} "
              f"n={r.n} {'PASS' if r.passed else 'FAIL'}")
    return 0 if all(r.passed for r in reports) else 1


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        args = apply_config(parser, args, argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    if args.command == "report":
        try:
            return run_report(args.inputs, args.acceptance)
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return USAGE_ERROR
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())

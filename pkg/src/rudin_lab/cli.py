"""Command line entry point: ``rudin-lab <subcommand> ...``.

Exit codes: 0 success, 1 a verification failed or a library error was raised,
2 usage error.  With ``--json`` the report goes to stdout (or ``--output``) as
canonical JSON and errors go to stderr as one JSON line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import RudinLabError
from .groups import load_group_spec
from .kernels import KernelConfig, averaged_kernel, dominating_sum, jacobian_product, k_gp, weight_sigma
from .regions import (disjointness_search, displacement_audit, displacement_constants, nesting_audit,
                      slab_audit, triple_intersection_audit)
from .symbolic.factor import compute_B_factorization, compute_M, skew_check
from .verify.battery import SEED, canonical_json, group_battery, run_battery
from .verify.bound import bound_ratio_reports, region_bound_audit
from .verify.operator import default_family, weighted_norm_scan


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 2 and an optional JSON error line."""

    json_errors = False

    def error(self, message):
        if _Parser.json_errors:
            sys.stderr.write(json.dumps({"error": "usage", "message": message}) + "\n")
        else:
            self.print_usage(sys.stderr)
            sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--seed", type=int, default=SEED, help=f"random seed (default {SEED})")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="rudin-lab", description="Bergman-kernel checks for 2-D ball quotients.")
    parser.add_argument("--version", action="version", version=f"rudin-lab {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("group", parents=[common], help="enumerate a group and its hyperplanes")
    g.add_argument("--spec", required=True)

    k = sub.add_parser("kernel", parents=[common], help="evaluate the kernels at one pair")
    k.add_argument("--spec", required=True)
    k.add_argument("--z", required=True, help="two complex numbers, e.g. '0.3+0.1j,-0.2j'")
    k.add_argument("--w", required=True)
    k.add_argument("--p", type=float, default=2.0)
    k.add_argument("--normalized", action="store_true", help="include the 2/pi^2 ball constant")

    f = sub.add_parser("factor", parents=[common], help="exact numerator factorizations")
    f.add_argument("--spec", required=True)
    f.add_argument("--reflection", type=int, help="element index of r for the B-factorization")

    r = sub.add_parser("regions", parents=[common], help="region audits")
    r.add_argument("--spec", required=True)
    r.add_argument("--audit", choices=("nesting", "triple", "disjoint", "slab", "displacement"), default="nesting")
    r.add_argument("--eps", type=float, default=0.05)
    r.add_argument("--samples", type=int, default=100_000)
    r.add_argument("--g", type=int, help="element index (disjoint)")
    r.add_argument("--l", type=int, help="element index (disjoint)")
    r.add_argument("--r", type=int, help="reflection element index (slab)")

    b = sub.add_parser("verify-bound", parents=[common], help="sampled sup of the kernel ratio R")
    b.add_argument("--spec", required=True)
    b.add_argument("--p", type=float, default=4.0)
    b.add_argument("--samples", type=int, default=1_000_000)
    b.add_argument("--eps", type=float, default=0.05, help="region size for the per-region sups")
    b.add_argument("--region-samples", type=int, default=20_000)
    b.add_argument("--csv", help="write the per-stratum table to this CSV file")

    wv = sub.add_parser("verify-weighted", parents=[common], help="weighted norm ratio scan")
    wv.add_argument("--spec", required=True)
    wv.add_argument("--pgrid", default="1.1,1.5,2,3,5")
    wv.add_argument("--nodes", type=int, default=200_000)

    s = sub.add_parser("suite", parents=[common], help="acceptance battery (or the per-group checks with --spec)")
    s.add_argument("--spec", help="run the per-group checks for this group instead of the full battery")
    s.add_argument("--criteria", help="comma-separated criterion numbers (full battery only)")
    s.add_argument("--samples", type=int, default=100_000, help="sample budget for the per-group checks")
    return parser


# parsing helpers -----------------------------------------------------------------------

def parse_point(text: str) -> np.ndarray:
    parts = [t.strip() for t in text.split(",")]
    if len(parts) != 2:
        raise UsageError(f"expected two comma-separated complex numbers, got {text!r}")
    try:
        return np.array([complex(p.replace(" ", "")) for p in parts])
    except ValueError as exc:
        raise UsageError(f"cannot parse point {text!r}") from exc


def parse_grid(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse p-grid {text!r}") from exc


def _header(args, sha: Optional[str]) -> dict:
    settings = {k: v for k, v in sorted(vars(args).items()) if k not in ("json", "output")}
    return {"tool": "rudin-lab", "version": __version__, "command": args.command, "spec_sha256": sha,
            "seed": args.seed, "settings": settings}


# subcommands -----------------------------------------------------------------------------
# each returns (report dict, table lines, passed)

def cmd_group(args, G, spec):
    d = G.describe()
    lines = [f"order        {d['order']}", f"exponent     {d['exponent']}", f"conductor    {d['conductor']}",
             f"reflections  {d['reflections']}", f"hyperplanes  {len(d['hyperplanes'])}"]
    for i, Y in enumerate(d["hyperplanes"]):
        root = ", ".join(f"{complex(c[0] + 0.0, c[1] + 0.0):.6g}" for c in Y["root"])
        lines.append(f"  Y{i}: root ({root})  multiplicity {Y['multiplicity']}")
    return {"group": d}, lines, True


def cmd_kernel(args, G, spec):
    z, w = parse_point(args.z), parse_point(args.w)
    cfg = KernelConfig(normalized=args.normalized, p=args.p)
    kg = averaged_kernel(G, z, w, cfg)
    kp = k_gp(G, z, w, cfg)
    dom = dominating_sum(G, z, w, cfg)
    out = {"z": z, "w": w, "K_G": kg, "K_Gp": kp, "dominating_sum": dom, "R": abs(kp) / dom,
           "J_z": jacobian_product(G, z, cfg), "J_w": jacobian_product(G, w, cfg),
           "sigma_z": weight_sigma(G, z, args.p, cfg)}
    lines = [f"{k:<15}{', '.join(map(str, v.tolist())) if isinstance(v, np.ndarray) else v}" for k, v in out.items()]
    return out, lines, True


def cmd_factor(args, G, spec):
    if args.reflection is None:
        res = compute_M(G)
        skew = skew_check(res.Q, G)
        out = {"Q_terms": len(res.Q.terms), "M_terms": len(res.M.terms), "divisions": res.divisions,
               "skew_check": skew, "M": str(res.M)}
        lines = [f"Q terms     {out['Q_terms']}", f"M terms     {out['M_terms']}",
                 f"divisions   {len(res.divisions)} (all exact)", f"skew check  {skew}"]
        return out, lines, skew
    b = compute_B_factorization(G, args.reflection)
    out = {"reflection": args.reflection, "power": b.power, "numerator_terms": len(b.numerator.terms),
           "Q_H_terms": len(b.Q_H.terms), "L_terms": len(b.L.terms),
           "coset_representatives": b.coset_representatives, "outside_H": b.outside_H, "Q_H": str(b.Q_H)}
    lines = [f"{k:<22}{v}" for k, v in out.items() if k != "Q_H"]
    return out, lines, True


def cmd_regions(args, G, spec):
    a = args.audit
    if a == "nesting":
        rep = nesting_audit(G, args.eps, args.samples, args.seed)
        return rep.to_dict(), _region_lines(rep.to_dict()), rep.passed
    if a == "triple":
        rep = triple_intersection_audit(G, args.eps, args.samples, args.seed)
        return rep.to_dict(), _region_lines(rep.to_dict()), True
    if a == "disjoint":
        if args.g is None or args.l is None:
            raise UsageError("--audit disjoint needs --g and --l")
        rep = disjointness_search(G, args.g, args.l, sample_count=args.samples, seed=args.seed).to_dict()
        lines = [f"eps {e:<6} hits {h}" for e, h in rep["hits"].items()]
        lines.append(f"largest clear eps  {rep['largest_clear_epsilon']}")
        return rep, lines, True
    if a == "slab":
        if args.r is None:
            raise UsageError("--audit slab needs --r")
        C = displacement_constants(G)
        rep = slab_audit(G.elements[args.r], args.eps, args.samples, args.seed, c=2.0 / C.C1)
        return rep.to_dict(), _region_lines(rep.to_dict()), rep.passed
    C = displacement_constants(G)
    dev = displacement_audit(G, min(args.samples, 10_000), args.seed)
    out = {"constants": C.to_dict(), "max_deviation": dev}
    lines = [f"C1 {C.C1:.15g}   C2 {C.C2:.15g}"] + [f"reflection {i}: max deviation {v:.3e}" for i, v in dev.items()]
    return out, lines, max(dev.values()) <= 1e-12


def _region_lines(rep: dict) -> list[str]:
    lines = [f"audit {rep['audit']}  eps {rep['epsilon']}  samples {rep['samples']}  passed {rep['passed']}"]
    lines += [f"  hits       {k}: {v}" for k, v in rep["hits"].items()]
    lines += [f"  violations {k}: {v}" for k, v in rep["violations"].items()]
    return lines


def _pair_text(pair: Optional[dict], key: str) -> str:
    if pair is None:
        return ""
    return " ".join(f"{complex(*c):.17g}" for c in pair[key])


def cmd_verify_bound(args, G, spec):
    rep = bound_ratio_reports(G, [args.p], samples=args.samples, seed=args.seed)[args.p]
    regions = region_bound_audit(G, args.p, args.eps, args.region_samples, args.seed)
    reg = {k: ({str(i): r.to_dict()["sup_ratio"] for i, r in v.items()} if isinstance(v, dict) else v)
           for k, v in regions.items()}
    out = {"bound": rep.to_dict(), "regions": reg}
    rows = _stratum_rows(rep)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(stratum_csv(rows))
    lines = [f"sup R = {rep.sup_ratio:.12g}   samples {rep.samples}   skipped {rep.failures}",
             f"{'stratum':>7} {'count':>9} {'sup_ratio':>22}"]
    lines += [f"{r[0]:>7} {r[1]:>9} {r[2]:>22}" for r in rows]
    passed = np.isfinite(rep.sup_ratio) and (args.p != 2.0 or rep.sup_ratio <= 1.0)
    return out, lines, bool(passed)


def _stratum_rows(rep) -> list[tuple]:
    rows = []
    for k, sup, n in rep.per_stratum:
        pair = rep.stratum_argmax.get(k)
        rows.append((k, n, "" if sup is None else repr(float(sup)), _pair_text(pair, "z"), _pair_text(pair, "w")))
    return rows


def stratum_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["stratum", "count", "sup_ratio", "argmax_z", "argmax_w"])
    wr.writerows(rows)
    return buf.getvalue()


def cmd_verify_weighted(args, G, spec):
    grid = parse_grid(args.pgrid)
    scan = weighted_norm_scan(G, grid, default_family(G, args.seed), nodes=args.nodes, seed=args.seed)
    out = scan.to_dict()
    out["max_ratio_per_p"] = {str(p): scan.max_ratio(p) for p in grid}
    lines = [f"{'p':>5} {'function':<40} {'ratio':>12} {'stderr':>10} unstable"]
    lines += [f"{c.p:>5} {c.function:<40} {c.ratio:>12.6g} {c.ratio_stderr:>10.2e} {c.unstable}" for c in scan.cells]
    return out, lines, scan.finite and not scan.any_unstable


def cmd_suite(args, G, spec):
    if G is not None:
        results = group_battery(G, args.seed, args.samples, progress=_progress(args))
    else:
        nums = None
        if args.criteria:
            try:
                nums = sorted({int(t) for t in args.criteria.split(",") if t.strip()})
            except ValueError as exc:
                raise UsageError(f"cannot parse criteria {args.criteria!r}") from exc
            if not set(nums) <= set(range(1, 12)):
                raise UsageError("criteria are numbered 1 to 11")
        results = run_battery(nums, args.seed, progress=_progress(args))
    out = {"criteria": [dict(r.to_dict(), runtime=None) for r in results],
           "passed": all(r.passed for r in results)}
    lines = [r.line() for r in results]
    return out, lines, out["passed"]


def _progress(args):
    if args.json:
        return None
    return lambda r: sys.stderr.write(r.line() + "\n")


COMMANDS = {"group": cmd_group, "kernel": cmd_kernel, "factor": cmd_factor, "regions": cmd_regions,
            "verify-bound": cmd_verify_bound, "verify-weighted": cmd_verify_weighted, "suite": cmd_suite}


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _Parser.json_errors = "--json" in argv
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        G, spec, sha = (None, None, None)
        if getattr(args, "spec", None):
            G, spec, sha = load_group_spec(args.spec)
        report, lines, passed = COMMANDS[args.command](args, G, spec)
    except (UsageError, ValueError) as exc:
        return _fail(args, "usage", str(exc), 2)
    except (RudinLabError, OSError) as exc:
        return _fail(args, type(exc).__name__, str(exc), 1)
    header = _header(args, sha)
    if args.json:
        _emit(args, canonical_json({"header": header, "report": report, "passed": passed}) + "\n")
    else:
        head = [f"# rudin-lab {__version__}  command {args.command}  seed {args.seed}",
                f"# spec sha256 {sha}",
                "# settings " + " ".join(f"{k}={v}" for k, v in header["settings"].items())]
        _emit(args, "\n".join(head + lines + [f"result: {'PASS' if passed else 'FAIL'}"]) + "\n")
    return 0 if passed else 1


def _fail(args, kind: str, message: str, code: int) -> int:
    if args.json:
        sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    else:
        sys.stderr.write(f"rudin-lab: {kind}: {message}\n")
    return code


def entry() -> None:
    raise SystemExit(main())

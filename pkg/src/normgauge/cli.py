"""Command-line entry point.

Exit codes: 0 means no violation found (or the check passed), 3 means
falsified (or the check failed), and 2 means invalid input. No other
code is ever returned.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .angleform import AngleConfig, critical_config, verify_extremum
from .characterize import TestName, TestParams, Verdict, check_characterization
from .errors import BudgetExceeded, NormGaugeError
from .opcheck import as_matrix, operator_identity_check, random_operators
from .search import (
    SearchConfig,
    Target,
    ViolationCertificate,
    global_budget,
    search_violation,
    sweep,
)
from .vecspace import norm_from_json

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FALSIFIED = 3


class UsageError(NormGaugeError):
    pass


def _clean(obj):
    """Replace non-finite floats (not valid JSON) with strings."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj, indent: Optional[int] = 2) -> str:
    return json.dumps(_clean(obj), indent=indent, sort_keys=True, allow_nan=False)


def manifest(command: str, argv: Sequence[str], norm=None, **parameters) -> dict:
    return {
        "command": command,
        "argv": list(argv),
        "norm": None if norm is None else norm.describe(),
        "parameters": parameters,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def _emit(text: str, path: Optional[str], out) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        out.write(text + "\n")


def _write_manifest(args, man: dict) -> None:
    if getattr(args, "manifest", None):
        with open(args.manifest, "w", encoding="utf-8") as fh:
            fh.write(dumps(man) + "\n")


def _check_budget(evals: int) -> None:
    cap = global_budget()
    if evals > cap:
        raise BudgetExceeded(f"requested {evals} evaluations; the budget is {cap}")


def _certificate_from_result(res, norm, dim: int, seed: int, index: int) -> dict:
    if res.test_name == TestName.RKN_AKN and res.verdict in (Verdict.VIOLATES_I, Verdict.VIOLATES_II):
        target = Target.VIOLATE_I if res.verdict == Verdict.VIOLATES_I else Target.VIOLATE_II
        violation = res.R - res.A if target == Target.VIOLATE_I else res.A - res.R
        cert = ViolationCertificate(
            sample=res.sample, k=res.params.k, n=res.params.n, dim=dim, R=res.R, A=res.A,
            violation=violation, target=target, norm=norm, seed=seed, restart=index, tol=res.tol,
        )
        return cert.to_json()
    out = res.to_json()
    out.update(kind=f"{res.test_name.value.lower()}_witness", norm=norm.describe(), seed=seed, index=index)
    return out


def cmd_check(args, out) -> int:
    norm = norm_from_json(args.norm)
    params = TestParams(args.k, args.n, args.tol_rel, args.tol_abs)
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    _check_budget(args.samples)
    man = manifest("check", args.argv, norm, dim=args.dim, k=args.k, n=args.n, samples=args.samples,
                   seed=args.seed, tol_rel=args.tol_rel, tol_abs=args.tol_abs)
    _write_manifest(args, man)
    summary = check_characterization(norm, args.dim, params, args.samples, args.seed)

    lines = [dumps({"manifest": man}, indent=None)]
    worst_index = None
    for rec in summary.records:
        lines.append(dumps({"index": rec["index"], "results": [r.to_json() for r in rec["results"]]}, indent=None))
        if summary.worst is not None and any(r is summary.worst for r in rec["results"]):
            worst_index = rec["index"]
    lines.append(dumps({"bilinearity": summary.bilinearity.to_json()}, indent=None))

    certificate = None
    if summary.worst is not None:
        certificate = _certificate_from_result(summary.worst, norm, args.dim, args.seed, worst_index)
    elif not summary.bilinearity.ok:
        certificate = {"kind": "bilinearity_witness", "norm": norm.describe(), "seed": args.seed,
                       "witnesses": summary.bilinearity.witnesses}
    lines.append(dumps({"summary": {"verdict": summary.verdict, "samples": summary.samples,
                                    "certificate": certificate}}, indent=None))
    _emit("\n".join(lines), args.report, out)
    if certificate is not None and args.certificate:
        with open(args.certificate, "w", encoding="utf-8") as fh:
            fh.write(dumps(certificate) + "\n")
    return EXIT_FALSIFIED if summary.falsified else EXIT_OK


def _search_config(args, k=None, n=None) -> SearchConfig:
    if args.restarts < 1:
        raise UsageError("--restarts must be >= 1")
    per_restart = args.budget // args.restarts
    if per_restart < 1:
        raise UsageError("--budget must be at least --restarts")
    return SearchConfig(
        k=args.k if k is None else k,
        n=args.n if n is None else n,
        dim=args.dim,
        restarts=args.restarts,
        max_evals_per_restart=per_restart,
        seed=args.seed,
        target=Target(args.target),
    )


def cmd_search(args, out) -> int:
    norm = norm_from_json(args.norm)
    cfg = _search_config(args)
    man = manifest("search", args.argv, norm, **cfg.to_json(), budget=args.budget)
    _write_manifest(args, man)
    res = search_violation(norm, cfg)
    _emit(dumps({"manifest": man, "result": res.to_json()}), args.out, out)
    return EXIT_FALSIFIED if isinstance(res, ViolationCertificate) else EXIT_OK


def _load_matrices(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("matrices")
    if not isinstance(data, list):
        raise UsageError("matrix file must hold a list of matrices or {\"matrices\": [...]}")
    return [as_matrix(m) for m in data]


def cmd_operator(args, out) -> int:
    if args.file:
        mats = _load_matrices(args.file)
        source = {"file": args.file}
    else:
        if args.k < 2 or args.dim < 1:
            raise UsageError("--k must be >= 2 and --dim >= 1")
        mats = random_operators(args.k, args.dim, args.seed)
        source = {"k": args.k, "dim": args.dim, "seed": args.seed}
    man = manifest("operator", args.argv, None, tol=args.tol, **source)
    _write_manifest(args, man)
    report = operator_identity_check(mats, args.tol)
    _emit(dumps({"manifest": man, "report": report.to_json()}), args.out, out)
    return EXIT_OK if report.passed else EXIT_FALSIFIED


def _parse_k_range(text: str) -> list[int]:
    text = text.strip()
    for sep in ("..", "-", ":"):
        if sep in text:
            lo, hi = text.split(sep, 1)
            return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def cmd_sweep(args, out) -> int:
    norm = norm_from_json(args.norm)
    try:
        ks = _parse_k_range(args.k_range)
        ns = _parse_floats(args.n_list)
    except ValueError as exc:
        raise UsageError(f"bad --k-range or --n-list: {exc}") from None
    if not ks or not ns:
        raise UsageError("--k-range and --n-list must be non-empty")
    template = _search_config(args, k=ks[0], n=ns[0])
    _check_budget(len(ks) * len(ns) * template.restarts * template.max_evals_per_restart)
    man = manifest("sweep", args.argv, norm, k_range=ks, n_list=ns, dim=args.dim, restarts=args.restarts,
                   budget=args.budget, seed=args.seed, target=args.target)
    _write_manifest(args, man)
    rows = sweep(norm, ks, ns, template)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "n", "verdict", "best_objective", "evals", "wall_ms", "admissibility_filtered"])
    for r in rows:
        writer.writerow([r.k, _fmt(float(r.n)), r.verdict, _fmt(float(r.best_objective)), r.evals,
                         _fmt(float(r.wall_ms)), str(r.admissibility_filtered).lower()])
    _emit(buf.getvalue().rstrip("\n"), args.csv, out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(dumps({"manifest": man, "rows": [r.to_json() for r in rows]}) + "\n")
    return EXIT_FALSIFIED if any(r.verdict == "falsified" for r in rows) else EXIT_OK


def cmd_prove_structure(args, out) -> int:
    norms = _parse_floats(args.norms)
    if len(norms) != args.k:
        raise UsageError(f"--norms has {len(norms)} entries but --k is {args.k}")
    if args.signs:
        signs = [1 if s.strip() in ("+", "+1", "1") else -1 for s in args.signs.split(",")]
        cfg = critical_config(norms, signs)
    else:
        cfg = AngleConfig(norms)
    man = manifest("prove-structure", args.argv, None, k=args.k, norms=norms, n=args.n, step=args.step,
                   signs=args.signs)
    _write_manifest(args, man)
    report = verify_extremum(cfg, args.n, args.step)
    _emit(dumps({"manifest": man, "report": report.to_json()}), args.out, out)
    return EXIT_OK if report.passed else EXIT_FALSIFIED


def cmd_replay(args, out) -> int:
    with open(args.manifest_file, encoding="utf-8") as fh:
        man = json.load(fh)
    if "manifest" in man:
        man = man["manifest"]
    argv = man.get("argv")
    if not isinstance(argv, list) or not argv or argv[0] == "replay":
        raise UsageError("manifest has no replayable argv")
    return main(argv, out=out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="normgauge",
        description="Test whether a norm on R^d comes from an inner product.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--manifest", help="also write the run manifest to this file")

    p = sub.add_parser("check", help="run every characterization test on seeded random samples")
    p.add_argument("norm", help='norm descriptor JSON, e.g. \'{"variant":"pnorm","p":1.5}\'')
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-rel", type=float, default=1e-9)
    p.add_argument("--tol-abs", type=float, default=1e-10)
    p.add_argument("--report", help="write the JSON-lines report here instead of stdout")
    p.add_argument("--certificate", help="write the certificate here when falsified")
    common(p)
    p.set_defaults(func=cmd_check)

    def search_opts(p):
        p.add_argument("norm", help="norm descriptor JSON")
        p.add_argument("--dim", type=int, default=2)
        p.add_argument("--restarts", type=int, default=8)
        p.add_argument("--budget", type=int, default=10_000, help="total objective evaluations")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--target", choices=[t.value for t in Target], default=Target.AUTO.value)

    p = sub.add_parser("search", help="search for a violation certificate")
    search_opts(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", type=float, default=2.0)
    p.add_argument("--out", help="write the JSON document here instead of stdout")
    common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("operator", help="check the operator identity for real matrices")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--file", help="JSON file with a list of square matrices")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_operator)

    p = sub.add_parser("sweep", help="search every (k, n) cell of a grid")
    search_opts(p)
    p.add_argument("--k-range", default="2..3", help="e.g. 2..4 or 2,3,5")
    p.add_argument("--n-list", default="1,2,4", help="comma-separated exponents")
    p.add_argument("--csv", help="write the CSV here instead of stdout")
    p.add_argument("--report", help="also write a JSON report (no wall times) here")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("prove-structure", help="finite-difference check of the angle-form extremum")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--norms", default="2,1", help="comma-separated positive norms")
    p.add_argument("--n", type=float, default=4.0)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--signs", help="comma-separated +/- signs choosing the critical point")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_prove_structure)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    args.argv = argv
    try:
        return args.func(args, out)
    except (NormGaugeError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"normgauge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # the exit-code contract has no slot for crashes
        print(f"normgauge: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

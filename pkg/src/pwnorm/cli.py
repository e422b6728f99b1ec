"""``pwnorm`` command line.

Exit codes: 0 success, 1 a certification failed, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as E
from .bases import HaarG, HaarIndex, basis_from_descriptor, haar, haar_g, haar_weight_closed_form
from .duality import sample_g
from .formats import csv_text, dumps, fmt_human, write_atomic
from .norms import (
    Family,
    PWPair,
    as_coefficients,
    expansion_norm,
    family_norms,
    square_function_norm,
)
from .stepfn import abs_pow, integral, max_level, pointwise


class UsageError(Exception):
    pass


def _load_json(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def _load_coeffs(path: str) -> np.ndarray:
    obj = _load_json(path)
    if not isinstance(obj, dict) or "a" not in obj:
        raise UsageError(f'{path}: coefficients need the form {{"a": [...]}}')
    try:
        return as_coefficients(obj["a"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_family(path: str) -> Family:
    obj = _load_json(path)
    try:
        if isinstance(obj, dict) and "pairs" in obj:
            return Family.from_json(obj)
        if isinstance(obj, dict) and "blocks" in obj:
            return Family((PWPair.from_json(obj),))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None
    raise UsageError(f'{path}: expected a family {{"pairs": [...]}} or a pair {{"blocks": ..., "w": ...}}')


def _check_p(p: float) -> float:
    if p is None or not p > 2:
        raise UsageError(f"--p must be > 2, got {p}")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def cmd_norm(args) -> int:
    p = _check_p(args.p)
    a = _load_coeffs(args.coeffs)
    fam = _load_family(args.family)
    if a.size != fam.size:
        raise UsageError(f"dimension mismatch: {a.size} coefficients, family over {fam.size} indices")
    values = family_norms(a, fam, p)
    if args.verbose:
        for k, v in enumerate(values):
            print(f"pair {k}: {fmt_human(v)}")
    print(fmt_human(values.max()))
    return 0


def cmd_square(args) -> int:
    desc = _load_json(args.basis)
    try:
        basis = basis_from_descriptor(desc, args.p)
    except ValueError as exc:
        raise UsageError(f"{args.basis}: {exc}") from None
    _check_p(basis.p)
    a = _load_coeffs(args.coeffs)
    if a.size != len(basis):
        raise UsageError(f"dimension mismatch: {a.size} coefficients for {len(basis)} basis elements")
    sq = square_function_norm(a, basis)
    if args.verbose:
        ex = expansion_norm(a, basis)
        print(f"square_function_norm: {fmt_human(sq)}")
        print(f"expansion_norm: {fmt_human(ex)}")
        print(f"ratio: {fmt_human(ex / sq) if sq else 'undefined'}")
    else:
        print(fmt_human(sq))
    return 0


def cmd_verify(args) -> int:
    if args.all == (args.experiment is not None):
        raise UsageError("give exactly one of --all or --experiment NAME")
    names = E.EXPERIMENTS if args.all else [args.experiment]
    for name in names:
        if name not in E.EXPERIMENTS:
            raise UsageError(f"unknown experiment {name!r}; choose from {', '.join(E.EXPERIMENTS)}")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if not 1 <= args.max_level <= max_level():
        raise UsageError(f"--max-level must lie in [1, {max_level()}]")
    p_values = [args.p] if args.p is not None else list(E.DEFAULT_P_GRID)
    for p in p_values:
        _check_p(p)
    basis_desc = _load_json(args.basis) if args.basis else None
    if basis_desc is not None and (args.all or args.experiment in ("example3", "haar")):
        raise UsageError("--basis applies to theorem1, lp, example4, discrete and khintchine")

    reports = []
    for p in p_values:
        basis = None
        if basis_desc is not None:
            try:
                basis = basis_from_descriptor(basis_desc, p)
            except ValueError as exc:
                raise UsageError(f"{args.basis}: {exc}") from None
        for name in names:
            try:
                reports.extend(E.run_experiment(name, p, args.seed, args.trials, args.max_level, basis))
            except ValueError as exc:
                raise UsageError(str(exc)) from None

    all_pass = all(r.passed for r in reports)
    if args.format == "csv":
        rows = [row for r in reports for row in r.csv_rows()]
        text = csv_text(E.CSV_HEADER, rows)
    else:
        config = {"seed": args.seed, "trials": args.trials, "max_level": args.max_level,
                  "p": p_values, "experiments": list(names)}
        text = dumps({"config": config, "pass": all_pass, "reports": [r.to_dict() for r in reports]})
    _emit(text, args.out)
    if args.out or args.format == "csv":
        for r in reports:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status} {r.name} p={r.p:g} N={r.N}", file=sys.stderr)
    return 0 if all_pass else 1


def _parse_b(raw: str) -> list[float]:
    raw = raw.strip()
    try:
        if raw.startswith("["):
            return [float(x) for x in json.loads(raw)]
        return [float(x) for x in raw.split(",") if x.strip()]
    except (ValueError, TypeError):
        raise UsageError(f"cannot parse --b {raw!r}") from None


def cmd_haar_table(args) -> int:
    p = _check_p(args.p)
    try:
        hg = HaarG(args.n, _parse_b(args.b), p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    max_m = args.n + 1 if args.max_m is None else args.max_m
    if max_m > max_level():
        raise UsageError(f"--max-m exceeds the maximum level {max_level()}")
    g = haar_g(hg).g
    rows = []
    for m in range(args.min_m, max_m + 1):
        for l in range(1 if m == 0 else 2 ** (m - 1)):
            closed = haar_weight_closed_form(hg, m, l)
            direct = integral(pointwise("mul", g, abs_pow(haar(HaarIndex(m, l), p), 2)))
            rows.append([m, l, closed, direct, abs(closed - direct)])
    _emit(csv_text(["m", "l", "closed_form", "direct_integral", "abs_diff"], rows), args.out)
    return 0


def cmd_sample_g(args) -> int:
    p = _check_p(args.p)
    if not 0 <= args.level <= max_level():
        raise UsageError(f"--level must lie in [0, {max_level()}]")
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    rng = np.random.default_rng(args.seed)
    try:
        gs = sample_g(rng, args.level, p / (p - 2), args.count, args.distribution)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    payload = {"p": p, "q": p / (p - 2), "seed": args.seed,
               "functions": [g.to_json() for g in gs]}
    _emit(dumps(payload), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwnorm", description="Partition-and-weight norms on L_p bases.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--p", type=float, help="exponent p > 2")
        sp.add_argument("--out", help="output file (written atomically); default stdout")
        sp.add_argument("--verbose", action="store_true")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("norm", help="evaluate a partition-weight family norm")
    common(sp)
    sp.add_argument("--coeffs", required=True, help='JSON {"a": [...]}')
    sp.add_argument("--family", required=True, help='JSON {"pairs": [{"blocks": ..., "w": ...}]}')
    sp.set_defaults(func=cmd_norm)

    sp = sub.add_parser("square", help="square-function norm of an expansion in a basis")
    common(sp)
    sp.add_argument("--coeffs", required=True)
    sp.add_argument("--basis", required=True, help='JSON descriptor, e.g. {"kind": "haar", "max_level": 4}')
    sp.set_defaults(func=cmd_square)

    sp = sub.add_parser("verify", help="run certification experiments")
    common(sp, seed=True)
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--experiment", help=f"one of {', '.join(E.EXPERIMENTS)}")
    sp.add_argument("--basis", help="basis descriptor JSON for basis-driven experiments")
    sp.add_argument("--trials", type=int, default=E.DEFAULT_TRIALS)
    sp.add_argument("--max-level", type=int, default=6)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("haar-table", help="closed-form vs integrated Haar weights")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--b", required=True, help="b_{n,k} as 1,0 or [1, 0]")
    sp.add_argument("--min-m", type=int, default=0)
    sp.add_argument("--max-m", type=int)
    sp.set_defaults(func=cmd_haar_table)

    sp = sub.add_parser("sample-g", help="draw random norming functions")
    common(sp, seed=True)
    sp.add_argument("--level", type=int, default=4)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--distribution", default="chi2", choices=("chi2", "uniform", "exponential"))
    sp.set_defaults(func=cmd_sample_g)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pwnorm: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"pwnorm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 success, 1 I/O failure, 2 infeasible input, 3 a verification or
benchmark check failed, 64 usage error.

Default output files go to ``$BINARYCORR_OUTPUT_DIR`` (current directory when
unset).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bench, constraints, verify
from .constraints import FeasibilityError, FeasibilityReport, Verdict
from .core import (
    Algorithm,
    DecayingProduct,
    Exchangeable,
    General,
    KDependent,
    MarginalVector,
    OneDependent,
)
from .generators import generate_from_plan, make_plan
from .rng import RandomStream

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2, 3, 64
DEFAULT_SEED = 0
OUTPUT_DIR_ENV = "BINARYCORR_OUTPUT_DIR"
PD_CHECK_MAX_M = 2000

STRUCTURES = {
    "exchangeable": "exchangeable",
    "decaying": "decaying",
    "ar1": "decaying",
    "one-dep": "one_dep",
    "k-dep": "k_dep",
    "general": "general",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def _floats(text: str, what: str) -> list:
    try:
        return [float(x) for x in text.replace(";", ",").replace(" ", ",").split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# Building inputs from arguments


def _read_p(args) -> MarginalVector:
    if args.p is not None:
        values = _floats(args.p, "--p")
    elif args.p_file is not None:
        values = _floats(Path(args.p_file).read_text().replace("\n", ","), "--p-file")
    else:
        parts = _floats(args.p_uniform, "--p-uniform")
        if len(parts) != 4:
            raise UsageError("--p-uniform expects lo,hi,m,pseed")
        lo, hi, m, pseed = parts
        if not (0.0 < lo < hi < 1.0) or m < 1:
            raise UsageError("--p-uniform needs 0 < lo < hi < 1 and m >= 1")
        values = lo + (hi - lo) * RandomStream(int(pseed)).uniforms(int(m))
    return MarginalVector(values)


def _vector(text, length: int, what: str) -> np.ndarray:
    values = _floats(text, what)
    if len(values) == 1:
        return np.full(length, values[0])
    if len(values) != length:
        raise UsageError(f"{what}: expected 1 or {length} values, got {len(values)}")
    return np.array(values)


def _read_matrix(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row if x.strip()] for row in csv.reader(fh) if row]
    return np.array(rows, dtype=float)


def _build_spec(args, m: int):
    structure = STRUCTURES[args.structure]
    if structure == "exchangeable":
        if args.rho is None:
            raise UsageError("exchangeable structure needs --rho")
        values = _floats(args.rho, "--rho")
        if len(values) != 1:
            raise UsageError("exchangeable structure takes a single --rho")
        return Exchangeable(values[0])
    if structure in ("decaying", "one_dep"):
        if args.rho is None:
            raise UsageError(f"{args.structure} structure needs --rho")
        rho = _vector(args.rho, m - 1, "--rho")
        return DecayingProduct(rho) if structure == "decaying" else OneDependent(rho)
    if structure == "k_dep":
        if not args.band:
            raise UsageError("k-dep structure needs at least one --band")
        return KDependent([_vector(b, m - i, f"--band {i}") for i, b in enumerate(args.band, 1)])
    r = _read_matrix(args.corr_file) if args.corr_file else np.eye(m)
    if r.shape != (m, m):
        raise UsageError(f"correlation matrix is {r.shape}, expected {(m, m)}")
    if not np.allclose(r, r.T, rtol=0.0, atol=1e-12):
        raise UsageError("correlation matrix is not symmetric to 1e-12")
    r = (r + r.T) / 2.0
    for entry in args.rho_entry or []:
        parts = _floats(entry, "--rho-entry")
        if len(parts) == 1 and m == 2:
            i, j, value = 1, 2, parts[0]
        elif len(parts) == 3:
            i, j, value = int(parts[0]), int(parts[1]), parts[2]
        else:
            raise UsageError("--rho-entry takes I,J,VALUE (or a bare VALUE when m=2)")
        if not (1 <= i <= m and 1 <= j <= m and i != j):
            raise UsageError(f"--rho-entry index ({i},{j}) out of range")
        r[i - 1, j - 1] = r[j - 1, i - 1] = value
    return General(r)


def _inputs(args):
    p = _read_p(args)
    if args.structure is None:
        raise UsageError("--structure is required")
    spec = _build_spec(args, p.m)
    spec.check_dimension(p.m)
    return p, spec


def _algorithm(args):
    return None if args.alg in (None, "auto") else Algorithm.parse(args.alg)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _infeasible(report: FeasibilityReport) -> int:
    print(_dump(report.to_dict()))
    print(f"infeasible: {report.notes}", file=sys.stderr)
    return EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# Commands


def _csv_bytes(data: np.ndarray, header: bool) -> bytes:
    n, m = data.shape
    buf = np.empty((n, 2 * m), dtype=np.uint8)
    buf[:, 0::2] = data + ord("0")
    buf[:, 1::2] = ord(",")
    buf[:, -1] = ord("\n")
    head = (",".join(f"x{i}" for i in range(1, m + 1)) + "\n").encode() if header else b""
    return head + buf.tobytes()


def cmd_gen(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    p, spec = _inputs(args)
    try:
        plan = make_plan(p, spec, _algorithm(args))
    except FeasibilityError as exc:
        return _infeasible(exc.report)
    samples = generate_from_plan(plan, args.n, args.seed, parallel=not args.serial)
    out = Path(args.out) if args.out else _output_dir() / f"samples_{plan.digest[:12]}.{args.format}"
    meta = {
        "seed": args.seed,
        "spec_digest": samples.spec_digest,
        "algorithm": plan.algorithm.value,
        "structure": spec.kind,
        "n": samples.n,
        "m": samples.m,
        "p": [float(x) for x in p.p],
        "format": args.format,
        "header": not args.no_header,
    }
    try:
        if args.format == "csv":
            out.write_bytes(_csv_bytes(samples.data, not args.no_header))
        else:
            payload = {"columns": [f"x{i}" for i in range(1, p.m + 1)], "rows": samples.data.tolist()}
            out.write_text(json.dumps(payload))
        Path(str(out) + ".meta.json").write_text(_dump(meta) + "\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_dump({**{k: meta[k] for k in ("seed", "spec_digest", "algorithm", "n", "m")}, "output": str(out)}))
    return EXIT_OK


def cmd_check(args) -> int:
    p, spec = _inputs(args)
    alg = _algorithm(args)
    report = constraints.check_prentice(p, spec)
    if report.feasible and p.m <= PD_CHECK_MAX_M:
        r = verify.materialize_correlation(spec, p.m)
        if not constraints.is_positive_definite(r):
            lam = float(np.linalg.eigvalsh(r)[0])
            report = FeasibilityReport(
                Verdict.NOT_POSITIVE_DEFINITE,
                [constraints.Violation((), "min_eigenvalue(R)", lam, (constraints.PD_TOL, 1.0))],
                alg,
                "target correlation matrix is not positive definite",
            )
    if report.feasible:
        try:
            plan = make_plan(p, spec, alg)
            report = constraints.feasible_report(plan.algorithm, f"feasible with {plan.algorithm.value}")
        except FeasibilityError as exc:
            report = exc.report
    if isinstance(spec, OneDependent) and not report.feasible and not report.hints and p.m >= 2:
        report.hints = constraints._one_dep_hints(p)
    print(_dump(report.to_dict()))
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_bounds(args) -> int:
    p = _read_p(args)
    structure = STRUCTURES.get(args.structure) if args.structure else None
    out: dict = {"m": p.m}
    if p.m >= 2:
        out["prentice_upper_min"] = constraints.prentice_upper(p.p_min, p.p_max) if p.p_min != p.p_max else 1.0
        out["prentice_upper_adjacent"] = [float(x) for x in constraints.prentice_upper_array(p.p[:-1], p.p[1:])]
        if p.m <= 64:
            table = constraints.prentice_upper_array(p.p[:, None], p.p[None, :])
            out["prentice_upper"] = table.tolist()
    if structure in (None, "one_dep", "k_dep") and p.m >= 2:
        out["rho_max_alg3_equal"] = constraints.rho_max_alg3_equal(p)
        out["rho_max_alg4_equal"] = constraints.rho_max_alg4_equal(p.m)
        out["pd_bound_1dep_equal"] = list(constraints.pd_bound_1dep_equal(p.m))
    print(_dump(out))
    if args.plot:
        from .plotting import plot_rho_max_curves

        plot_rho_max_curves(args.plot)
    return EXIT_OK


def cmd_verify(args) -> int:
    p, spec = _inputs(args)
    try:
        plan = make_plan(p, spec, _algorithm(args))
    except FeasibilityError as exc:
        return _infeasible(exc.report)
    status: dict = {}
    target = verify.materialize_correlation(spec, p.m)
    if verify.lattice_size(plan) <= verify.ORACLE_MAX_VARS:
        exact = verify.exact_oracle(plan)
        status["oracle-mean"] = "PASS" if np.max(np.abs(exact.mean - p.p)) <= 1e-12 else "FAIL"
        status["oracle-corr"] = "PASS" if np.max(np.abs(exact.corr - target)) <= 1e-12 else "FAIL"
    else:
        status["oracle-mean"] = status["oracle-corr"] = "SKIPPED"
    ladder = [n for n in verify.DEFAULT_LADDER if n <= args.n] or [args.n]
    points = verify.convergence_study(p, spec, plan.algorithm, ladder, range(args.seed, args.seed + args.seeds))
    status.update(verify.assess_convergence(points))
    out_dir = Path(args.out_dir) if args.out_dir else _output_dir()
    try:
        with open(out_dir / "verify_convergence.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "mean_l2", "corr_frobenius", "mean_envelope", "corr_envelope"])
            for pt in points:
                writer.writerow([pt.n, repr(pt.mean_l2), repr(pt.corr_frobenius), repr(pt.mean_envelope), repr(pt.corr_envelope)])
        if args.plot:
            from .plotting import plot_convergence

            plot_convergence({plan.algorithm.value: points}, out_dir / "verify_convergence.png")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name, result in status.items():
        print(f"{result:7s} {name}")
    return EXIT_CHECK_FAILED if "FAIL" in status.values() else EXIT_OK


def cmd_bench(args) -> int:
    dims = [int(float(x)) for x in _floats(args.dims, "--dims")]
    if not dims:
        raise UsageError("--dims must not be empty")
    k = None if args.k in (None, "general") else int(args.k)
    alg = Algorithm.parse(args.alg)
    p_prof, spec_prof, label = bench.default_profile(alg, k)
    try:
        result = bench.run_scaling(alg, p_prof, spec_prof, sorted(dims), reps=args.reps, label=label)
    except FeasibilityError as exc:
        return _infeasible(exc.report)
    out = Path(args.out) if args.out else _output_dir() / f"bench_{alg.value}.csv"
    try:
        bench.emit_scaling_csv(result, out)
        if args.plot:
            from .plotting import plot_scaling

            plot_scaling([result], args.plot)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_dump({"label": label, "slope": result.slope, "r2": result.r2, "output": str(out)}))
    if args.expect_slope:
        lo, hi = _floats(args.expect_slope, "--expect-slope")
        ok = lo <= result.slope <= hi
        print(f"{'PASS' if ok else 'FAIL':7s} slope {result.slope:.3f} in [{lo}, {hi}]")
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_p_args(sub):
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--p", help="comma-separated marginals")
    group.add_argument("--p-file", help="file of marginals (commas, spaces or newlines)")
    group.add_argument("--p-uniform", help="lo,hi,m,pseed: m marginals uniform on (lo, hi)")


def _add_spec_args(sub):
    _add_p_args(sub)
    sub.add_argument("--structure", choices=sorted(STRUCTURES), required=True)
    sub.add_argument("--rho", help="scalar, or m-1 comma-separated minor-diagonal values")
    sub.add_argument("--band", action="append", help="k-dep band (repeat per lag)")
    sub.add_argument("--corr-file", help="square CSV correlation matrix (general)")
    sub.add_argument("--rho-entry", action="append", help="I,J,VALUE override for general (VALUE alone if m=2)")
    sub.add_argument("--alg", default="auto", choices=["auto", "1", "2", "3", "4", "5", "alg1", "alg2", "alg3", "alg4", "alg5"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="binarycorr", description=__doc__.split("\n")[0])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = subs.add_parser("gen", help="generate samples")
    _add_spec_args(gen)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gen.add_argument("--out")
    gen.add_argument("--format", choices=["csv", "json"], default="csv")
    gen.add_argument("--no-header", action="store_true")
    gen.add_argument("--serial", action="store_true", help="disable row-parallel generation")
    gen.set_defaults(func=cmd_gen)

    check = subs.add_parser("check", help="feasibility report")
    _add_spec_args(check)
    check.set_defaults(func=cmd_check)

    bounds = subs.add_parser("bounds", help="admissible correlation bounds")
    _add_p_args(bounds)
    bounds.add_argument("--structure", choices=sorted(STRUCTURES))
    bounds.add_argument("--plot", help="write the rho_max curves to this image file")
    bounds.set_defaults(func=cmd_bounds)

    ver = subs.add_parser("verify", help="exact oracle and convergence ladder")
    _add_spec_args(ver)
    ver.add_argument("--n", type=int, default=10**5, help="largest ladder size")
    ver.add_argument("--seeds", type=int, default=10)
    ver.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ver.add_argument("--out-dir")
    ver.add_argument("--plot", action="store_true")
    ver.set_defaults(func=cmd_verify)

    bch = subs.add_parser("bench", help="scaling benchmark")
    bch.add_argument("--alg", required=True)
    bch.add_argument("--dims", default="1000,10000,100000")
    bch.add_argument("--k", help="fixed band width for alg5, or 'general'")
    bch.add_argument("--reps", type=int, default=10)
    bch.add_argument("--out")
    bch.add_argument("--plot")
    bch.add_argument("--expect-slope", help="lo,hi; exit 3 when the fitted slope falls outside")
    bch.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"binarycorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"binarycorr: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"binarycorr: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

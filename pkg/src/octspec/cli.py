"""``octspec`` command line: algebra tables, spectral resolutions, f(T), diagonal models.

Exit codes: 0 success, 2 invalid input, 1 computation failure (including an
example52 verdict that does not come out as expected).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import cdnum
from .cdnum import CdNumber, VMAX
from .errors import OctspecError, ValidationError

EXIT_OK, EXIT_COMPUTE, EXIT_INVALID = 0, 1, 2
CALC_DECIMALS = 12


# ---------------------------------------------------------------- io helpers

def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if hasattr(o, "to_json"):
        return o.to_json()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, float) and math.isinf(o):
        return "inf" if o > 0 else "-inf"
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _round(m: np.ndarray) -> np.ndarray:
    r = np.round(np.asarray(m, dtype=float), CALC_DECIMALS)
    r[r == 0.0] = 0.0  # drop negative zeros
    return r


def dump_operator(T) -> str:
    """Operator JSON with entries rounded to 12 decimals, so f = id reproduces T exactly."""
    return _dumps({"kind": "real", "v": T.v, "n": T.n,
                   "matrix": [[float(c) for c in row] for row in _round(T.matrix)]})


def _load_operator(path: str):
    from .qlop import load_operator
    obj = _read_json(path)
    try:
        return load_operator(obj)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{path}: malformed operator ({exc})") from exc


def _load_function(path: str):
    from .funcalc import StepFunction, builtin_function
    obj = _read_json(path)
    if isinstance(obj, dict) and "builtin" in obj:
        return builtin_function(obj["builtin"]), obj["builtin"]
    try:
        return StepFunction.from_json(obj), "step"
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{path}: malformed step function ({exc})") from exc


def _check_level(v: int) -> None:
    if not 0 <= v <= VMAX:
        raise ValidationError(f"level v={v} out of range 0..{VMAX}")


# ---------------------------------------------------------------- subcommands

def cmd_algebra(args) -> int:
    _check_level(args.v)
    if args.action == "table":
        n = 1 << args.v
        width = len(str(n - 1)) + 3
        print(f"A_{args.v} multiplication table (row i_j times column i_k)")
        print(" " * width + "".join(f"{'i' + str(k):>{width}}" for k in range(n)))
        for j in range(n):
            cells = []
            for k in range(n):
                p = cdnum.basis_mul(j, k, args.v)
                cells.append(f"{('-' if p.sign < 0 else '+') + 'i' + str(p.index):>{width}}")
            print(f"{'i' + str(j):>{width}}" + "".join(cells))
        return EXIT_OK
    if args.action == "identities":
        t0 = time.perf_counter()
        bad = cdnum.kappa_violations(args.v)
        res = cdnum.identity_residuals(args.v, args.trials, args.seed)
        print(f"A_{args.v}: {args.trials} random triples, seed {args.seed}")
        print(f"  kappa rule        {'pass' if not bad else f'FAIL ({len(bad)} pairs)'}")
        expected = _expected_identities(args.v)
        for name, r in res.items():
            holds = r <= 1e-12
            tag = "holds" if holds else "fails"
            note = "" if expected.get(name, holds) == holds else "  (unexpected)"
            print(f"  {name:<22} max residual {r:.3e}  {tag}{note}")
        print(f"  elapsed {time.perf_counter() - t0:.3f}s")
        return EXIT_OK
    if args.action == "zerodivisor":
        if args.v < 4:
            raise ValidationError(f"A_{args.v} is a division algebra; zero divisors need v >= 4")
        a, b = cdnum.find_zero_divisor(args.v)
        print(f"a = {a}")
        print(f"b = {b}")
        print(f"|a b| = {(a * b).norm()}")
        return EXIT_OK
    raise ValidationError(f"unknown action {args.action!r}")


def _expected_identities(v: int) -> dict[str, bool]:
    return {
        "associativity": v <= 2,
        "left_alternativity": v <= 3,
        "right_alternativity": v <= 3,
        "moufang": v <= 3,
        "norm_multiplicativity": v <= 3,
        "flexibility": True,
        "trace_associativity": True,
    }


def cmd_spectral(args) -> int:
    from .hmodule import ModuleVector
    from .qlop import require_self_adjoint
    from .spectral import resolution_of_identity, resolvents, riemann_reconstruct

    T = _load_operator(args.operator)
    require_self_adjoint(T)
    if not args.mesh > 0:
        raise ValidationError("--mesh must be positive")
    R = resolution_of_identity(T, method=args.method)
    print(f"operator v={T.v} n={T.n}; {len(R.breakpoints)} breakpoint(s)")
    print("b,rank")
    for b, r in zip(R.breakpoints, R.ranks):
        print(f"{b!r},{r}")
    res = resolvents(T)
    r2, r3 = res.identity_residuals()
    bp, bm = res.norms()
    print(f"resolvent identities: 2(iI)B+B- = B- - B+ residual {r2:.3e}; "
          f"T B+B- = (B+ + B-)/2 residual {r3:.3e}")
    print(f"|B+| = {bp:.6f}, |B-| = {bm:.6f}")
    x = ModuleVector.random(T.n, T.v, np.random.default_rng(args.seed))
    y = riemann_reconstruct(R, x, args.mesh)
    err = float(np.linalg.norm(y.flat - T.matrix @ x.flat))
    bound = args.mesh * x.norm()
    print(f"Riemann reconstruction at mesh {args.mesh:g}: error {err:.3e} "
          f"(bound mesh*|x| = {bound:.3e}) {'ok' if err <= bound else 'EXCEEDED'}")
    _write(args.csv, R.to_csv())
    _write(args.out, _dumps(R.to_json(full=args.full)))
    return EXIT_OK if err <= bound else EXIT_COMPUTE


def cmd_calc(args) -> int:
    from .funcalc import apply
    from .qlop import require_self_adjoint
    from .spectral import resolution_of_identity

    T = _load_operator(args.operator)
    f, label = _load_function(args.function)
    require_self_adjoint(T)
    R = resolution_of_identity(T)
    fT = apply(f, T, R)
    sup = 0.0
    for b in R.breakpoints:
        z = f(float(b))
        sup = max(sup, z.norm() if isinstance(z, CdNumber) else abs(float(z)))
    norm = float(np.linalg.norm(fT.matrix, 2))
    ok = norm <= sup + 1e-10
    print(f"f = {label} on {len(R.breakpoints)} breakpoint(s)")
    print(f"|f(T)| = {norm:.12g}; sup over spectrum |f| = {sup:.12g}; bound {'holds' if ok else 'VIOLATED'}")
    text = dump_operator(fT)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_COMPUTE


def _load_symbol(path: str):
    from .diagmodel import DiagSymbol
    obj = _read_json(path)
    try:
        return DiagSymbol.from_json(obj)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{path}: malformed symbol ({exc})") from exc


def _load_vector(path: str):
    from .diagmodel import PowerVector
    obj = _read_json(path)
    try:
        return PowerVector.from_json(obj)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{path}: malformed vector ({exc})") from exc


def cmd_diag(args) -> int:
    from .diagmodel import (affiliation_report, bounding_sequence, domain_contains,
                            spectrum_closure)

    T = _load_symbol(args.symbol)
    report = {"symbol": T.to_json(), "leading_exponent": T.leading_exponent}
    print(f"symbol v={T.v}, head length {T.head_len}, {len(T.terms)} tail term(s), "
          f"leading exponent {T.leading_exponent:g}")
    cps = tuple(c for c in (10**3, 10**4, 10**5, 10**6) if c <= args.horizon)
    if args.vector:
        x = _load_vector(args.vector)
        vd = domain_contains(T, x, cps or (args.horizon,))
        report["domain"] = vd.to_json()
        flag = " (borderline, decided divergent)" if vd.borderline else ""
        print(f"x in D(T): {vd.member}; exponent {vd.exponent:g}{flag}")
        for n, s in vd.partial_sums:
            print(f"  S_{n} = {s:.10g}")
        if vd.limit_bracket:
            print(f"  limit in [{vd.limit_bracket[0]:.10f}, {vd.limit_bracket[1]:.10f}]")
        if vd.crossing is not None:
            how = "estimated" if vd.crossing_estimated else "found"
            print(f"  partial sums exceed 1e3 at N = {vd.crossing} ({how})")
    if args.thresholds:
        seq = bounding_sequence(T, args.thresholds)
        rows = []
        for p in seq.projections:
            rank = p.indices.size if p.finite else "infinite"
            print(f"bounding projection m={p.threshold:g}: rank {rank}, "
                  f"|T F| = {p.norm:.6g} (<= m: {p.norm <= p.threshold})")
            rows.append({"m": p.threshold, "rank": rank, "norm": p.norm,
                         "settle": p.settle, "tail_residues": sorted(p.tail_residues)})
        report["bounding"] = rows
    sp = spectrum_closure(T)
    report["spectrum"] = sp.to_json()
    lims = ", ".join(str(z) for z in sp.limit_points) or "none"
    print(f"spectrum: closure of {{t_n}}; finite limit points: {lims}; unbounded: {sp.unbounded}")
    if args.contains is not None:
        z = CdNumber(args.contains)
        if z.level != T.v:
            raise ValidationError("--contains needs 2**v coefficients")
        hit = sp.contains(z, args.tol)
        report["contains"] = hit
        print(f"{z} in sp(T): {hit}")
    aff = affiliation_report(T)
    report["affiliation"] = aff
    print(f"normal (T* T = T T*): {aff['normal']}")
    _write(args.out, _dumps(report))
    return EXIT_OK


def _example52_table(rep: dict) -> list[str]:
    lines = [f"Example: diagonal operators on the A_{rep['v']}-module, horizon {rep['horizon']}"]
    lines.append("  Q e_n = n xi_n e_n;  B e_n = (n^(1/4) - n) xi_n e_n;  C e_n = n^(-3/4) xi_n e_n")
    lines.append("  x = sum_n n^(-1) z_n e_n,  z_n in {+-1, +-xi_n, +-xi_n*}")
    lines.append(f"  {'set':<10}{'member':>8}{'expected':>10}{'exponent':>10}   partial sums")
    for key, vd in rep["verdicts"].items():
        exp = rep["expected"][key]
        sums = "  ".join(f"S_{n:.0e}={s:.6g}" for n, s in vd.partial_sums)
        lines.append(f"  {key:<10}{str(vd.member):>8}{str(exp):>10}{vd.exponent:>10g}   {sums}")
    for key, vd in rep["extra"].items():
        lines.append(f"  {key:<10}{str(vd.member):>8}{'':>10}{vd.exponent:>10g}")
    qb = rep["verdicts"]["D(Q+^B)"]
    if qb.limit_bracket:
        lo, hi = qb.limit_bracket
        lines.append(f"  sum n^(-3/2): S_N = {qb.partial_sums[-1][1]:.9f}, limit in [{lo:.9f}, {hi:.9f}]")
    dq = rep["verdicts"]["D(Q)"]
    if dq.crossing is not None:
        lines.append(f"  sum |x_n t_n|^2 for Q exceeds 1e3 at N = {dq.crossing}")
    lines.append(f"  Q+B != Q+^B: {rep['Q+B != Q+^B']}")
    lines.append(f"  CQ != C*^Q:  {rep['CQ != C*^Q']}")
    lines.append(f"  QC closed:   {rep['QC closed']}")
    lines.append(f"  all four verdicts as expected: {rep['matches_expected']}")
    return lines


def cmd_example52(args) -> int:
    from .diagmodel import example52_report
    if args.horizon < 10**3:
        raise ValidationError("--horizon must be at least 1000")
    rep = example52_report(v=args.v, horizon=args.horizon)
    print("\n".join(_example52_table(rep)))
    if args.out:
        out = dict(rep)
        out["verdicts"] = {k: v.to_json() for k, v in rep["verdicts"].items()}
        out["extra"] = {k: v.to_json() for k, v in rep["extra"].items()}
        _write(args.out, _dumps(out))
    return EXIT_OK if rep["matches_expected"] else EXIT_COMPUTE


def cmd_selftest(args) -> int:
    from .diagmodel import example52_report
    from .qlop import CdMatrixOperator, component_project
    from .spectral import resolution_of_identity, resolution_uniqueness_check, resolvents

    rng = np.random.default_rng(args.seed)
    checks = []
    checks.append(("kappa rule v=2..4", all(not cdnum.kappa_violations(v) for v in (2, 3, 4))))
    r3 = cdnum.identity_residuals(3, 200, args.seed)
    checks.append(("octonion alternativity",
                   max(r3["left_alternativity"], r3["right_alternativity"]) <= 1e-12))
    a, b = cdnum.find_zero_divisor(4)
    checks.append(("sedenion zero divisor", (a * b).norm() == 0.0))
    A = CdMatrixOperator.random(3, 3, rng)
    op = A.to_operator()
    total = sum(component_project(op, j).matrix for j in range(8))
    checks.append(("component projections sum", float(np.max(np.abs(total - op.matrix))) <= 1e-10))
    H = CdMatrixOperator.random(4, 2, rng, hermitian=True).to_operator()
    r2, r3_ = resolvents(H).identity_residuals()
    checks.append(("resolvent identities", max(r2, r3_) <= 1e-10))
    u = resolution_uniqueness_check(resolution_of_identity(H), resolution_of_identity(H, "power"))
    checks.append(("resolution uniqueness", bool(u)))
    checks.append(("example52 verdicts", example52_report(horizon=10**4)["matches_expected"]))
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_COMPUTE


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")

    p = argparse.ArgumentParser(prog="octspec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("algebra", parents=[common], help="Cayley-Dickson tables and identities")
    a.add_argument("--v", type=int, required=True)
    a.add_argument("--trials", type=int, default=1000)
    a.add_argument("action", choices=["table", "identities", "zerodivisor"])
    a.set_defaults(func=cmd_algebra)

    s = sub.add_parser("spectral", parents=[common], help="graded resolution of a self-adjoint operator")
    s.add_argument("operator")
    s.add_argument("--mesh", type=float, default=1e-3)
    s.add_argument("--method", choices=["jacobi", "power"], default="jacobi")
    s.add_argument("--csv", help="write breakpoints and ranks here")
    s.add_argument("--out", help="write the resolution JSON here")
    s.add_argument("--full", action="store_true", help="include projections in --out")
    s.set_defaults(func=cmd_spectral)

    c = sub.add_parser("calc", parents=[common], help="f(T) for a step or builtin function")
    c.add_argument("operator")
    c.add_argument("function")
    c.add_argument("--out")
    c.set_defaults(func=cmd_calc)

    d = sub.add_parser("diag", parents=[common], help="diagonal operator analyses")
    d.add_argument("symbol")
    d.add_argument("--vector", help="PowerVector JSON for a domain query")
    d.add_argument("--thresholds", type=float, nargs="+")
    d.add_argument("--contains", type=float, nargs="+", help="cd-number coefficients")
    d.add_argument("--tol", type=float, default=1e-9)
    d.add_argument("--horizon", type=int, default=10**6)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diag)

    e = sub.add_parser("example52", parents=[common], help="reproduce the diagonal Q, B, C example")
    e.add_argument("--horizon", type=int, default=10**6)
    e.add_argument("--v", type=int, default=3, choices=[2, 3])
    e.add_argument("--out")
    e.set_defaults(func=cmd_example52)

    t = sub.add_parser("selftest", parents=[common], help="quick battery of structural checks")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValidationError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OctspecError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())

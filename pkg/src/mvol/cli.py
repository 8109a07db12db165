"""Command-line front end.

Subcommands: ``volume`` (one profile), ``minimal`` (table of the
one-singularity family), ``coeffs`` (constructive expansion table), ``fit``
(independent least-squares table plus cross-validation), ``verify`` (the
property suite), ``diagnose`` (block-sum splits and residual decay).

Exit codes: 0 success, 2 usage error, 3 computation error, 4 verification
failure.  The cache path comes from ``--cache`` or ``MV_CACHE``; identical
invocations (including ``--seed``) produce byte-identical output.
"""

from __future__ import annotations

import argparse
import decimal
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .exactnum import FloatContext, PiMonomial, format_rational
from .expansion import (
    ExpansionTable,
    FitConfig,
    bootstrap_expansion,
    exact_kappa_series,
    extract_kappa,
    fit_expansion,
    residual_report,
)
from .profiles import Profile, parse_profile
from .volumes import (
    MemoStore,
    a_value_fast,
    diagnostic_split,
    kappa_tilde_prime,
    minimal_strata_a,
    pair_reduction_residual,
    v_value,
    vol_value,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COMPUTE = 3
EXIT_VERIFY = 4


@dataclass
class RunConfig:
    command: str
    profile: str | None = None
    order: int = 2
    digits: int = 50
    gmax: int = 10
    g_range: tuple[int, int] = (12, 40)
    cache_path: str | None = None
    output_format: str = "text"
    seed: int = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def decimal_str(x, digits: int) -> str:
    """Round-half-even decimal rendering at ``digits`` significant digits."""
    with mpmath.workdps(digits + 10):
        s = mpmath.nstr(mpmath.mpf(x), digits + 5, strip_zeros=False)
    ctx = decimal.Context(prec=digits, rounding=decimal.ROUND_HALF_EVEN)
    return str(ctx.plus(decimal.Decimal(s)))


def _stability(ctx: FloatContext, value_fn) -> tuple[mpmath.mpf, int]:
    lo = value_fn(ctx)
    hi = value_fn(ctx.doubled())
    return hi, ctx.stable_digits(lo, hi)


def _render_monomial_block(name: str, mono: PiMonomial, ctx: FloatContext) -> dict:
    value, stable = _stability(ctx, lambda c: c.eval_pi_monomial(mono))
    return {
        "name": name,
        "pi_power": 2 * mono.pi_exp,
        "rational": format_rational(mono.coeff),
        "decimal": decimal_str(value, ctx.digits),
        "stable_digits": stable,
    }


def _emit(cfg: RunConfig, payload: dict, text_lines: list[str]) -> None:
    if cfg.output_format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif cfg.output_format == "csv" and "csv" in payload:
        sys.stdout.write(payload["csv"])
    else:
        for line in text_lines:
            print(line)


# ---------------------------------------------------------------------------
# subcommands


def cmd_volume(cfg: RunConfig, store: MemoStore) -> int:
    mu = parse_profile(cfg.profile)
    ctx = FloatContext(cfg.digits)
    v = v_value(mu, store)
    vol = vol_value(mu, store)
    payload = {
        "profile": list(mu.entries),
        "n": mu.n,
        "size": mu.size,
        "genus": mu.genus,
        "admissible": mu.is_admissible,
        "v": _render_monomial_block("v", v, ctx),
        "vol": _render_monomial_block("Vol", vol, ctx),
    }
    lines = [f"profile mu = ({mu})   n = {mu.n}   |mu| = {mu.size}"]
    if not mu.is_admissible:
        lines.append("warning: non-admissible profile (genus is not an integer); v = 0")
        lines.append("v(mu)   = 0")
        lines.append("Vol(mu) = 0")
    else:
        lines.append(f"genus   = {mu.genus}")
        lines.append(
            f"v(mu)   = {v}   ~ {payload['v']['decimal']}"
        )
        lines.append(
            f"Vol(mu) = {vol}   ~ {payload['vol']['decimal']}"
        )
    _emit(cfg, payload, lines)
    return EXIT_OK


def cmd_minimal(cfg: RunConfig, store: MemoStore) -> int:
    ctx = FloatContext(cfg.digits)
    values = minimal_strata_a(cfg.gmax, store)
    rows = []
    show = min(cfg.digits, 12)
    for g, a in enumerate(values, start=1):
        mono = PiMonomial(Fraction(2 * 4**g, _factorial(2 * g - 1)) * a, g)
        dec = decimal_str(ctx.eval_pi_monomial(mono), show)
        rows.append(
            {
                "g": g,
                "a": format_rational(a),
                "v": {"rational": format_rational(mono.coeff), "pi_power": 2 * g},
                "v_decimal": dec,
            }
        )
    lines = [f"{'g':>4}  {'a(2g-1)':<28} {'v(2g-1)':>16}"]
    for row in rows:
        lines.append(f"{row['g']:>4}  {row['a']:<28} {row['v_decimal']:>16}")
    csv_lines = ["g,a,v_decimal"] + [
        f"{row['g']},{row['a']},{row['v_decimal']}" for row in rows
    ]
    _emit(cfg, {"gmax": cfg.gmax, "rows": rows, "csv": "\n".join(csv_lines) + "\n"}, lines)
    return EXIT_OK


def _factorial(n: int) -> int:
    import math

    return math.factorial(n)


def _table_lines(table: ExpansionTable, ctx: FloatContext) -> list[str]:
    lines = [f"{'k':>2} {'l':>2}  {'exact':<28} {'numeric':<24} provenance"]
    for (k, l), rec in table.sorted_items():
        exact = str(rec.exact) if rec.exact is not None else "-"
        num = decimal_str(rec.numeric, min(ctx.digits, 12))
        extra = ""
        if rec.uncertainty is not None:
            extra = f"  +- {mpmath.nstr(rec.uncertainty, 3)}"
        lines.append(f"{k:>2} {l:>2}  {exact:<28} {num:<24} {rec.provenance}{extra}")
    return lines


def cmd_coeffs(cfg: RunConfig, store: MemoStore) -> int:
    ctx = FloatContext(cfg.digits)
    if cfg.order <= 2:
        kappas = exact_kappa_series(cfg.order)
    else:
        kappas = extract_kappa(cfg.order, 30, max(31, cfg.order + 6), ctx, store)
    table = bootstrap_expansion(cfg.order, kappas, ctx, store)
    payload = table.to_json_dict(ctx)
    payload["csv"] = table.to_csv(ctx)
    lines = [f"expansion coefficients through total degree {cfg.order} (constructive)"]
    lines += _table_lines(table, ctx)
    _emit(cfg, payload, lines)
    return EXIT_OK


def cmd_fit(cfg: RunConfig, store: MemoStore) -> int:
    ctx = FloatContext(cfg.digits)
    lo, hi = cfg.g_range
    fit_cfg = FitConfig(
        g_min=lo, g_max=hi, digits=cfg.digits, seed=cfg.seed
    )
    table = fit_expansion(cfg.order, fit_cfg, store, ctx)
    table.report["residuals"] = residual_report(cfg.order, table, fit_cfg, store, ctx)
    # cross-validate against the constructive table
    kappas = (
        exact_kappa_series(cfg.order)
        if cfg.order <= 2
        else extract_kappa(cfg.order, 30, max(31, cfg.order + 6), ctx, store)
    )
    boot = bootstrap_expansion(cfg.order, kappas, ctx, store)
    deltas = {}
    with ctx.workdps():
        for kl, rec in table.entries.items():
            brec = boot.record(*kl)
            deltas[f"{kl[0]},{kl[1]}"] = float(
                mpmath.mpf(rec.numeric) - mpmath.mpf(brec.numeric)
            )
    payload = table.to_json_dict(ctx)
    payload["cross_validation"] = deltas
    payload["fit_report"] = {
        k: v for k, v in table.report.items() if k != "residuals"
    }
    payload["csv"] = table.to_csv(ctx)
    lines = [
        f"independent fit through total degree {cfg.order} "
        f"(samples g in [{lo},{hi}], pad {fit_cfg.pad})"
    ]
    lines += _table_lines(table, ctx)
    lines.append("cross-validation deltas vs constructive table:")
    for key, d in sorted(deltas.items()):
        lines.append(f"  c({key}): {d:+.3e}")
    slope = table.report["residuals"].get("decay_slope")
    if slope is not None:
        lines.append(f"residual decay slope: {slope:.2f}")
    _emit(cfg, payload, lines)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, store: MemoStore) -> int:
    from .checks import run_all

    results = run_all(store=store, digits=cfg.digits, seed=cfg.seed)
    payload = {
        "checks": [
            {
                "name": r.name,
                "passed": r.passed,
                "detail": r.detail,
                "seconds": round(r.seconds, 3),
            }
            for r in results
        ]
    }
    lines = []
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        if not r.passed:
            failed += 1
        lines.append(f"[{status}] {r.name:<26} {r.seconds:7.2f}s  {r.detail}")
    lines.append(
        f"{len(results) - failed}/{len(results)} checks passed"
        + (f", {failed} FAILED" if failed else "")
    )
    _emit(cfg, payload, lines)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_diagnose(cfg: RunConfig, store: MemoStore) -> int:
    mu = parse_profile(cfg.profile)
    if mu.n < 2:
        print("diagnose needs a profile of length at least two", file=sys.stderr)
        return EXIT_USAGE
    ctx = FloatContext(cfg.digits)
    m_max = min(mu.entries[0], mu.entries[1], 6)
    split = diagnostic_split(mu, m_max, store)
    a = a_value_fast(mu, store)
    payload = {
        "profile": list(mu.entries),
        "a": format_rational(a),
        "A_m": {str(m): format_rational(v) for m, v in sorted(split.by_m.items())},
        "A_ml": {
            f"{m},{l}": format_rational(v)
            for (m, l), v in sorted(split.by_ml.items())
        },
        "A_mlD": {
            f"{m},{l},{D}": format_rational(v)
            for (m, l, D), v in sorted(split.by_mld.items())
        },
        "barred": {
            str(m): format_rational(v) for m, v in sorted(split.barred.items())
        },
    }
    lines = [f"block-sum split for ({mu}),  a = {format_rational(a)}"]
    for m, v in sorted(split.by_m.items()):
        lines.append(f"  A_{m} = {format_rational(v)}")
    for (m, l), v in sorted(split.by_ml.items()):
        lines.append(f"  A_{m}^{l} = {format_rational(v)}")
    for m, v in sorted(split.barred.items()):
        lines.append(f"  barred A_{m} = {format_rational(v)}")
    # residual decay of the one-step reduction on the equal-pair family
    kt1 = kappa_tilde_prime(1, store)
    pts = []
    with ctx.workdps():
        for k in range(10, 29):
            res = pair_reduction_residual(k, store, kt1)
            pts.append((k, float(abs(ctx.eval_pi_monomial(res)))))
    from .expansion import loglog_slope

    slope = loglog_slope(pts)
    payload["reduction_residual_slope"] = slope
    lines.append(f"one-step reduction residual slope on (k,k), k=10..28: {slope:.2f}")
    _emit(cfg, payload, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> _Parser:
    p = _Parser(
        prog="mv",
        description="Exact Masur-Veech volumes and their large-genus expansion",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, profile_positional=False):
        sp.add_argument("--digits", type=int, default=50)
        sp.add_argument("--cache", default=None, help="cache file (or MV_CACHE)")
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
        sp.add_argument("--seed", type=int, default=0)
        if profile_positional:
            sp.add_argument("profile", nargs="?", default=None)
            sp.add_argument("--profile", dest="profile_opt", default=None)

    sp = sub.add_parser("volume", help="exact v and Vol of one profile")
    common(sp, profile_positional=True)

    sp = sub.add_parser("minimal", help="table of the one-singularity family")
    common(sp)
    sp.add_argument("--gmax", type=int, default=10)

    sp = sub.add_parser("coeffs", help="constructive expansion table")
    common(sp)
    sp.add_argument("--order", "-r", type=int, default=2)

    sp = sub.add_parser("fit", help="independent least-squares table")
    common(sp)
    sp.add_argument("--order", "-r", type=int, default=2)
    sp.add_argument("--g-range", default="12:40", help="A:B genus range")

    sp = sub.add_parser("verify", help="run the property suite")
    common(sp)

    sp = sub.add_parser("diagnose", help="block-sum splits and residual decay")
    common(sp, profile_positional=True)

    return p


def _run_config(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    cfg.digits = args.digits
    cfg.output_format = args.format
    cfg.seed = args.seed
    cfg.cache_path = args.cache or os.environ.get("MV_CACHE")
    if hasattr(args, "profile"):
        cfg.profile = args.profile or getattr(args, "profile_opt", None)
    if hasattr(args, "order"):
        cfg.order = args.order
    if hasattr(args, "gmax"):
        cfg.gmax = args.gmax
    if hasattr(args, "g_range"):
        try:
            lo, hi = args.g_range.split(":")
            cfg.g_range = (int(lo), int(hi))
        except ValueError:
            raise UsageError(f"malformed --g-range {args.g_range!r}, expected A:B")
    return cfg


class UsageError(ValueError):
    pass


COMMANDS = {
    "volume": cmd_volume,
    "minimal": cmd_minimal,
    "coeffs": cmd_coeffs,
    "fit": cmd_fit,
    "verify": cmd_verify,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _run_config(args)
    except UsageError as exc:
        print(f"mv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.command in ("volume", "diagnose") and not cfg.profile:
        print("mv: error: a profile is required (positional or --profile)", file=sys.stderr)
        return EXIT_USAGE

    store = MemoStore()
    if cfg.cache_path and os.path.exists(cfg.cache_path):
        try:
            store.load(cfg.cache_path)
        except Exception as exc:
            print(f"mv: error: failed to load cache: {exc}", file=sys.stderr)
            return EXIT_COMPUTE

    if cfg.command in ("volume", "diagnose"):
        try:
            parse_profile(cfg.profile)
        except ValueError as exc:
            print(f"mv: error: {exc}", file=sys.stderr)
            return EXIT_USAGE

    try:
        code = COMMANDS[cfg.command](cfg, store)
    except (ValueError, RuntimeError, ZeroDivisionError) as exc:
        print(f"mv: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE

    if cfg.cache_path and store.dirty:
        try:
            store.save(cfg.cache_path)
        except OSError as exc:
            print(f"mv: warning: could not write cache: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

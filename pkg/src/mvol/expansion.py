"""Large-genus expansion of the reduced volumes.

Writing ``P = size - 1 = 2g - 3 + n``, the reduced volumes admit an
asymptotic expansion ``v = sum c_{k,l} / (g^k (P)_l)`` valid on profiles
whose entries are all large.  This module computes the coefficient table
three independent ways and cross-checks them:

* :func:`extract_kappa` fits the one-singularity volumes ``v(2g-1)`` by a
  polynomial in ``1/g`` (the boundary data ``kappa_i``);
* :func:`bootstrap_expansion` builds the table constructively, degree by
  degree, from the one-step reduction estimate
  ``v(mu) - v(mu0) = sum_i kt_i * v(mu_i) / (P)_{2i} + small`` using the
  exact correction constants ``kt_i`` and the Pochhammer-basis operators;
* :func:`fit_expansion` solves a weighted least-squares problem over exact
  volumes of sample families, with no input from the bootstrap.

The first few exact values the pipeline reproduces (and the test-suite
verifies against extraction to many digits):

    c00 = 4,  c01 = -2 pi^2/3,  c10 = c20 = c11 = 0,  c02 = pi^4/18,
    kappa = (4, -pi^2/3, (-24 pi^2 + pi^4)/72, ...)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Sequence

import mpmath

from .exactnum import (
    FloatContext,
    PiPoly,
    TruncatedSeries,
    format_rational,
)
from .pochhammer import (
    PochSum,
    _coeff_add,
    _coeff_is_zero,
    _coeff_numeric,
    _coeff_scale,
    _is_exact,
    delta_inv,
    shift_expand,
)
from .profiles import Profile
from .volumes import MemoStore, kappa_tilde_prime, v_value


class ExtractionUnstable(RuntimeError):
    """The windowed fits of the kappa series did not agree."""


class FitRankError(RuntimeError):
    """The fit samples cannot determine the requested coefficients."""


# ---------------------------------------------------------------------------
# kappa series for the one-singularity boundary


@dataclass
class KappaValue:
    exact: PiPoly | None
    numeric: mpmath.mpf
    stability_digits: int


@dataclass
class KappaSeries:
    order: int
    values: list[KappaValue]

    def coefficient(self, i: int):
        """Exact coefficient when attached, else the certified numeric."""
        v = self.values[i]
        return v.exact if v.exact is not None else v.numeric


def exact_kappa_poly(i: int) -> PiPoly | None:
    """Hand-derived exact boundary coefficients, attached for ``i <= 2``.

    ``kappa2 = (-24 pi^2 + pi^4)/72`` is what the engine's own
    one-singularity volumes converge to (the extraction confirms it to many
    digits); higher coefficients are carried numerically only.
    """
    if i == 0:
        return PiPoly.from_rational(4)
    if i == 1:
        return PiPoly({1: Fraction(-1, 3)})
    if i == 2:
        return PiPoly({1: Fraction(-24, 72), 2: Fraction(1, 72)})
    return None


def _numeric_v(mu: Profile, store: MemoStore, ctx: FloatContext) -> mpmath.mpf:
    return ctx.eval_pi_monomial(v_value(mu, store))


def _solve_kappa_window(
    gs: Sequence[int], vals: Sequence[mpmath.mpf], r: int
) -> list[mpmath.mpf]:
    A = mpmath.matrix(len(gs), r + 1)
    b = mpmath.matrix(len(gs), 1)
    for row, g in enumerate(gs):
        x = mpmath.mpf(1) / g
        p = mpmath.mpf(1)
        for i in range(r + 1):
            A[row, i] = p
            p *= x
        b[row] = vals[row]
    sol, _ = mpmath.qr_solve(A, b)
    return [sol[i] for i in range(r + 1)]


def extract_kappa(
    r: int,
    g0: int,
    count: int,
    ctx: FloatContext,
    store: MemoStore | None = None,
) -> KappaSeries:
    """Fit ``v(2g-1) ~ sum kappa_i / g^i`` on windows of consecutive genera.

    Solves the least-squares system on two shifted windows and once at
    doubled precision; each coefficient reports the number of digits on
    which all three runs agree.  Raises :class:`ExtractionUnstable` when
    even the constant term is stable to fewer than 4 digits.
    """
    if count < r + 1:
        raise ValueError("need at least r+1 sample genera")
    if 2 * g0 - 3 < 1:
        raise ValueError("g0 too small")
    if store is None:
        store = MemoStore()
    shift = max(2, count // 5)
    window = count - shift
    if window < r + 1:
        raise ValueError("window too short after shifting; increase count")
    gs = list(range(g0, g0 + count))
    ctx2 = ctx.doubled()
    with ctx2.workdps():
        vals2 = [_numeric_v(Profile((2 * g - 1,)), store, ctx2) for g in gs]
    with ctx.workdps():
        vals = [_numeric_v(Profile((2 * g - 1,)), store, ctx) for g in gs]
        sol_a = _solve_kappa_window(gs[:window], vals[:window], r)
        sol_b = _solve_kappa_window(gs[shift:], vals[shift:], r)
    with ctx2.workdps():
        sol_hi = _solve_kappa_window(gs[:window], vals2[:window], r)

    values: list[KappaValue] = []
    for i in range(r + 1):
        digits = min(
            ctx.stable_digits(sol_a[i], sol_b[i]),
            ctx.stable_digits(sol_a[i], sol_hi[i]),
        )
        values.append(
            KappaValue(
                exact=exact_kappa_poly(i),
                numeric=sol_hi[i],
                stability_digits=digits,
            )
        )
    if values[0].stability_digits < 4:
        raise ExtractionUnstable(
            f"constant term stable to only {values[0].stability_digits} digits"
        )
    return KappaSeries(order=r, values=values)


def exact_kappa_series(r: int) -> KappaSeries:
    """The kappa series with only the hand-derived exact entries (r <= 2)."""
    if r > 2:
        raise ValueError("exact kappa values are only attached through order 2")
    values = [
        KappaValue(exact=exact_kappa_poly(i), numeric=mpmath.mpf(0), stability_digits=0)
        for i in range(r + 1)
    ]
    for v in values:
        v.numeric = _coeff_numeric(v.exact)
    return KappaSeries(order=r, values=values)


# ---------------------------------------------------------------------------
# expansion tables


@dataclass
class CoeffRecord:
    exact: PiPoly | None
    numeric: mpmath.mpf
    provenance: str  # "bootstrap" | "fit" | "paper"
    uncertainty: mpmath.mpf | None = None


@dataclass
class ExpansionTable:
    order: int
    entries: dict[tuple[int, int], CoeffRecord]
    kappa: KappaSeries | None = None
    report: dict = field(default_factory=dict)

    def record(self, k: int, l: int) -> CoeffRecord:
        return self.entries[(k, l)]

    def restrict(self, order: int) -> "ExpansionTable":
        return ExpansionTable(
            order=order,
            entries={
                kl: rec for kl, rec in self.entries.items() if kl[0] + kl[1] <= order
            },
            kappa=self.kappa,
        )

    def evaluate(self, g, n, ctx: FloatContext) -> mpmath.mpf:
        """Numeric value of the truncated expansion at ``(g, n)``."""
        with ctx.workdps():
            P = mpmath.mpf(2) * g - 3 + n
            total = mpmath.mpf(0)
            for (k, l), rec in self.entries.items():
                c = (
                    ctx.eval_pi_poly(rec.exact)
                    if rec.exact is not None
                    else mpmath.mpf(rec.numeric)
                )
                denom = mpmath.mpf(g) ** k
                for j in range(l):
                    denom *= P - j
                total += c / denom
            return total

    def sorted_items(self):
        return sorted(self.entries.items(), key=lambda kv: (sum(kv[0]), kv[0][0]))

    # -- serialization --------------------------------------------------
    def to_json_dict(self, ctx: FloatContext) -> dict:
        with ctx.workdps():
            coefficients = []
            for (k, l), rec in self.sorted_items():
                coefficients.append(
                    {
                        "k": k,
                        "l": l,
                        "exact": rec.exact.to_pairs() if rec.exact is not None else None,
                        "numeric": mpmath.nstr(
                            +mpmath.mpf(rec.numeric), ctx.digits, strip_zeros=False
                        ),
                        "provenance": rec.provenance,
                        "uncertainty": (
                            mpmath.nstr(rec.uncertainty, 5)
                            if rec.uncertainty is not None
                            else None
                        ),
                    }
                )
            out = {"order": self.order, "coefficients": coefficients}
            if self.kappa is not None:
                out["kappa"] = [
                    {
                        "i": i,
                        "exact": v.exact.to_pairs() if v.exact is not None else None,
                        "numeric": mpmath.nstr(
                            +mpmath.mpf(v.numeric), ctx.digits, strip_zeros=False
                        ),
                        "stability_digits": v.stability_digits,
                    }
                    for i, v in enumerate(self.kappa.values)
                ]
            out["residuals"] = self.report.get("residuals", {})
        return out

    @staticmethod
    def from_json_dict(data: dict) -> "ExpansionTable":
        entries = {}
        for rec in data["coefficients"]:
            exact = (
                PiPoly.from_pairs(rec["exact"]) if rec["exact"] is not None else None
            )
            entries[(rec["k"], rec["l"])] = CoeffRecord(
                exact=exact,
                numeric=mpmath.mpf(rec["numeric"]),
                provenance=rec["provenance"],
                uncertainty=(
                    mpmath.mpf(rec["uncertainty"])
                    if rec.get("uncertainty") is not None
                    else None
                ),
            )
        kappa = None
        if "kappa" in data:
            values = [
                KappaValue(
                    exact=(
                        PiPoly.from_pairs(v["exact"]) if v["exact"] is not None else None
                    ),
                    numeric=mpmath.mpf(v["numeric"]),
                    stability_digits=v["stability_digits"],
                )
                for v in data["kappa"]
            ]
            kappa = KappaSeries(order=len(values) - 1, values=values)
        return ExpansionTable(
            order=data["order"],
            entries=entries,
            kappa=kappa,
            report={"residuals": data.get("residuals", {})},
        )

    def to_csv(self, ctx: FloatContext) -> str:
        lines = ["k,l,exact,numeric,provenance,uncertainty"]
        with ctx.workdps():
            for (k, l), rec in self.sorted_items():
                exact = str(rec.exact) if rec.exact is not None else ""
                unc = (
                    mpmath.nstr(rec.uncertainty, 5)
                    if rec.uncertainty is not None
                    else ""
                )
                num = mpmath.nstr(
                    +mpmath.mpf(rec.numeric), ctx.digits, strip_zeros=False
                )
                lines.append(f"{k},{l},{exact},{num},{rec.provenance},{unc}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# the constructive bootstrap


def _inv_poch_n1_series(l: int, order: int) -> TruncatedSeries:
    """Expansion of ``1/(2g-2)_l`` as a series in ``x = 1/g``.

    Each factor is ``1/(2g-2-j) = (x/2) * sum_p ((2+j)/2)^p x^p``.
    """
    s = TruncatedSeries.constant(1, order)
    for j in range(l):
        ratio = Fraction(2 + j, 2)
        coeffs = [Fraction(0)] + [Fraction(1, 2) * ratio**p for p in range(order)]
        s = s * TruncatedSeries(coeffs, order)
    return s


def n1_series(Q: PochSum, order: int) -> list:
    """Coefficients of the ``1/g`` expansion of ``Q(g, 1)`` through ``x^order``."""
    out = [PiPoly.zero() for _ in range(order + 1)]
    for (m, l), c in Q.terms.items():
        if m > order:
            continue
        base = _inv_poch_n1_series(l, order - m)
        for p, q in enumerate(base.coeffs):
            if q:
                out[m + p] = _coeff_add(out[m + p], _coeff_scale(c, q))
    return out


def bootstrap_expansion(
    r: int,
    kappas: KappaSeries,
    ctx: FloatContext | None = None,
    store: MemoStore | None = None,
) -> ExpansionTable:
    """Build the coefficient table constructively through total degree ``r``.

    Starting from the constant term, each round feeds the current table into
    the one-step reduction estimate (shift-expanded exactly in the
    ``P``-direction), inverts the difference operator, and fixes the pure
    ``g``-part by matching the one-singularity boundary series.  With exact
    kappa inputs for the matched orders the whole table stays exact.
    """
    if r < 1:
        raise ValueError("order must be at least 1")
    if kappas.order < r:
        raise ValueError(
            f"kappa series of order {kappas.order} is too short for r={r}"
        )
    if ctx is None:
        ctx = FloatContext()
    if store is None:
        store = MemoStore()

    kt = {
        i: kappa_tilde_prime(i, store).to_poly()
        for i in range(1, (r + 1) // 2 + 1)
    }

    with ctx.workdps():
        Q = PochSum({(0, 0): kappas.coefficient(0)}, 0)
        for rp in range(1, r + 1):
            bound = rp + 1
            D = PochSum.zero(bound)
            for i in range(1, (rp + 1) // 2 + 1):
                D = D + shift_expand(Q, i, bound).scale(kt[i])
            D = D.truncate(bound)
            Qt = delta_inv(D)
            series = n1_series(Qt, rp)
            fterms = {}
            for m in range(rp + 1):
                f = _coeff_add(kappas.coefficient(m), _coeff_scale(series[m], -1))
                if not _coeff_is_zero(f):
                    fterms[(m, 0)] = f
            Q = Qt + PochSum(fterms, rp)

        entries: dict[tuple[int, int], CoeffRecord] = {}
        for d in range(r + 1):
            for k in range(d + 1):
                l = d - k
                c = Q.terms.get((k, l), PiPoly.zero())
                exact = c if _is_exact(c) else None
                entries[(k, l)] = CoeffRecord(
                    exact=exact,
                    numeric=_coeff_numeric(c, ctx),
                    provenance="bootstrap",
                )
    return ExpansionTable(order=r, entries=entries, kappa=kappas)


# ---------------------------------------------------------------------------
# independent fit


@dataclass(frozen=True)
class FitConfig:
    """Sampling and solver policy for the independent fit.

    Families: ``minimal`` is the one-singularity family, ``pair`` the
    equal-pair family ``(k, k)``, ``triple`` the length-3 staircase
    ``(k,k,k)`` / ``(k,k,k+1)``.  All generated profiles have every entry at
    least ``min_entry`` (defaulting to the fit order) and ``n <= lambda_max
    * g``.  ``pad`` extra degrees are fitted beyond the requested order to
    absorb truncation error; ``weighting`` "order" whitens rows by
    ``g^(order+pad+1)``.
    """

    families: tuple[str, ...] = ("minimal", "pair", "triple")
    g_min: int = 12
    g_max: int = 40
    lambda_max: float = 1.0
    digits: int = 50
    weighting: str = "order"
    pad: int = 2
    min_entry: int | None = None
    seed: int = 0


def fit_samples(cfg: FitConfig, r: int) -> list[Profile]:
    """Deterministic sample profiles for the fit; all admissible."""
    min_entry = cfg.min_entry if cfg.min_entry is not None else max(r, 1)
    out: list[Profile] = []

    def admit(mu: Profile) -> bool:
        g = mu.genus
        if g is None or not (cfg.g_min <= g <= cfg.g_max):
            return False
        if mu.entries[0] < min_entry:
            return False
        return mu.n <= cfg.lambda_max * g

    if "minimal" in cfg.families:
        for g in range(cfg.g_min, cfg.g_max + 1):
            mu = Profile((2 * g - 1,))
            if admit(mu):
                out.append(mu)
    if "pair" in cfg.families:
        for g in range(cfg.g_min, cfg.g_max + 1):
            mu = Profile((g, g))
            if admit(mu):
                out.append(mu)
    if "triple" in cfg.families:
        for k in range(2, cfg.g_max + 2):
            mu = Profile((k, k, k)) if k % 2 else Profile((k, k, k + 1))
            if admit(mu):
                out.append(mu)
    return out


def _expansion_keys(order: int) -> list[tuple[int, int]]:
    return sorted(
        [(k, d - k) for d in range(order + 1) for k in range(d + 1)],
        key=lambda kl: (kl[0] + kl[1], kl[0]),
    )


def fit_expansion(
    r: int,
    cfg: FitConfig,
    store: MemoStore | None = None,
    ctx: FloatContext | None = None,
) -> ExpansionTable:
    """Least-squares table from exact sample volumes, independent of the
    bootstrap.

    Fits through degree ``r + cfg.pad`` with column scaling, keeps the
    entries of degree at most ``r``, and attaches one-sigma uncertainties
    from the weighted residual.  Raises :class:`FitRankError` when the
    samples cannot separate the columns (at least two distinct lengths per
    genus are needed).
    """
    if store is None:
        store = MemoStore()
    if ctx is None:
        ctx = FloatContext(cfg.digits)
    rfit = r + cfg.pad
    keys = _expansion_keys(rfit)
    samples = fit_samples(cfg, r)
    if len(samples) < len(keys) + 2:
        raise FitRankError(
            f"{len(samples)} samples cannot determine {len(keys)} coefficients"
        )
    by_g: dict[int, set[int]] = {}
    for mu in samples:
        by_g.setdefault(mu.genus, set()).add(mu.n)
    if sum(1 for ns in by_g.values() if len(ns) >= 2) < 2:
        raise FitRankError("samples must span >= 2 distinct n values per genus")

    values = [v_value(mu, store) for mu in samples]

    with ctx.workdps(2):
        rows = len(samples)
        cols = len(keys)
        A = mpmath.matrix(rows, cols)
        b = mpmath.matrix(rows, 1)
        for row, (mu, vm) in enumerate(zip(samples, values)):
            g, n = mu.genus, mu.n
            P = mpmath.mpf(2) * g - 3 + n
            w = mpmath.mpf(g) ** (rfit + 1) if cfg.weighting == "order" else mpmath.mpf(1)
            for col, (k, l) in enumerate(keys):
                denom = mpmath.mpf(g) ** k
                for j in range(l):
                    denom *= P - j
                A[row, col] = w / denom
            b[row] = w * ctx.eval_pi_monomial(vm)
        scales = []
        for col in range(cols):
            s = mpmath.sqrt(sum(A[row, col] ** 2 for row in range(rows)))
            if s == 0:
                raise FitRankError(f"zero design column for {keys[col]}")
            scales.append(s)
            for row in range(rows):
                A[row, col] /= s
        try:
            sol, _ = mpmath.qr_solve(A, b)
        except ValueError as exc:
            raise FitRankError(f"design matrix is numerically singular: {exc}")
        resid = A * mpmath.matrix([[sol[i]] for i in range(cols)]) - b
        rss = sum(resid[i] ** 2 for i in range(rows))
        dof = max(rows - cols, 1)
        sigma2 = rss / dof
        # one-sigma marginals from the scaled normal matrix
        ata = A.T * A
        try:
            ata_inv = ata**-1
        except ZeroDivisionError:
            raise FitRankError("normal matrix is singular")
        coeffs = {}
        sigmas = {}
        for i, kl in enumerate(keys):
            coeffs[kl] = sol[i] / scales[i]
            sigmas[kl] = mpmath.sqrt(abs(sigma2 * ata_inv[i, i])) / scales[i]
        wrms = mpmath.sqrt(rss / rows)

        entries = {
            kl: CoeffRecord(
                exact=None,
                numeric=coeffs[kl],
                provenance="fit",
                uncertainty=sigmas[kl],
            )
            for kl in keys
            if kl[0] + kl[1] <= r
        }
    table = ExpansionTable(order=r, entries=entries)
    table.report = {
        "samples": len(samples),
        "columns": cols,
        "pad": cfg.pad,
        "weighted_rms": float(wrms),
        "full_fit": {f"{k},{l}": float(coeffs[(k, l)]) for (k, l) in keys},
    }
    return table


# ---------------------------------------------------------------------------
# residual reporting


def residual_report(
    r: int,
    table: ExpansionTable,
    cfg: FitConfig,
    store: MemoStore | None = None,
    ctx: FloatContext | None = None,
    samples: Iterable[Profile] | None = None,
) -> dict:
    """Residuals ``v(mu) - table(g, n)`` over the sample set.

    Reports the maximum of ``|residual| * g^r`` per genus and the log-log
    slope of the per-genus maximum residual against the genus.
    """
    if store is None:
        store = MemoStore()
    if ctx is None:
        ctx = FloatContext(cfg.digits)
    if samples is None:
        samples = fit_samples(cfg, r)
    samples = list(samples)
    per_genus: dict[int, mpmath.mpf] = {}
    with ctx.workdps():
        for mu in samples:
            vm = ctx.eval_pi_monomial(v_value(mu, store))
            pred = table.evaluate(mu.genus, mu.n, ctx)
            res = abs(vm - pred)
            g = mu.genus
            if g not in per_genus or res > per_genus[g]:
                per_genus[g] = res
        slope = None
        gs = sorted(g for g in per_genus if per_genus[g] > 0)
        if len(gs) >= 3:
            xs = [mpmath.log(g) for g in gs]
            ys = [mpmath.log(per_genus[g]) for g in gs]
            nn = len(xs)
            sx = sum(xs); sy = sum(ys)
            sxx = sum(x * x for x in xs); sxy = sum(x * y for x, y in zip(xs, ys))
            slope = float((nn * sxy - sx * sy) / (nn * sxx - sx * sx))
    return {
        "order": r,
        "samples": len(samples),
        "per_genus_max": {str(g): float(v) for g, v in sorted(per_genus.items())},
        "scaled_max": {
            str(g): float(v * mpmath.mpf(g) ** r) for g, v in sorted(per_genus.items())
        },
        "decay_slope": slope,
    }


def loglog_slope(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    import math as _m

    xs = [_m.log(x) for x, _ in points]
    ys = [_m.log(y) for _, y in points]
    n = len(xs)
    sx = sum(xs); sy = sum(ys)
    sxx = sum(x * x for x in xs); sxy = sum(x * y for x, y in zip(xs, ys))
    return (n * sxy - sx * sy) / (n * sxx - sx * sx)

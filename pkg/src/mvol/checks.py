"""Property suite behind ``mv verify``.

Each check exercises one published invariant of the engine and returns a
:class:`CheckResult`; the CLI prints one line per check and exits non-zero
if any fails.  The heavyweight checks share a single memo store (and profit
from a warm cache file).
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable

import mpmath

from .exactnum import FloatContext, PiPoly, TruncatedSeries, sine_quotient_series
from .expansion import (
    FitConfig,
    bootstrap_expansion,
    exact_kappa_series,
    extract_kappa,
    fit_expansion,
    loglog_slope,
    n1_series,
)
from .pochhammer import (
    PochSum,
    delta,
    delta_inv,
    eval_poch,
    falling_factorial,
    reduce_p,
    shift_expand,
)
from .profiles import (
    Profile,
    composition_count,
    compositions,
    concatenate,
    ordered_set_partitions,
)
from .volumes import (
    MemoStore,
    a_value,
    a_value_fast,
    diagnostic_split,
    kappa_tilde_prime,
    minimal_strata_a,
    pair_reduction_residual,
    per_m_values,
    v_value,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _admissible_profiles(max_size: int, max_n: int):
    """All admissible profiles with the given size and length bounds."""

    def partitions(total, max_part, parts_left):
        if total == 0:
            yield ()
            return
        if parts_left == 0:
            return
        for first in range(min(total, max_part), 0, -1):
            for rest in partitions(total - first, first, parts_left - 1):
                yield (first,) + rest

    out = []
    for size in range(1, max_size + 1):
        for p in partitions(size, size, max_n):
            mu = Profile(p)
            if mu.is_admissible:
                out.append(mu)
    return out


# ---------------------------------------------------------------------------
# individual checks


def check_series_kernel(env) -> tuple[bool, str]:
    S = sine_quotient_series(40)
    ok = (
        S.coefficient(0) == 1
        and S.coefficient(2) == Fraction(1, 24)
        and S.coefficient(4) == Fraction(7, 5760)
        and S.coefficient(6) == Fraction(31, 967680)
    )
    for i in range(1, 41, 2):
        ok = ok and S.coefficient(i) == 0
    for i in range(2, 41, 2):
        ok = ok and S.coefficient(i) > 0
    # multinomial spot check: [t^4] of (1 + t^2/24 + 3 t^4/640)^4 = 7/240
    base = TruncatedSeries([1, 0, Fraction(1, 24), 0, Fraction(3, 640)], 4)
    ok = ok and base.pow(4).coefficient(4) == Fraction(7, 240)
    return ok, "kernel coefficients, parity, positivity, power identity"


def check_pipoly_ring(env) -> tuple[bool, str]:
    rng = env.rng

    def rand_poly():
        return PiPoly(
            {
                rng.randrange(0, 4): Fraction(rng.randrange(-20, 21), rng.randrange(1, 9))
                for _ in range(rng.randrange(0, 4))
            }
        )

    for _ in range(200):
        a, b, c = rand_poly(), rand_poly(), rand_poly()
        if a * b != b * a:
            return False, "commutativity failed"
        if (a * b) * c != a * (b * c):
            return False, "associativity failed"
        if a * (b + c) != a * b + a * c:
            return False, "distributivity failed"
    return True, "200 randomized exact ring identities"


def check_float_stability(env) -> tuple[bool, str]:
    ctx = env.ctx
    p = PiPoly({0: Fraction(-27, 72), 1: Fraction(0), 2: Fraction(1, 72)})
    lo = ctx.eval_pi_poly(p)
    hi = ctx.doubled().eval_pi_poly(p)
    with mpmath.workdps(2 * ctx.digits + 10):
        rel = abs(mpmath.mpf(lo) - mpmath.mpf(hi)) / abs(mpmath.mpf(hi))
        bound = mpmath.mpf(10) ** (5 - ctx.digits)
    return rel < bound, f"doubled-precision relative drift {mpmath.nstr(rel, 3)}"


def check_enumerators(env) -> tuple[bool, str]:
    for k in range(1, 9):
        for m in range(1, k + 1):
            seen = list(compositions(k, m))
            if len(seen) != composition_count(k, m):
                return False, f"composition count C({k},{m})"
            if len(set(seen)) != len(seen):
                return False, "duplicate compositions"
            if any(sum(c) != k or min(c) < 1 for c in seen):
                return False, "invalid composition"
    for ne in range(0, 5):
        elements = tuple(range(ne))
        for m in range(1, 5):
            seen = list(ordered_set_partitions(elements, m))
            if len(seen) != m**ne:
                return False, f"partition count {m}^{ne}"
            for blocks in seen:
                flat = [x for b in blocks for x in b]
                if sorted(flat) != list(elements):
                    return False, "blocks fail to cover"
    return True, "composition and ordered-partition enumeration contracts"


def check_factorial_inequality(env) -> tuple[bool, str]:
    f = [factorial(i) for i in range(40)]
    for a1 in range(13):
        for a2 in range(13):
            for c1 in range(13):
                for c2 in range(13):
                    lhs = f[a1 + c1] * f[a2 + c2]
                    rhs = f[a1 + a2 + max(c1, c2)] * f[min(c1, c2)]
                    if lhs > rhs:
                        return False, f"fails at {(a1, a2, c1, c2)}"
    return True, "factorial inequality on the 13^4 grid"


def check_minimal_values(env) -> tuple[bool, str]:
    t0 = time.time()
    vals = minimal_strata_a(50, env.store)
    took = time.time() - t0
    ok = (
        vals[0] == Fraction(1, 24)
        and vals[1] == Fraction(3, 640)
        and vals[2] == Fraction(1525, 580608)
        and all(v > 0 for v in vals)
        and took < 10
    )
    return ok, f"a(1..99 odd) exact, positive, {took:.2f}s"


def check_multi_values(env) -> tuple[bool, str]:
    store = env.store
    ok = a_value(Profile((1, 1)), store) == Fraction(1, 12)
    ok = ok and a_value(Profile((2,)), store) == 0
    ok = ok and a_value(Profile((3, 3)), store) == Fraction(153, 8960)
    v33 = v_value(Profile((3, 3)), store)
    ok = ok and v33.coeff == Fraction(17, 5600) and v33.pi_exp == 3
    # cross-check against the classical genus-2 volumes
    ok = ok and v_value(Profile((3,)), store).coeff == Fraction(1, 40)
    ok = ok and a_value(Profile((2, 2)), store) == Fraction(1, 45)
    return ok, "hand-enumerated exact values"


def check_add_simple_zero(env) -> tuple[bool, str]:
    store = env.store
    for entries in [(1,), (3,), (5,), (3, 3), (1, 1), (2, 2), (1, 1, 3)]:
        mu = Profile(entries)
        ext = concatenate(mu, (1,))
        if v_value(mu, store) != v_value(ext, store):
            return False, f"v changed when adding an entry 1 to {mu}"
    return True, "v(mu + (1)) = v(mu) exactly on the sample set"


def check_order_independence(env) -> tuple[bool, str]:
    store = env.store
    count = 0
    for mu in _admissible_profiles(12, 4):
        if mu.n < 2:
            continue
        small = a_value(mu, store)
        large = a_value(mu, store, pair="largest")
        if small != large:
            return False, f"pair choice changed a({mu})"
        count += 1
    return True, f"smallest vs largest pair equal on {count} profiles"


def check_fast_equals_direct(env) -> tuple[bool, str]:
    s_direct = MemoStore()
    s_fast = MemoStore()
    count = 0
    for mu in _admissible_profiles(12, 4):
        if a_value(mu, s_direct) != a_value_fast(mu, s_fast):
            return False, f"paths disagree on {mu}"
        count += 1
    return True, f"fast path equals direct enumeration on {count} profiles"


def check_positivity(env) -> tuple[bool, str]:
    store = env.store
    for mu in _admissible_profiles(12, 4):
        g = mu.genus
        if g is not None and g >= 2:
            if v_value(mu, store).coeff <= 0:
                return False, f"v({mu}) not positive"
    return True, "v > 0 for all sampled profiles of genus >= 2"


def check_split_identities(env) -> tuple[bool, str]:
    store = env.store
    for entries in [(3, 3), (2, 2), (3, 3, 3), (2, 3, 3), (2, 2, 1, 1)]:
        mu = Profile(entries)
        k1 = mu.entries[0]
        split = diagnostic_split(mu, min(k1, 4), store)
        if split.recombined_a() != a_value_fast(mu, store):
            return False, f"recombination fails for {mu}"
        for m, am in split.by_m.items():
            if m == 1:
                continue
            total_l = sum(
                split.by_ml.get((m, l), Fraction(0)) for l in range(mu.n - 1)
            )
            if total_l != am:
                return False, f"sum over l of A_{m}^l != A_{m} for {mu}"
            for l in range(mu.n - 1):
                by_d = sum(
                    v for (mm, ll, D), v in split.by_mld.items() if (mm, ll) == (m, l)
                )
                if by_d != split.by_ml.get((m, l), Fraction(0)):
                    return False, f"sum over D fails for {mu} (m={m}, l={l})"
        if split.barred.get(1, Fraction(0)) != 0:
            return False, f"barred m=1 sum not zero for {mu}"
        if mu.n == 2 and any(vv != 0 for vv in split.barred.values()):
            return False, f"barred sums must vanish for length-2 {mu}"
        if mu.n >= 3:
            for m, am in split.by_m.items():
                if m == 1:
                    continue
                top = split.by_ml.get((m, mu.n - 2), Fraction(0))
                if am != m * top + split.barred.get(m, Fraction(0)):
                    return False, f"A_m = m A_m^(n-2) + barred fails for {mu}, m={m}"
    # A_1((3,3)) = a(5), A_2 = 1/2560, A_3 = 1/13824
    split33 = diagnostic_split(Profile((3, 3)), 3, store)
    ok = (
        split33.by_m[1] == Fraction(1525, 580608)
        and split33.by_m[2] == Fraction(1, 2560)
        and split33.by_m[3] == Fraction(1, 13824)
    )
    return ok, "split recombination, l/D refinements, barred identities"


def check_kappa_tilde(env) -> tuple[bool, str]:
    store = env.store
    k1 = kappa_tilde_prime(1, store)
    k2 = kappa_tilde_prime(2, store)
    ok = k1.coeff == Fraction(1, 6) and k1.pi_exp == 1
    ok = ok and k2.coeff == Fraction(91, 360) and k2.pi_exp == 2
    ok = ok and kappa_tilde_prime(3, store).pi_exp == 3
    return ok, "kt'_1 = pi^2/6, kt'_2 = 91 pi^4/360, pi-power structure"


def check_poch_operators(env) -> tuple[bool, str]:
    rng = env.rng

    def rand_sum(max_deg=6, lmin=0):
        terms = {}
        for _ in range(rng.randrange(1, 5)):
            m = rng.randrange(0, max_deg - lmin + 1)
            l = rng.randrange(lmin, max_deg - m + 1)
            terms[(m, l)] = PiPoly(
                {rng.randrange(0, 3): Fraction(rng.randrange(-9, 10), rng.randrange(1, 7))}
            )
        return PochSum(terms, max_deg)

    for _ in range(100):
        F = rand_sum()
        g = rng.randrange(5, 30)
        n = rng.randrange(1, 12)
        lhs = eval_poch(delta(F), g, n)
        rhs = eval_poch(F, g, n) - eval_poch(F, g, n - 1)
        if lhs != rhs:
            return False, "delta evaluation identity failed"
    for _ in range(100):
        F = rand_sum(lmin=2)
        if F.is_zero:
            continue
        if delta(delta_inv(F)).terms != F.terms:
            return False, "delta o delta_inv != id"
    for _ in range(100):
        L = rng.randrange(1, 7)
        poly = [Fraction(rng.randrange(-9, 10)) for _ in range(rng.randrange(1, L + 2))]
        ps = reduce_p(poly, L)
        g = rng.randrange(6, 40)
        n = rng.randrange(1, 10)
        P = 2 * g - 3 + n
        if P - L + 1 <= 0:
            continue
        direct = sum(c * P**j for j, c in enumerate(poly)) * Fraction(
            1, falling_factorial(P, L)
        )
        if eval_poch(ps, g, n).coefficient(0) != direct:
            return False, "reduce_p evaluation mismatch"
    return True, "delta, delta_inv, reduce_p exact at 100 random points each"


def check_shift_expand(env) -> tuple[bool, str]:
    # exact cases
    e1 = shift_expand(PochSum.basis(0, 0), 1, 2)
    ok = set(e1.terms) == {(0, 2)} and e1.coefficient(0, 2) == PiPoly.from_rational(1)
    e2 = shift_expand(PochSum.basis(0, 1), 1, 4)
    ok = ok and set(e2.terms) == {(0, 3), (0, 4)}
    e3 = shift_expand(PochSum.basis(1, 0), 1, 4)
    ok = ok and set(e3.terms) == {(1, 2), (2, 2)}
    if not ok:
        return False, "closed-form expansions wrong"
    # truncation decay: slope of the dropped tail against g
    for R in (3, 4):
        F = PochSum.basis(1, 0) + PochSum.basis(2, 0, Fraction(1, 3))
        exp = shift_expand(F, 1, R)
        pts = []
        for g in (100, 1000, 10000):
            n = 3
            P = Fraction(2 * g - 3 + n)
            target = Fraction(0)
            for (m, l), c in F.terms.items():
                q = Fraction(1, (g - 1) ** m * falling_factorial(P - 1 - 1, l))
                target += c.coefficient(0) * q
            target /= falling_factorial(P, 2)
            got = eval_poch(exp, g, n).coefficient(0)
            pts.append((g, abs(float(got - target)) + 1e-300))
        slope = loglog_slope(pts)
        if slope > -(R + 1) + 0.2:
            return False, f"tail decay slope {slope:.2f} too shallow for R={R}"
    return True, "exact forms and truncation tail decay for R in {3,4}"


def check_poch_rank(env) -> tuple[bool, str]:
    keys = [(m, l) for m in range(5) for l in range(5 - m)]
    points = [(5 + 3 * i, 1 + (2 * i) % 7) for i in range(20)]
    rows = []
    for g, n in points:
        P = 2 * g - 3 + n
        rows.append(
            [Fraction(1, g**m * falling_factorial(P, l)) for (m, l) in keys]
        )
    # exact Gaussian elimination
    rank = 0
    cols = len(keys)
    taken = [False] * len(rows)
    for c in range(cols):
        pivot = None
        for i, row in enumerate(rows):
            if not taken[i] and row[c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        taken[pivot] = True
        rank += 1
        prow = rows[pivot]
        for i, row in enumerate(rows):
            if i != pivot and row[c] != 0:
                f = row[c] / prow[c]
                rows[i] = [a - f * b for a, b in zip(row, prow)]
    return rank == cols, f"evaluation matrix rank {rank}/{cols}"


def check_kappa_extraction(env) -> tuple[bool, str]:
    ctx = FloatContext(50)
    ks = extract_kappa(6, 30, 31, ctx, env.store)
    with ctx.workdps():
        k0_err = abs(ks.values[0].numeric - 4)
        k1_true = -mpmath.pi**2 / 3
        k1_err = abs((ks.values[1].numeric - k1_true) / k1_true)
        k2_true = (-24 * mpmath.pi**2 + mpmath.pi**4) / 72
        k2_err = abs((ks.values[2].numeric - k2_true) / k2_true)
        ok = k0_err < mpmath.mpf("1e-6") and k1_err < mpmath.mpf("1e-3")
        ok = ok and k2_err < mpmath.mpf("1e-3")
    return ok, (
        f"kappa0 err {mpmath.nstr(k0_err, 2)}, kappa1 rel {mpmath.nstr(k1_err, 2)}, "
        f"kappa2 rel {mpmath.nstr(k2_err, 2)} (confirms exact kappa2)"
    )


def check_bootstrap(env) -> tuple[bool, str]:
    ctx = env.ctx
    store = env.store
    t1 = bootstrap_expansion(1, exact_kappa_series(1), ctx, store)
    ok = t1.record(0, 0).exact == PiPoly.from_rational(4)
    ok = ok and t1.record(0, 1).exact == PiPoly({1: Fraction(-2, 3)})
    ok = ok and t1.record(1, 0).exact == PiPoly.zero()
    t2 = bootstrap_expansion(2, exact_kappa_series(2), ctx, store)
    ok = ok and t2.record(0, 0).exact == PiPoly.from_rational(4)
    ok = ok and t2.record(0, 1).exact == PiPoly({1: Fraction(-2, 3)})
    ok = ok and t2.record(0, 2).exact == PiPoly({2: Fraction(1, 18)})
    ok = ok and all(t2.record(k, l).exact is not None for (k, l) in t2.entries)
    # nesting: the degree <= 1 part of t2 equals t1
    for kl, rec in t1.entries.items():
        if t2.record(*kl).exact != rec.exact:
            return False, f"nesting broken at {kl}"
    # n = 1 boundary: the 1/g series of the table reproduces kappa
    Q = PochSum(
        {kl: rec.exact for kl, rec in t2.entries.items() if rec.exact is not None and not rec.exact.is_zero},
        2,
    )
    ser = n1_series(Q, 2)
    for i in range(3):
        if ser[i] != exact_kappa_series(2).coefficient(i):
            return False, f"n=1 series mismatch at order {i}"
    return ok, "seed, exactness, nesting, boundary series"


def check_pair_residual_slope(env) -> tuple[bool, str]:
    store = env.store
    kt1 = kappa_tilde_prime(1, store)
    pts = []
    with env.ctx.workdps():
        for k in range(10, 41):
            r = pair_reduction_residual(k, store, kt1)
            val = abs(env.ctx.eval_pi_monomial(r))
            pts.append((k, float(val)))
    slope = loglog_slope(pts)
    return slope <= -3.5, f"reduction residual decay slope {slope:.2f} (<= -3.5)"


def check_block_sum_decay(env) -> tuple[bool, str]:
    store = env.store
    details = []
    for m in (2, 3):
        pts = []
        for k in range(10, 41):
            mu = Profile((k, k))
            sums = per_m_values(mu, store)
            ratio = sums[m - 1] / a_value_fast(mu, store)
            pts.append((2 * k, float(ratio)))
        slope = loglog_slope(pts)
        details.append(f"m={m}: {slope:.2f}")
        if slope > -(2 * m - 2) + 0.25:
            return False, f"A_{m}/a decays too slowly ({slope:.2f})"
    return True, "block-sum decay slopes " + ", ".join(details)


def check_fit_recovers(env) -> tuple[bool, str]:
    cfg = FitConfig(families=("minimal", "pair"), g_min=15, g_max=40, pad=1, digits=50)
    table = fit_expansion(2, cfg, env.store)
    with env.ctx.workdps():
        c01 = table.record(0, 1).numeric
        truth = -2 * mpmath.pi**2 / 3
        rel = abs((c01 - truth) / truth)
        ok = rel < mpmath.mpf("0.02")
    return ok, f"fitted c01 = {mpmath.nstr(c01, 8)} (rel err {mpmath.nstr(rel, 2)})"


def check_bootstrap_vs_fit(env) -> tuple[bool, str]:
    boot = bootstrap_expansion(2, exact_kappa_series(2), env.ctx, env.store)
    cfg = FitConfig(families=("minimal", "pair", "triple"), g_min=12, g_max=40, pad=2, digits=50)
    fit = fit_expansion(2, cfg, env.store)
    with env.ctx.workdps():
        for kl, frec in fit.entries.items():
            brec = boot.record(*kl)
            sigma = frec.uncertainty if frec.uncertainty else mpmath.mpf("1e-30")
            gap = abs(mpmath.mpf(frec.numeric) - mpmath.mpf(brec.numeric))
            if gap > 10 * sigma and gap > mpmath.mpf("0.5"):
                return False, (
                    f"c{kl}: bootstrap {mpmath.nstr(brec.numeric, 8)} vs "
                    f"fit {mpmath.nstr(frec.numeric, 8)} +- {mpmath.nstr(sigma, 3)}"
                )
    return True, "every degree <= 2 coefficient agrees across methods"


def check_cache_roundtrip(env) -> tuple[bool, str]:
    import os
    import tempfile

    store = MemoStore()
    minimal_strata_a(8, store)
    a_value_fast(Profile((3, 3)), store)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "cache.mvcache")
        store.save(path)
        fresh = MemoStore()
        n = fresh.load(path)
        if dict(fresh.items()) != dict(store.items()):
            return False, "cache contents differ after reload"
        fresh.save(path + ".2")
        if open(path).read() != open(path + ".2").read():
            return False, "cache files not byte-identical"
        before = fresh.hits
        a_value_fast(Profile((3, 3)), fresh)
        if fresh.hits <= before:
            return False, "warm lookup did not hit the cache"
    return True, f"{n} entries round-trip byte-identically"


@dataclass
class CheckEnv:
    store: MemoStore
    ctx: FloatContext
    rng: random.Random


ALL_CHECKS: list[tuple[str, Callable]] = [
    ("series-kernel", check_series_kernel),
    ("pi-poly-ring", check_pipoly_ring),
    ("float-stability", check_float_stability),
    ("enumerators", check_enumerators),
    ("factorial-inequality", check_factorial_inequality),
    ("minimal-values", check_minimal_values),
    ("multi-singularity-values", check_multi_values),
    ("add-simple-zero", check_add_simple_zero),
    ("order-independence", check_order_independence),
    ("fast-vs-direct", check_fast_equals_direct),
    ("positivity", check_positivity),
    ("split-identities", check_split_identities),
    ("correction-constants", check_kappa_tilde),
    ("poch-operators", check_poch_operators),
    ("poch-shift-expand", check_shift_expand),
    ("poch-rank", check_poch_rank),
    ("kappa-extraction", check_kappa_extraction),
    ("bootstrap-table", check_bootstrap),
    ("pair-residual-decay", check_pair_residual_slope),
    ("block-sum-decay", check_block_sum_decay),
    ("fit-recovers-c01", check_fit_recovers),
    ("bootstrap-vs-fit", check_bootstrap_vs_fit),
    ("cache-roundtrip", check_cache_roundtrip),
]


def run_all(
    store: MemoStore | None = None,
    digits: int = 50,
    seed: int = 0,
    names: list[str] | None = None,
) -> list[CheckResult]:
    env = CheckEnv(
        store=store if store is not None else MemoStore(),
        ctx=FloatContext(digits),
        rng=random.Random(seed),
    )
    results = []
    for name, fn in ALL_CHECKS:
        if names and name not in names:
            continue
        t0 = time.time()
        try:
            ok, detail = fn(env)
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, ok, detail, time.time() - t0))
    return results

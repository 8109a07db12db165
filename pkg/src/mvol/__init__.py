"""Exact Masur-Veech volumes of strata of holomorphic differentials and the
coefficients of their large-genus expansion."""

from .exactnum import (
    FloatContext,
    PiMonomial,
    PiPoly,
    Rational,
    TruncatedSeries,
    pi_poly_eval,
    series_mul,
    series_pow,
    sine_quotient_series,
)
from .expansion import (
    ExpansionTable,
    FitConfig,
    KappaSeries,
    bootstrap_expansion,
    exact_kappa_series,
    extract_kappa,
    fit_expansion,
    residual_report,
)
from .pochhammer import PochSum, delta, delta_inv, eval_poch, reduce_p, shift_expand
from .profiles import (
    Profile,
    canonicalize,
    compositions,
    concatenate,
    ordered_set_partitions,
    parse_profile,
    reduce_profile,
    sub_profile,
)
from .volumes import (
    MemoStore,
    a_value,
    a_value_fast,
    diagnostic_split,
    kappa_tilde_prime,
    minimal_strata_a,
    v_value,
    vol_value,
)

__version__ = "0.1.0"

import math

import numpy as np
import pytest

from quasiloc.errors import DivergenceError, DomainError
from quasiloc.ffunc import (DECAY_CONSTANT, FFunction, TailBound, cf_bounds, conv_constant,
                            conv_partial, f_norm, g_f, gf_decay_check, decay_log_rhs,
                            moment_and_tilde)

F3 = FFunction(3.0, False, 2)
FR = FFunction(3.0, True, 2)


def brute_sum(F, t, R):
    """Sum of F(|y|) over t <= |y| <= R on Z^2 by plain enumeration."""
    a = np.arange(-R, R + 1, dtype=float)
    r = np.hypot(a[:, None], a[None, :]).ravel()
    r = r[(r >= t - 1e-12) & (r <= R)]
    return math.fsum(F(r))


def test_decay_constant():
    assert DECAY_CONSTANT == pytest.approx(4 * math.pi * math.exp(math.sqrt(2)))


def test_f_norm_encloses_direct_sum_at_larger_cut():
    tb = f_norm(F3, 200)
    ref = brute_sum(F3, 0, 2000)
    assert tb.lower <= ref <= tb.upper
    assert f_norm(F3, 400).tail_upper < tb.tail_upper


def test_f_norm_weighted_any_exponent_is_finite():
    for s in (0.0, 0.5, 2.0):
        tb = f_norm(FFunction(s, True, 2), 40)
        assert math.isfinite(tb.upper) and tb.lower > 0


def test_f_norm_one_dimensional_closed_form():
    F = FFunction(2.0, False, 1)
    tb = f_norm(F, 10_000)
    exact = 2 * math.pi**2 / 6 - 1
    assert tb.lower <= exact <= tb.upper


def test_unweighted_divergent_family_rejected():
    with pytest.raises(DivergenceError):
        f_norm(FFunction(2.0, False, 2), 10)


def test_enclosures_nest_as_cut_grows():
    a = f_norm(FR, 20)
    b = f_norm(FR, 60)
    assert a.lower <= b.lower and b.upper <= a.upper * (1 + 1e-12)


def test_g_f_at_zero_is_the_norm():
    a = g_f(F3, 0.0, 200)
    b = f_norm(F3, 200)
    assert a.lower == pytest.approx(b.lower, rel=1e-12)
    assert a.upper == pytest.approx(b.upper, rel=1e-12)


def test_g_f_encloses_brute_force():
    for t in (1.0, 3.5, 10.0):
        tb = g_f(F3, t, 150)
        assert tb.lower <= brute_sum(F3, t, 1500) <= tb.upper


def test_g_f_cut_below_t_rejected():
    with pytest.raises(DomainError):
        g_f(F3, 10.0, 5)


def test_g_f_monotone_in_t():
    ups = [g_f(FR, t).upper for t in range(0, 30)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(ups, ups[1:]))


def test_g_f_decay_estimate_small_and_large_m():
    row2 = gf_decay_check(FR, 2, 2)[0]
    assert row2["satisfied"] and row2["log_margin"] > 0
    row200 = gf_decay_check(FR, 200, 200)[0]
    assert row200["satisfied"]
    assert row200["log_lhs"] < math.log(1e-80) and row200["log_rhs"] < math.log(1e-80)
    assert row200["log_rhs"] == pytest.approx(decay_log_rhs(FR, 200))


def test_decay_check_rejects_unweighted():
    with pytest.raises(DomainError):
        gf_decay_check(F3, 2, 5)


def test_conv_constant_encloses_every_separation():
    tb = conv_constant(F3, 60)
    for v in [(0, 0), (5, 0), (20, 0), (7, 7)]:
        mid = tuple(round(c / 2) for c in v)
        assert conv_partial(F3, v, 240, center=mid) <= tb.upper
    assert tb.lower >= conv_partial(F3, (20, 0), 60, center=(10, 0)) * (1 - 1e-12)


def test_conv_constant_lower_bound_at_least_f0():
    lo, hi = cf_bounds(FR)
    assert lo >= float(FR(0.0)) and lo <= hi
    lo3, hi3 = cf_bounds(F3)
    assert lo3 <= hi3


def test_conv_partial_constant_function_counts_sites():
    F0 = FFunction(0.0, False, 2)  # F == 1
    count = sum(1 for i in range(-7, 8) for j in range(-7, 8) if i * i + j * j <= 49)
    assert conv_partial(F0, (0, 0), 7) == pytest.approx(count)


def test_moment_and_tilde():
    total, table = moment_and_tilde(FR, 0.5, 40)
    assert math.isfinite(total.upper) and total.lower > 0
    r = table.r
    assert np.all(table.values >= FR(r / 3.0) * (1 - 1e-12))
    assert np.all(np.diff(table.values) <= 1e-300)


def test_tailbound_validation_and_json():
    with pytest.raises(DomainError):
        TailBound(1.0, -1.0, 3)
    tb = TailBound(1.0, 0.5, 3)
    assert tb.contains(1.2) and not tb.contains(2.0)
    assert tb.to_json() == {"partial_sum": 1.0, "tail_upper": 0.5, "cut_radius": 3}
    assert FFunction.from_json(FR.to_json()) == FR

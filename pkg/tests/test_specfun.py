"""Special-function kernel tests.

Reference values marked "oracle" were computed once with mpmath at 30
significant digits (Bessel values, Catalan, the arctan integral by
adaptive quadrature, log I0 derivatives by direct high-precision
differentiation) and are frozen here so the suite never depends on
mpmath at runtime.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from racedensity import specfun as sf


# ---------------------------------------------------------------------------
# J0 and its zeros
# ---------------------------------------------------------------------------

def test_j0_at_zero_is_one():
    assert sf.bessel_j0(0.0) == 1.0


def test_j0_at_two_oracle():
    assert sf.bessel_j0(2.0) == pytest.approx(0.223890779141235668, rel=1e-13)


def test_j0_vanishes_at_first_zero():
    j1 = sf.j0_zeros(1)[0]
    assert abs(sf.bessel_j0(j1)) < 1e-12


def test_j0_rejects_non_finite():
    with pytest.raises(ValueError):
        sf.bessel_j0(math.inf)
    with pytest.raises(ValueError):
        sf.bessel_j0(math.nan)


def test_j0_lowbias_against_30_digit_values():
    # reference values from an independent 30-digit computation
    pins = {
        0.5: 0.9384698072408129042284,
        1.0: 0.7651976865579665514497,
        2.0: 0.2238907791412356680518,
        3.5: -0.3801277399872633773787,
        5.9: 0.1220333545928227783392,
    }
    got = sf.j0_lowbias(np.array(list(pins)))
    assert got.dtype == np.longdouble
    for want, value in zip(pins.values(), got):
        assert float(value) == pytest.approx(want, rel=3e-16)


def test_j0_lowbias_near_root_absolute_accuracy():
    # at the double nearest the first root the true value is -6.109e-17;
    # the series evaluation must resolve it in absolute terms, where the
    # general-purpose routine only promises ulp-of-1 accuracy
    z = 2.404825557695773
    want = -6.108765259736730397082e-17
    got = float(sf.j0_lowbias(np.array([z]))[0])
    assert got == pytest.approx(want, abs=5e-19)


def test_j0_lowbias_fallback_joins_smoothly():
    # beyond the series cutover the library routine takes over; both
    # branches must agree at library accuracy around the seam
    for z in (5.99, 6.01, 8.0, 25.0):
        a = float(sf.j0_lowbias(np.array([z]))[0])
        assert a == pytest.approx(sf.bessel_j0(z), rel=4e-15, abs=1e-16)


def test_j0_lowbias_matches_scalar_routine_coarsely():
    zs = np.linspace(0.01, 5.99, 211)
    vals = sf.j0_lowbias(zs)
    for z, v in zip(zs, vals):
        assert float(v) == pytest.approx(sf.bessel_j0(float(z)), abs=5e-16)


def test_j0_zeros_first_two():
    z = sf.j0_zeros(2)
    # the first zero is 2.4048..., not the misprinted 2.2048 sometimes seen;
    # 2.2048 is inconsistent with both the second zero and sum(1/j_l^2) = 1/4
    assert z[0] == pytest.approx(2.40482555769577277, abs=1e-12)
    assert z[1] == pytest.approx(5.52007811028631065, abs=1e-12)
    assert round(z[1], 4) == 5.5201


def test_j0_zero_gaps_increase_toward_pi():
    z = sf.j0_zeros(60)
    gaps = np.diff(z)
    assert np.all(np.diff(gaps) > 0)
    assert np.all(gaps[1:] > 3.13)
    assert np.all(gaps < math.pi)
    assert gaps[-1] == pytest.approx(math.pi, abs=1e-3)


def test_j0_zero_reciprocal_square_sum():
    # sum over all zeros of 1/j_l^2 equals 1/4; complete the truncated sum
    # with the Euler-Maclaurin tail of j_l ~ (l - 1/4) pi + 1/(8 (l-1/4) pi)
    from scipy.special import polygamma
    L = 200
    z = np.array(sf.j0_zeros(L))
    head = np.sum(1.0 / z ** 2)
    x = L + 0.75
    tail = polygamma(1, x) / math.pi ** 2 - polygamma(3, x) / (24 * math.pi ** 4)
    assert head + tail == pytest.approx(0.25, abs=1e-12)


# ---------------------------------------------------------------------------
# I0, I1
# ---------------------------------------------------------------------------

def test_i0_i1_at_zero():
    assert sf.bessel_i0(0.0) == 1.0
    assert sf.bessel_i1(0.0) == 0.0


def test_i0_at_ten_oracle():
    assert sf.bessel_i0(10.0) == pytest.approx(2815.71662846625447, rel=1e-13)


def test_i0_i1_both_regimes_oracle():
    # straddle the series/asymptotic crossover at w = 20
    assert sf.bessel_i0(19.5) == pytest.approx(26760525.339838766, rel=1e-13)
    assert sf.bessel_i1(19.5) == pytest.approx(26065069.2644571657, rel=1e-13)
    assert sf.bessel_i0(20.5) == pytest.approx(70922869.8343170066, rel=1e-13)
    assert sf.bessel_i1(20.5) == pytest.approx(69170831.6791843729, rel=1e-13)


def test_i0_large_argument_leading_asymptote():
    # e^-w sqrt(2 pi w) I0(w) = 1 + 1/(8w) + O(w^-2)
    w = 50.0
    scaled = sf.bessel_i0(w) * math.exp(-w) * math.sqrt(2 * math.pi * w)
    assert scaled == pytest.approx(1.0 + 1.0 / (8 * w), abs=5e-5)
    assert sf.bessel_i0(w) == pytest.approx(2.93255378384933633e+20, rel=1e-13)


def test_i_rejects_negative():
    with pytest.raises(ValueError):
        sf.bessel_i0(-1.0)
    with pytest.raises(ValueError):
        sf.bessel_i1(-0.5)
    with pytest.raises(ValueError):
        sf.log_i0(-2.0)


def test_i0_overflow_policy():
    assert sf.bessel_i0(800.0) == math.inf
    # while the log form stays finite and accurate
    lg = sf.log_i0(800.0)
    assert lg == pytest.approx(800.0 - 0.5 * math.log(2 * math.pi * 800.0)
                               + math.log(1 + 1 / 6400), rel=1e-6)


# ---------------------------------------------------------------------------
# log I0 derivatives
# ---------------------------------------------------------------------------

# oracle: mpmath direct differentiation of log(besseli(0, w)) at 30 digits
_DERIV_ORACLE = {
    0.1: [0.0024984392338762434, 0.049937603987938919, 0.49813019582855459,
          -0.03729241639909563, -0.3687874423245696, 0.12350540312848397],
    1.0: [0.23591435850717865, 0.44638996589653451, 0.35434603245035625,
          -0.22430909323599542, -0.010642338123181792, 0.37637814838027019],
    10.0: [7.9429720831186956, 0.94859982595484596, 0.005298387602951359,
           -0.0010959396167486216, 0.00034143249885150621, -0.00014257720913035876],
    100.0: [96.779732689942584, 0.99498737300516877, 5.0253830221470357e-5,
            -1.0076540327149255e-6, 3.0307743275425209e-8, -1.2154671221560075e-9],
}


# Achievable relative accuracy per derivative order. Orders 3..5 near the
# top of the middle window (w -> 18) lose digits to the structural
# cancellation in the ratio recurrences (g^(m) ~ (m-1)!/(2w^m) emerges from
# O(w^{1-m}) pieces); measured worst cases 1.6e-11 (m=3), 1.5e-10 (m=4),
# 1.1e-9 (m=5), all at the w = 18 regime boundary.
_DERIV_RTOL = [1e-12, 1e-12, 5e-11, 1e-9, 1e-9, 1e-8]


@pytest.mark.parametrize("w", sorted(_DERIV_ORACLE))
def test_log_i0_derivs_oracle(w):
    got = sf.log_i0_derivs(w, 5)
    want = _DERIV_ORACLE[w]
    for m in range(6):
        assert got[m] == pytest.approx(want[m], rel=_DERIV_RTOL[m], abs=1e-18)


@pytest.mark.parametrize("w", [0.1, 1.0, 10.0, 100.0])
def test_log_i0_derivs_match_finite_differences(w):
    h = 1e-5
    for m in range(1, 6):
        lo = sf.log_i0_derivs(w - h, m - 1)[m - 1]
        hi = sf.log_i0_derivs(w + h, m - 1)[m - 1]
        fd = (hi - lo) / (2 * h)
        val = sf.log_i0_derivs(w, m)[m]
        assert val == pytest.approx(fd, rel=1e-6)


def test_log_i0_derivs_at_zero():
    d = sf.log_i0_derivs(0.0, 5)
    assert d[0] == 0.0
    assert d[1] == 0.0
    assert d[2] == pytest.approx(0.5, abs=1e-15)
    assert d[3] == 0.0
    assert d[4] == pytest.approx(-0.375, abs=1e-14)
    assert d[5] == 0.0


def test_log_i0_derivs_regime_boundaries_are_continuous():
    # the two probe points are 2e-12 w0 apart, so the function itself moves
    # by ~|next derivative| * gap between them; allow that plus each
    # branch's own accuracy before calling a mismatch a regime jump
    for w0 in (sf._ODE_LO, sf._ODE_HI):
        gap = 2e-12 * w0
        a = sf.log_i0_derivs(w0 * (1 - 1e-12), 5)
        b = sf.log_i0_derivs(w0 * (1 + 1e-12), 5)
        for m in range(6):
            slope = abs(a[m + 1]) if m < 5 else abs(a[m])
            tol = 2 * _DERIV_RTOL[m] * abs(a[m]) + 2 * slope * gap + 1e-15
            assert abs(a[m] - b[m]) < tol


def test_log_i0_derivs_rejects_bad_order():
    with pytest.raises(ValueError):
        sf.log_i0_derivs(1.0, 6)
    with pytest.raises(ValueError):
        sf.log_i0_derivs(1.0, -1)


def test_log_i0_derivs_huge_argument():
    # r -> 1 - 1/(2w), second derivative -> 1/(2w^2); stays finite at 1e6
    d = sf.log_i0_derivs(1e6, 5)
    assert d[1] == pytest.approx(1.0 - 0.5e-6 - 0.125e-12, rel=1e-12)
    assert d[2] == pytest.approx(0.5e-12, rel=1e-6)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1e3))
def test_log_i0_bounds_property(w):
    val = sf.log_i0(w)
    assert 0.0 < val < min(w * w / 4.0, w)
    d = sf.log_i0_derivs(w, 2)
    assert 0.0 < d[1] < min(w / 2.0, 1.0)
    assert 0.0 < d[2] < 0.5


def test_log_i0_bounds_dense_sample():
    rng = np.random.default_rng(20260816)
    ws = rng.uniform(1e-9, 1e3, size=10_000)
    for w in ws:
        val = sf.log_i0(float(w))
        assert 0.0 < val < min(w * w / 4.0, w)


# ---------------------------------------------------------------------------
# c_k coefficients
# ---------------------------------------------------------------------------

def test_c_first_five_exact():
    ct = sf.c_coeffs(5)
    assert ct.c == (1 / 2, 1 / 16, 1 / 72, 11 / 3072, 19 / 19200)
    assert ct.K == 5


def test_c1_recovered_from_zero_sum():
    from scipy.special import polygamma
    z = np.array(sf.j0_zeros(200))
    x = 200 + 0.75
    s = np.sum(1.0 / z ** 2) + polygamma(1, x) / math.pi ** 2 \
        - polygamma(3, x) / (24 * math.pi ** 4)
    assert 2.0 * s == pytest.approx(0.5, abs=1e-12)


def test_c6_inside_bracket():
    ct = sf.c_coeffs(6)
    j1 = ct.j[0]
    lo = (1 / 6) * (2 / j1 ** 2) ** 6
    hi = lo * (1 + 1.16 * 0.19 ** 6)
    assert lo < ct.c[5] < hi


def test_c_ratio_decreases_to_limit():
    # c_k ~ (1/k)(2/j1^2)^k exponentially fast, so successive ratios
    # c_k/c_{k+1} = (k+1)/k * j1^2/2 * (1 + O(0.19^k)) fall monotonically
    # toward j1^2/2 from above
    ct = sf.c_coeffs(25)
    ratios = [ct.c[k] / ct.c[k + 1] for k in range(ct.K - 1)]
    assert all(r1 > r2 for r1, r2 in zip(ratios, ratios[1:]))
    j1 = ct.j[0]
    lim = j1 ** 2 / 2
    assert all(r > lim for r in ratios)
    assert ratios[-1] == pytest.approx(25.0 / 24.0 * lim, rel=1e-9)
    assert all(c > 0 for c in ct.c)


def test_c_coeffs_range_check():
    with pytest.raises(ValueError):
        sf.c_coeffs(0)
    with pytest.raises(ValueError):
        sf.c_coeffs(31)


def test_coeff_table_immutable():
    ct = sf.c_coeffs(5)
    with pytest.raises(Exception):
        ct.K = 7


def test_log_j0_series_identity():
    # log J0(w) = -sum c_k w^{2k} / 2^k inside the first zero; the tail
    # ratio is w^2/j1^2 so at w = 1.5 depth 25 leaves ~1e-12
    ct = sf.c_coeffs(25)
    for w in (0.5, 1.0, 1.5):
        direct = math.log(sf.bessel_j0(w))
        series = -sum(ct.c[k - 1] * w ** (2 * k) / 2 ** k
                      for k in range(1, 26))
        assert direct == pytest.approx(series, abs=1e-10)


def test_log_i0_series_identity():
    # log I0(w) = sum (-1)^{k-1} c_k w^{2k} / 2^k for |w| <= 1
    ct = sf.c_coeffs(25)
    for w in (0.125, 0.5, 0.9, 1.0):
        direct = sf.log_i0(w)
        series = sum((-1) ** (k - 1) * ct.c[k - 1] * w ** (2 * k) / 2 ** k
                     for k in range(1, 26))
        assert direct == pytest.approx(series, abs=1e-12)


# ---------------------------------------------------------------------------
# arctan integral
# ---------------------------------------------------------------------------

def test_arctan_integral_endpoints():
    assert sf.arctan_integral(0.0) == 0.0
    # Catalan's constant
    assert sf.arctan_integral(1.0) == pytest.approx(0.915965594177219015, abs=1e-14)


@pytest.mark.parametrize("x,want", [
    (0.25, 0.248301750982306869),
    (0.5, 0.487222358294522357),
    (0.75, 0.710570104643646942),
    (0.95, 0.876337541334202778),
])
def test_arctan_integral_oracle(x, want):
    assert sf.arctan_integral(x) == pytest.approx(want, abs=1e-14)


def test_arctan_integral_regime_continuity():
    # integrand at 0.9 is atan(0.9)/0.9 ~ 0.814, so the two probe points
    # differ by ~1.6e-12 through the function's own slope alone
    a = sf.arctan_integral(0.9 - 1e-12)
    b = sf.arctan_integral(0.9 + 1e-12)
    assert a == pytest.approx(b, abs=2.5e-12)


def test_arctan_integral_domain():
    with pytest.raises(ValueError):
        sf.arctan_integral(-0.1)
    with pytest.raises(ValueError):
        sf.arctan_integral(1.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0))
def test_arctan_integral_monotone_bounded(x):
    v = sf.arctan_integral(x)
    # integrand is in (0, 1], so 0 <= value <= x, and it beats x*atan(x)/x
    assert 0.0 <= v <= x + 1e-15
    assert v >= x * math.atan(x) / max(x, 1e-300) * 0.5 if x > 0 else True


# ---------------------------------------------------------------------------
# base constants
# ---------------------------------------------------------------------------

def test_base_constants_pins():
    bc = sf.base_constants(1)
    assert bc.A0 == pytest.approx(-0.08933, abs=1e-4)
    assert bc.A1 == pytest.approx(-2.12634, abs=1e-4)
    assert bc.X == pytest.approx(0.0336, abs=5e-4)
    assert bc.A == pytest.approx(bc.A0 - math.log(math.pi), abs=1e-15)


def test_base_constants_regression():
    # frozen from this implementation's quadrature (certified residual
    # < 1e-9); guards against silent integrand changes
    bc = sf.base_constants(1)
    assert bc.A0 == pytest.approx(-0.0893265223437, abs=1e-10)
    assert bc.A1 == pytest.approx(-2.1263359643917, abs=1e-10)


def test_base_constants_conductor_shift():
    b1 = sf.base_constants(1)
    b7 = sf.base_constants(7)
    assert b7.A0 == b1.A0
    assert b7.A1 == b1.A1
    assert b7.A - b1.A == pytest.approx(math.log(7), rel=1e-13)
    # X grows like 0.1922 log q*
    assert (b7.X - b1.X) / math.log(7) == pytest.approx(0.1922, abs=5e-4)


def test_base_constants_domain():
    with pytest.raises(ValueError):
        sf.base_constants(0)
    with pytest.raises(ValueError):
        sf.base_constants(-3)

"""Special-function kernel shared by every computation route.

Pure functions only. Three families matter downstream:

* J0 and its positive zeros, which set where the two-sided characteristic
  function of a single zero's contribution vanishes;
* the modified Bessel pair I0, I1 and the derivatives of log I0 through
  fifth order, which drive the saddle-point solve;
* the coefficients c_k of log I0(w) = sum_{k>=1} (-1)^{k-1} c_k w^{2k} / 2^k,
  shared between the Fourier remainder and the density expansions.

Everything that can overflow has a log-domain companion, and callers are
written against those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import j0 as _sp_j0, j1 as _sp_j1

__all__ = [
    "CoeffTable",
    "BaseConstants",
    "bessel_j0",
    "j0_lowbias",
    "bessel_i0",
    "bessel_i1",
    "log_i0",
    "log_i0_derivs",
    "c_coeffs",
    "j0_zeros",
    "arctan_integral",
    "base_constants",
]


# ---------------------------------------------------------------------------
# J0 and its zeros
# ---------------------------------------------------------------------------

def bessel_j0(w: float) -> float:
    """J0(w) for finite real w.

    Delegates to the cephes routine, which is a (small-argument polynomial,
    large-argument phase/amplitude) pair accurate to a few ulp over the
    range we use (|w| <= 60 in the Fourier sum).
    """
    w = float(w)
    if not math.isfinite(w):
        raise ValueError(f"bessel_j0 needs a finite argument, got {w!r}")
    return float(_sp_j0(w))


# Ascending-series coefficients (-1)^n / (n!)^2 in extended precision.
# 27 terms leave the cutover argument (q = 9) with a relative remainder
# below 1e-21, far under the extended-precision ulp of the result.
_J0_SERIES_CUT = 6.0
_J0_COEFFS = np.ones(27, dtype=np.longdouble)
for _n in range(1, 27):
    _J0_COEFFS[_n] = -_J0_COEFFS[_n - 1] / np.longdouble(_n * _n)
del _n


def j0_lowbias(z) -> np.ndarray:
    """J0 over an array, with per-value bias far below an ulp.

    The cephes routine is accurate to a few ulp pointwise but sits a few
    1e-17 low on average; a product of hundreds of kernel factors turns
    that harmless pointwise bias into a one-sided relative drift
    proportional to the product length. For |z| <= 6 this evaluates the
    ascending series by Horner in 80-bit arithmetic instead, which is
    unbiased at the 1e-18 level; larger arguments (only reached by
    lattice terms that are negligible anyway) fall back to cephes.

    Returns extended precision so callers can keep multiplying without
    re-rounding every factor to double.
    """
    zl = np.atleast_1d(np.asarray(z, dtype=np.longdouble))
    small = np.abs(zl) <= _J0_SERIES_CUT
    q = 0.25 * zl * zl
    acc = np.full_like(q, _J0_COEFFS[-1])
    for c in _J0_COEFFS[-2::-1]:
        acc = acc * q + c
    if bool(np.all(small)):
        return acc
    out = np.where(small, acc, 0.0)
    out[~small] = _sp_j0(zl[~small].astype(float))
    return out


def j0_zeros(L: int) -> list[float]:
    """First L positive zeros of J0, each to about 1e-13 absolute.

    Seed with the large-index asymptotic form b + 1/(8b), b = (l - 1/4)pi,
    then polish by Newton using J0' = -J1. The seed is within ~6e-3 of the
    true zero even at l = 1 and the gaps approach pi from below, so four
    Newton steps converge and cannot jump to a neighbouring zero.
    """
    if L < 1:
        raise ValueError("need at least one zero")
    out = []
    for l in range(1, L + 1):
        b = (l - 0.25) * math.pi
        x = b + 1.0 / (8.0 * b)
        for _ in range(4):
            f = _sp_j0(x)
            fp = -_sp_j1(x)
            x -= f / fp
        out.append(float(x))
    return out


# ---------------------------------------------------------------------------
# I0, I1 and log I0
# ---------------------------------------------------------------------------

# Power series below w = 20, asymptotic expansion at and above. 31 series
# terms leave a relative tail ~4e-14 at the crossover; the asymptotic
# bracket truncated after t_15 leaves ~2.5e-14 there, and both improve
# rapidly away from it.

_SERIES_TERMS = 30
_ASYM_TERMS = 16  # t_0 .. t_15
_CROSSOVER = 20.0


def _i0_series(w: float) -> float:
    ww4 = 0.25 * w * w
    t = 1.0
    s = 1.0
    for n in range(1, _SERIES_TERMS + 1):
        t *= ww4 / (n * n)
        s += t
    return s


def _i1_series(w: float) -> float:
    ww4 = 0.25 * w * w
    t = 1.0
    s = 1.0
    for n in range(1, _SERIES_TERMS + 1):
        t *= ww4 / (n * (n + 1))
        s += t
    return 0.5 * w * s


def _i_asym_bracket(four_nu2: int, w: float) -> float:
    # sum of t_k with t_0 = 1, t_{k+1} = -t_k (4nu^2 - (2k+1)^2) / (8(k+1)w)
    t = 1.0
    s = 1.0
    for k in range(_ASYM_TERMS - 1):
        t *= -(four_nu2 - (2 * k + 1) ** 2) / (8.0 * (k + 1) * w)
        s += t
    return s


def _check_nonneg(w: float, who: str) -> float:
    w = float(w)
    if not (math.isfinite(w) and w >= 0.0):
        raise ValueError(f"{who} needs w >= 0, got {w!r}")
    return w


def bessel_i0(w: float) -> float:
    """I0(w) for w >= 0. Overflows to +inf above w ~ 713."""
    w = _check_nonneg(w, "bessel_i0")
    if w < _CROSSOVER:
        return _i0_series(w)
    lg = w - 0.5 * math.log(2.0 * math.pi * w) + math.log(_i_asym_bracket(0, w))
    return math.exp(lg) if lg < 709.0 else math.inf


def bessel_i1(w: float) -> float:
    """I1(w) for w >= 0. Overflows to +inf above w ~ 713."""
    w = _check_nonneg(w, "bessel_i1")
    if w < _CROSSOVER:
        return _i1_series(w)
    lg = w - 0.5 * math.log(2.0 * math.pi * w) + math.log(_i_asym_bracket(4, w))
    return math.exp(lg) if lg < 709.0 else math.inf


def log_i0(w: float) -> float:
    """log I0(w), overflow-safe for arbitrarily large w."""
    w = _check_nonneg(w, "log_i0")
    if w <= _ODE_LO:
        # log(1 + tiny) through math.log wastes relative accuracy; the
        # expansion of log I0 itself keeps full precision down to w = 0
        return _derivs_series(w, 0)[0]
    if w < _CROSSOVER:
        return math.log(_i0_series(w))
    return w - 0.5 * math.log(2.0 * math.pi * w) + math.log(_i_asym_bracket(0, w))


# --- derivatives of g(w) = log I0(w) through order 5 ----------------------
#
# With r = I1/I0 = g', the recurrences below follow from I0' = I1 and
# I1' = I0 - I1/w:
#
#   g''    = 1 - r^2 - r/w
#   g'''   = -(2r + 1/w) g''  + r/w^2
#   g''''  = -2 g''^2 + 2 g''/w^2 - (2r + 1/w) g'''  - 2r/w^3
#   g''''' = -6 g'' g''' + 3 g'''/w^2 - 6 g''/w^3 - (2r + 1/w) g'''' + 6r/w^4
#
# They are well conditioned only in a middle window. For w <= 1 we
# differentiate the c_k series term by term instead. For large w the
# recurrences degrade: g'' ~ 1/(2w^2) emerges from the cancellation
# 1 - r^2 - r/w of O(1) pieces once r hugs 1, and each further order
# repeats the game, so the relative error of g^(m) grows roughly like
# w^m * eps. The asymptotic series (divergent, optimally truncated)
# behaves oppositely: its error falls rapidly with w. The two error
# curves cross near w = 18 for m = 5, where both sit at about 1e-9
# relative; that fixes the upper switch point.

_ODE_LO = 1.0
_ODE_HI = 18.0


@lru_cache(maxsize=1)
def _log_coeff_fracs() -> tuple[Fraction, ...]:
    # f_k of log(1 + sum b_n x^n) where b_n = ((2n-1)!!)^2 / (n! 8^n) are
    # the coefficients of the I0 asymptotic bracket; exact rationals so the
    # large-w derivatives carry no composition error. Depth 24 is past the
    # optimal truncation point for w >= 20 and still shrinking at w = 18,
    # which is what lets _ODE_HI sit as low as 18.
    nmax = 24
    b = [Fraction(1)]
    for n in range(1, nmax + 1):
        b.append(b[-1] * Fraction((2 * n - 1) ** 2, 8 * n))
    f = [Fraction(0)] * (nmax + 1)
    for n in range(1, nmax + 1):
        acc = b[n]
        for jj in range(1, n):
            acc -= Fraction(jj, n) * f[jj] * b[n - jj]
        f[n] = acc
    return tuple(f[1:])


_RISING = [[1] * 6 for _ in range(25)]
for _k in range(1, 25):
    for _m in range(1, 6):
        _RISING[_k][_m] = _RISING[_k][_m - 1] * (_k + _m - 1)


def _derivs_asymptotic(w: float, max_order: int) -> list[float]:
    fk = [float(x) for x in _log_coeff_fracs()]
    out = []
    for m in range(max_order + 1):
        if m == 0:
            val = w - 0.5 * math.log(2.0 * math.pi * w)
            val += sum(f * w ** (-k - 1) for k, f in enumerate(fk))
        elif m == 1:
            val = 1.0 - 0.5 / w
            val -= sum((k + 1) * f * w ** (-k - 2) for k, f in enumerate(fk))
        else:
            sign = -1.0 if m % 2 else 1.0
            val = -0.5 * (-sign) * math.factorial(m - 1) * w ** (-m)
            val += sign * sum(
                _RISING[k + 1][m] * f * w ** (-k - 1 - m)
                for k, f in enumerate(fk)
            )
        out.append(val)
    return out


def _derivs_series(w: float, max_order: int) -> list[float]:
    ct = c_coeffs(25)
    out = []
    for m in range(max_order + 1):
        acc = 0.0
        for k in range(1, ct.K + 1):
            p = 2 * k - m
            if p < 0:
                continue
            fall = 1.0
            for i in range(m):
                fall *= 2 * k - i
            base = ct.c[k - 1] * 0.5 ** k * fall
            term = base if p == 0 else base * w ** p
            acc += term if k % 2 else -term
        out.append(acc)
    return out


def _derivs_ratio(w: float, max_order: int) -> list[float]:
    if w < _CROSSOVER:
        r = _i1_series(w) / _i0_series(w)
        g0 = math.log(_i0_series(w))
    else:
        r = _i_asym_bracket(4, w) / _i_asym_bracket(0, w)
        g0 = w - 0.5 * math.log(2.0 * math.pi * w) + math.log(_i_asym_bracket(0, w))
    vals = [g0, r]
    iw = 1.0 / w
    g2 = 1.0 - r * r - r * iw
    vals.append(g2)
    g3 = -(2.0 * r + iw) * g2 + r * iw * iw
    vals.append(g3)
    g4 = (-2.0 * g2 * g2 + 2.0 * g2 * iw * iw
          - (2.0 * r + iw) * g3 - 2.0 * r * iw ** 3)
    vals.append(g4)
    g5 = (-6.0 * g2 * g3 + 3.0 * g3 * iw * iw - 6.0 * g2 * iw ** 3
          - (2.0 * r + iw) * g4 + 6.0 * r * iw ** 4)
    vals.append(g5)
    return vals[: max_order + 1]


def log_i0_derivs(w: float, max_order: int = 5) -> list[float]:
    """d^m/dw^m log I0(w) for m = 0..max_order (max_order <= 5).

    Safe for w up to ~1e6 and beyond: only the ratio I1/I0 and log I0
    itself ever appear, never I0 or I1 bare.
    """
    if not isinstance(max_order, int) or not 0 <= max_order <= 5:
        raise ValueError(f"max_order must be an integer in 0..5, got {max_order!r}")
    w = _check_nonneg(w, "log_i0_derivs")
    if w <= _ODE_LO:
        return _derivs_series(w, max_order)
    if w < _ODE_HI:
        return _derivs_ratio(w, max_order)
    return _derivs_asymptotic(w, max_order)


# ---------------------------------------------------------------------------
# the c_k coefficient family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoeffTable:
    """Coefficients c_1..c_K of the log-Bessel expansions together with the
    J0 zeros j_1..j_L used to build the tail of the family."""
    c: tuple[float, ...]
    j: tuple[float, ...]
    K: int
    L: int


# k <= 5 have exact closed forms; evaluating these instead of the zero sum
# avoids the slow convergence the sum has at small k.
_C_EXACT = (
    Fraction(1, 2),
    Fraction(1, 16),
    Fraction(1, 72),
    Fraction(11, 3072),
    Fraction(19, 19200),
)


@lru_cache(maxsize=None)
def c_coeffs(K: int) -> CoeffTable:
    """c_1..c_K with c_k = (2^k / k) sum_l j_l^(-2k) for k > 5.

    The zero sum is truncated once a term contributes relatively less than
    1e-18; at k = 6 that happens after ~24 zeros and sooner for larger k.
    """
    if not isinstance(K, int) or not 1 <= K <= 30:
        raise ValueError(f"K must be an integer in 1..30, got {K!r}")
    L = 40
    jz = j0_zeros(L)
    cs = []
    for k in range(1, K + 1):
        if k <= 5:
            cs.append(float(_C_EXACT[k - 1]))
            continue
        s = 0.0
        for jl in jz:
            t = jl ** (-2 * k)
            s += t
            if t < 1e-18 * s:
                break
        else:
            raise ValueError(f"zero list exhausted before convergence at k={k}")
        cs.append(2.0 ** k / k * s)
    return CoeffTable(c=tuple(cs), j=tuple(jz), K=K, L=L)


# ---------------------------------------------------------------------------
# the inverse-tangent integral on [0, 1]
# ---------------------------------------------------------------------------

def arctan_integral(x: float) -> float:
    """int_0^x arctan(w)/w dw = sum_k (-1)^k x^(2k+1) / (2k+1)^2, 0 <= x <= 1.

    Plain alternating summation is hopeless near x = 1 (the error after n
    terms is ~1/4n^2, so 1e-14 would need ~5e6 terms), so above x = 0.9 we
    switch to the Chebyshev-weighted acceleration of Cohen, Rodriguez
    Villegas and Zagier, which contracts like (3 + sqrt(8))^(-n) for series
    whose terms are moments of a positive measure, as these are.
    """
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"arctan_integral defined on [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x <= 0.9:
        s = 0.0
        xx = x * x
        p = x
        k = 0
        while True:
            t = p / (2 * k + 1) ** 2
            s += -t if k % 2 else t
            # <= not <: for subnormal x both t and 1e-17*s underflow to 0.0
            # and a strict test would spin forever
            if t <= 1e-17 * abs(s) and k > 2:
                return s
            p *= xx
            k += 1
    # acceleration: n = 36 puts the contraction factor near 1e-28, far below
    # double rounding, and costs nothing.
    n = 36
    d = (3.0 + math.sqrt(8.0)) ** n
    d = 0.5 * (d + 1.0 / d)
    b = -1.0
    c = -d
    s = 0.0
    xx = x * x
    p = x
    for k in range(n):
        c = b - c
        s += c * p / (2 * k + 1) ** 2
        b *= (k + n) * (k - n) / ((k + 0.5) * (k + 1.0))
        p *= xx
    return s / d


# ---------------------------------------------------------------------------
# the two base integrals and their conductor-dependent combinations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BaseConstants:
    A0: float
    A1: float
    A: float
    X: float


@lru_cache(maxsize=1)
def _a0_a1() -> tuple[float, float]:
    from scipy.integrate import quad

    def near(x: float) -> float:
        # log I0(x)/x^2 -> 1/4 as x -> 0; evaluate the limit branch to keep
        # the quadrature smooth near the left endpoint
        return log_i0(x) / (x * x) if x > 1e-8 else 0.25

    # On (1, inf) subtract the exact asymptote first: with
    # h(x) = log I0(x) - x + (1/2) log(2 pi x), which decays like 1/(8x),
    #   int (log I0 - x)/x^2        = -(log 2pi + 1)/2 + int h/x^2
    #   int log x (log I0 - x)/x^2  = -(log 2pi + 2)/2 + int log x h/x^2
    # using int_1^inf x^-2 = 1, int log x x^-2 = 1, int (log x)^2 x^-2 = 2.
    # Leaving the log-growing asymptote in makes the adaptive extrapolation
    # struggle at the 1e-13 tolerances we ask for.
    def far(x: float) -> float:
        return (log_i0(x) - x + 0.5 * math.log(2.0 * math.pi * x)) / (x * x)

    l2pi = math.log(2.0 * math.pi)
    pieces = []
    # the log x weight on (0, 1) goes through the QAWS rule, which treats
    # the endpoint singularity exactly instead of by extrapolation; the
    # unweighted tail pieces split at the series/asymptotic crossover so
    # its ~1e-14 representation jump never lands inside a panel
    for g, segs, wgt in (
        (near, ((0.0, 1.0),), None),
        (far, ((1.0, _CROSSOVER), (_CROSSOVER, math.inf)), None),
        (near, ((0.0, 1.0),), "log"),
        (lambda x: far(x) * math.log(x),
         ((1.0, _CROSSOVER), (_CROSSOVER, math.inf)), None),
    ):
        tot = 0.0
        for lo, hi in segs:
            if wgt == "log":
                # 1e-12, not tighter: asking QAWS for 1e-13 here pushes it
                # into its roundoff guard and it returns a worse answer
                val, err = quad(g, lo, hi, weight="alg-loga", wvar=(0.0, 0.0),
                                epsabs=1e-12, epsrel=1e-12, limit=300)
            else:
                val, err = quad(g, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=300)
            if err > 1e-9:
                raise ArithmeticError(
                    f"base-constant quadrature failed to converge (residual {err:.2e})")
            tot += val
        pieces.append(tot)
    a0 = 1.0 + pieces[0] + pieces[1] - 0.5 * (l2pi + 1.0)
    a1 = pieces[2] + pieces[3] - 0.5 * (l2pi + 2.0)
    return a0, a1


def base_constants(qstar: int) -> BaseConstants:
    """A0, A1 and their conductor combinations A and X.

    A0 and A1 are fixed quadratures of log I0; A shifts A0 by log(q*/pi),
    and X collects the cross terms that the large-deviation model needs.
    """
    if not isinstance(qstar, int) or qstar < 1:
        raise ValueError(f"qstar must be a positive integer, got {qstar!r}")
    a0, a1 = _a0_a1()
    lq = math.log(qstar / math.pi)
    a = a0 + lq
    l2 = math.log(2.0)
    x = ((l2 + a0) * lq - 0.5 * l2 * l2 - 1.0 + a0 - a1) / math.pi
    return BaseConstants(A0=a0, A1=a1, A=a, X=x)

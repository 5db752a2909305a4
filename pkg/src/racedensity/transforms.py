"""Transform-layer building blocks shared by the density methods.

Both computational routes split the distribution at a zero-height
cutoff u. Below the cutoff every zero is treated explicitly: on the
Fourier side as a product of J0 kernel factors, on the Laplace side as
a sum of log I0 terms. Above the cutoff only aggregate tail moments
survive, and the two remainders are power series in tau = sigma_u*omega
or t = sqrt(2 B1)*s that converge inside the radius T carried by the
tail statistics.

The raw remainder series loses accuracy quickly as t approaches T. The
accelerated form fixes that: the series implied by the smooth density
of zeros is summed exactly into arctan / log / inverse-tangent-integral
closed forms, and only the small difference between the true moments
and the smooth-density model is kept as a correction series, truncated
at eight terms. That correction is what makes saddle points at s in the
thousands reachable with a few thousand explicit zeros.

Subtracting the smooth model also moves the wall. The raw series
diverges at |t| = T because the smooth j1-ring singularity sits there;
the correction series only keeps the difference from the model, so its
own terms fall off like (0.19 t^2/T^2)^k and its disk reaches the
second Bessel ring at (j2/j1) T, about 2.295 T. The closed forms are
entire on the real axis, so the accelerated remainder is usable on the
whole extended disk, with the retained-term check guarding accuracy as
the edge is approached.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .race import RaceSpec
from .specfun import arctan_integral, base_constants, c_coeffs, j0_lowbias
from .specfun import j0_zeros, log_i0_derivs
from .zerodata import TailStats, ZeroDataError, resolve_table, span_and_delta

__all__ = [
    "AccuracyWarning",
    "AsymptoticL",
    "ConvergenceError",
    "FourierTail",
    "LDerivs",
    "l0_asymptotic",
    "l0_full",
    "l_remainder",
    "model_constants",
    "model_log_density",
    "model_log_exceedance",
    "model_saddle",
    "phat_prefix",
    "phat_remainder",
    "sigma_accelerated",
]

_J1, _J2 = j0_zeros(2)
_J1SQ = _J1 * _J1

# the accelerated remainder converges out to the second Bessel ring
_EXT_RADIUS = _J2 / _J1

# below this |t|/T the closed forms are abandoned for the defining
# series, which is better conditioned near the origin (the closed
# forms subtract almost-equal terms there)
_SERIES_CUTOVER = 0.3

# the correction series is always truncated here; its terms fall off
# geometrically so more would add nothing above double precision
_CORR_TERMS = 8


class ConvergenceError(ValueError):
    """The requested point lies outside the remainder's convergence disk.

    Carries min_u, the approximate zero cutoff that would bring the
    point inside (t/T scales like 1/u at fixed s).
    """

    def __init__(self, message: str, min_u: float | None = None):
        super().__init__(message)
        self.min_u = min_u


class AccuracyWarning(UserWarning):
    """A truncated tail term is large enough to threaten the target accuracy."""


def _radius_error(what: float, wall: float, u: float, label: str = "") -> ConvergenceError:
    # t/T is exactly linear in 1/u at fixed s (the nearest tail zero
    # sets the radius), so the needed cutoff follows by direct scaling;
    # the few-percent pad covers the slowly drifting log factors in T
    ratio = what / wall
    min_u = 1.05 * u * ratio
    where = f" ({label})" if label else ""
    return ConvergenceError(
        f"|t| = {what:.6g} is outside the usable radius {wall:.6g}{where}; "
        f"raise the zero cutoff to at least u ~ {min_u:.0f}",
        min_u=min_u,
    )


# ----------------------------------------------------------------- Fourier side

@dataclass(frozen=True)
class FourierTail:
    """One evaluation of the characteristic function's tail factor."""

    value: float
    error_estimate: float
    beyond_radius: bool


def phat_remainder(omega: float, stats: TailStats, K: int) -> FourierTail:
    """Tail factor of the characteristic function at frequency omega.

    exp(-sum_{k<=K} c_k R_k tau^{2k}) with tau = sigma_u*omega. Past the
    radius (tau >= T) the true factor is a product of kernel values each
    below 0.41 in magnitude, negligible against everything else in a
    Poisson sum, so the value is clamped to exactly 0 and flagged.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > len(stats.R):
        raise ValueError(
            f"stats carry moment ratios to order {len(stats.R)}; need Kmax >= {K}")
    tau = stats.sigma_u * abs(float(omega))
    if tau == 0.0:
        return FourierTail(1.0, 0.0, False)
    T = stats.T
    if not (T > 0.0) or math.isnan(T):
        raise ConvergenceError(
            "tail statistics carry no usable convergence radius; raise the cutoff u")
    if tau >= T:
        return FourierTail(0.0, 0.0, True)
    c = c_coeffs(K).c
    expo = math.fsum(c[k - 1] * stats.R[k - 1] * tau ** (2 * k)
                     for k in range(1, K + 1))
    err = c[K - 1] * stats.R[K - 1] * tau ** (2 * K + 2) / (T * T - tau * tau)
    return FourierTail(math.exp(-expo), err, False)


def phat_prefix(omega: float, race: RaceSpec, u: float,
                tables=None) -> float:
    """Product of explicit-zero kernel factors J0(2*alpha*omega/sqrt(1/4+g^2)).

    Runs over every table zero at or below u in ascending order. Merged
    conjugate-pair tables already list both members' ordinates, so no
    multiplicity factor appears.

    The whole chain (arguments, factors, running product) stays in
    extended precision: the lattice sums downstream cancel to a few
    parts in 1e6 of their largest term, so a length-proportional
    rounding drift in a hundred-factor product would surface directly
    in their last two digits. When any factor drops below 1e-3 in
    magnitude the product is re-done as a sign-tracked sum of logs to
    dodge underflow in long products.
    """
    w = float(omega)
    u = float(u)
    if u < 0.0:
        raise ValueError("cutoff u must be nonnegative")
    arrays = []
    for entry in race.characters:
        table = resolve_table(entry, tables)
        if table.last_zero < u and not _covers(table, u):
            raise ZeroDataError(
                f"{entry.label}: zero table ends at {table.last_zero:.6g}, "
                f"so zeros below u = {u:g} are missing")
        g = table.gammas[table.gammas <= u]
        if g.size == 0:
            continue
        gl = g.astype(np.longdouble)
        factors = j0_lowbias(2.0 * entry.alpha * w / np.sqrt(0.25 + gl * gl))
        arrays.append(factors)
    if not arrays:
        return 1.0
    if any(np.any(f == 0.0) for f in arrays):
        return 0.0
    if min(float(np.min(np.abs(f))) for f in arrays) < 1e-3:
        neg = sum(int(np.sum(f < 0.0)) for f in arrays)
        total = np.longdouble(0.0)
        for f in arrays:
            total += np.sum(np.log(np.abs(f)))
        sign = -1.0 if neg % 2 else 1.0
        return float(sign * np.exp(total))
    value = np.longdouble(1.0)
    for f in arrays:
        value *= np.prod(f)
    return float(value)


def _covers(table, u: float) -> bool:
    # a cutoff a few mean gaps past the final listed zero cannot hide a
    # missing zero; anything further out could
    y_end = math.log(max(table.qstar * table.last_zero / (2.0 * math.pi), 2.0))
    gap = 2.0 * math.pi / (table.weight * y_end)
    return u <= table.last_zero + 3.0 * gap


# ----------------------------------------------------------------- Laplace side

def l_remainder(s: float, stats: TailStats, K: int = 8, order: int = 0) -> float:
    """Order-th s-derivative of the raw tail series of the cumulant function.

    sum_{k<=K} (-1)^{k-1} c_k R_k t^{2k} with t = sqrt(2 B1) s,
    differentiated term by term. Valid only strictly inside |t| < T.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > len(stats.R):
        raise ValueError(
            f"stats carry moment ratios to order {len(stats.R)}; need Kmax >= {K}")
    if not 0 <= order <= 5:
        raise ValueError("order must lie in 0..5")
    s = float(s)
    t = stats.sigma_u * s
    T = stats.T
    if not (T > 0.0) or math.isnan(T):
        raise ConvergenceError(
            "tail statistics carry no usable convergence radius; raise the cutoff u")
    if abs(t) >= T:
        raise _radius_error(abs(t), T, stats.u)
    c = c_coeffs(K).c
    parts = []
    for k in range(max(1, (order + 1) // 2), K + 1):
        p = 2 * k
        if p < order:
            continue
        coef = (-1.0) ** (k - 1) * c[k - 1] * stats.R[k - 1] * stats.sigma_u ** p
        parts.append(coef * math.perm(p, order) * s ** (p - order))
    return math.fsum(parts)


def _model_series_coef(k: int, y: float) -> float:
    # coefficient of x^{2k} in (y-1)g(x) + h(x); both defining series
    # alternate with these magnitudes
    return (y - 1.0) / (k * (2.0 * k - 1.0)) + 2.0 / (2.0 * k - 1.0) ** 2


def _ti(x: float) -> float:
    # inverse tangent integral on [0, inf): the polynomial fit covers
    # [0, 1], beyond which Ti(x) = Ti(1/x) + (pi/2) log x
    if x <= 1.0:
        return arctan_integral(x)
    return arctan_integral(1.0 / x) + 0.5 * math.pi * math.log(x)


def _sigma_model(t: float, y: float, T: float, order: int) -> float:
    """Order-th t-derivative of the smooth-density part of the remainder.

    The part is 2T^2/((y+1) j1^2) * [(y-1) g(x) + h(x)] at x = t/T with
    g(x) = 2x arctan x - log(1+x^2) and h(x) = 2x Ti(x). The leading
    prefactor 2 makes the x^2 coefficient equal 2/j1^2, the full weight
    of the first Bessel ring in the smoothed kernel sum; with half that
    weight the correction series would keep the other half and gain
    nothing over the raw series (checked against brute-force tail sums
    over the zero tables). The closed forms hold for every real x; near
    the origin the defining series is better conditioned (the closed
    forms subtract almost-equal terms there) and is used instead.
    """
    x = t / T
    ax = abs(x)
    pref = 2.0 * T ** (2 - order) / ((y + 1.0) * _J1SQ)
    odd_flip = -1.0 if (x < 0.0 and order % 2 == 1) else 1.0
    if ax < _SERIES_CUTOVER:
        # the series handles ax == 0 as written: only a p == order term
        # survives (0**0 == 1), which is exactly the nonzero constant an
        # even-order derivative keeps at the origin
        parts = []
        acc = 0.0
        k = max(1, (order + 1) // 2)
        while k < 400000:
            p = 2 * k
            if p >= order:
                term = ((-1.0) ** (k - 1) * _model_series_coef(k, y)
                        * math.perm(p, order) * ax ** (p - order))
                parts.append(term)
                acc += term
                if abs(term) < 1e-17 * (abs(acc) + 1e-300) and p > order + 2:
                    break
            k += 1
        return odd_flip * pref * math.fsum(parts)
    at = math.atan(ax)
    q = 1.0 + ax * ax
    if order == 0:
        g = 2.0 * ax * at - math.log1p(ax * ax)
        h = 2.0 * ax * _ti(ax)
    elif order == 1:
        g = 2.0 * at
        h = 2.0 * _ti(ax) + 2.0 * at
    elif order == 2:
        g = 2.0 / q
        h = 2.0 * at / ax + 2.0 / q
    elif order == 3:
        g = -4.0 * ax / (q * q)
        h = 2.0 / (ax * q) - 2.0 * at / (ax * ax) - 4.0 * ax / (q * q)
    elif order == 4:
        g = (12.0 * ax * ax - 4.0) / q ** 3
        h = (-4.0 / (ax * ax * q) + 4.0 * at / ax ** 3
             - 8.0 / (q * q) + 16.0 * ax * ax / q ** 3)
    else:
        g = 48.0 * ax * (1.0 - ax * ax) / q ** 4
        h = (8.0 * (1.0 + 2.0 * ax * ax) / (ax ** 3 * q * q)
             + 4.0 / (ax ** 3 * q) - 12.0 * at / ax ** 4
             + 64.0 * ax / q ** 3 - 96.0 * ax ** 3 / q ** 4)
    return odd_flip * pref * ((y - 1.0) * g + h)


def _sigma_corr(t: float, rk, y: float, T: float, order: int):
    """Order-th t-derivative of the moment-vs-model correction series.

    Returns (value, last_term): the eight-term alternating sum of
    (c_k r_k - a_k) t^{2k} differentiated term-wise, and the final
    retained term for the caller's accuracy check.
    """
    if len(rk) < _CORR_TERMS:
        raise ValueError(
            f"per-character moment ratios reach order {len(rk)}; "
            f"the correction series needs {_CORR_TERMS} (use Kmax >= 8)")
    c = c_coeffs(_CORR_TERMS).c
    parts = []
    last = 0.0
    for k in range(1, _CORR_TERMS + 1):
        p = 2 * k
        if p < order:
            continue
        # twice the model's series coefficient, mirroring the ring
        # weight in _sigma_model, so the difference below carries only
        # the second and later Bessel rings plus discreteness
        a_k = (2.0 * (y + 1.0 / (2.0 * k - 1.0))
               / (k * (2.0 * k - 1.0) * (y + 1.0) * _J1SQ * T ** (p - 2)))
        e_k = c[k - 1] * rk[k - 1] - a_k
        last = (-1.0) ** (k - 1) * e_k * math.perm(p, order) * t ** (p - order)
        parts.append(last)
    return math.fsum(parts), last


def _per_char_ratios(pc) -> tuple:
    # table sums cover all `weight` conjugate series at once, so the
    # single-series ratios pick up a weight^{k-1} rescaling
    b1 = pc.b[0]
    return tuple(pc.weight ** (k - 1) * pc.b[k - 1] / b1 ** k
                 for k in range(1, len(pc.b) + 1))


def _accelerated(t: float, y: float, T: float, rk, order: int):
    if not (T > 0.0) or math.isnan(T):
        raise ConvergenceError(
            "tail statistics carry no usable convergence radius; raise the cutoff u")
    value_model = _sigma_model(t, y, T, order)
    value_corr, last = _sigma_corr(t, rk, y, T, order)
    return value_model + value_corr, last


def sigma_accelerated(t: float, stats: TailStats, order: int = 0) -> float:
    """Accelerated remainder for a single series: model part plus correction.

    Valid on the extended disk |t| < (j2/j1) T; past the raw radius T
    the retained-term check below is what monitors accuracy. Multi-
    character races sum per-character results (each with its own t,
    radius and ratios); that summation lives in l0_full.
    """
    if not 0 <= order <= 5:
        raise ValueError("order must lie in 0..5")
    if len(stats.per_char) != 1 or stats.per_char[0].weight != 1:
        raise ValueError(
            "the accelerated remainder is defined one series at a time; "
            "multi-character races go through l0_full, which sums per-series results")
    pc = stats.per_char[0]
    t = float(t)
    T = pc.T_single
    if not (T > 0.0) or math.isnan(T):
        raise ConvergenceError(
            "tail statistics carry no usable convergence radius; raise the cutoff u")
    if abs(t) >= _EXT_RADIUS * T:
        raise _radius_error(abs(t), _EXT_RADIUS * T, stats.u, pc.label)
    # for a single weight-1 series the race-normalized ratios R_k and
    # the per-series ratios coincide (alpha cancels)
    value, last = _accelerated(t, pc.y, T, stats.R, order)
    scale = max(abs(value), 1e-300)
    if abs(last) > 1e-7 * scale:
        warnings.warn(
            f"final correction term is {abs(last) / scale:.2e} of the remainder "
            f"(t/T = {abs(t) / T:.3f}); raise the zero cutoff for full accuracy",
            AccuracyWarning, stacklevel=2)
    return value


# ----------------------------------------------------------- full cumulant side

@dataclass(frozen=True)
class LDerivs:
    """The cumulant generating function and its first five s-derivatives."""

    s: float
    values: tuple
    u: float
    error_estimate: float

    @property
    def value(self) -> float:
        return self.values[0]

    @property
    def d1(self) -> float:
        return self.values[1]

    @property
    def d2(self) -> float:
        return self.values[2]

    @property
    def d3(self) -> float:
        return self.values[3]

    @property
    def d4(self) -> float:
        return self.values[4]

    @property
    def d5(self) -> float:
        return self.values[5]


def l0_full(s: float, race: RaceSpec, stats: TailStats,
            tables=None) -> LDerivs:
    """Cumulant generating function with derivatives 1..5 at real s >= 0.

    Explicit zeros below stats.u enter through log I0 with the chain
    rule; each character's tail enters through the accelerated
    remainder in its own variable t_chi = alpha*sqrt(2 b1_chi)*s. The
    error estimate collects the final correction terms, which bound
    what truncating the correction series discards.
    """
    s = float(s)
    if s < 0.0:
        raise ValueError("s must be nonnegative (the function is even)")
    u = stats.u
    buckets = [[] for _ in range(6)]
    err_parts = []
    for entry, pc in zip(race.characters, stats.per_char):
        table = resolve_table(entry, tables)
        if not _covers(table, u):
            raise ZeroDataError(
                f"{entry.label}: zero table ends at {table.last_zero:.6g}, "
                f"so zeros below u = {u:g} are missing")
        g = table.gammas[table.gammas <= u]
        scales = 2.0 * entry.alpha / np.sqrt(0.25 + g * g)
        for a in scales:
            d = log_i0_derivs(a * s, 5)
            p = 1.0
            for m in range(6):
                buckets[m].append(p * d[m])
                p *= a
        # remainder, once per series; the merged table carries `weight`
        # identical conjugate series
        b1_chi = pc.b[0] / pc.weight
        dtds = entry.alpha * math.sqrt(2.0 * b1_chi)
        t_chi = dtds * s
        T = pc.T_single
        if not (T > 0.0) or math.isnan(T):
            raise ConvergenceError(
                f"{entry.label}: no usable convergence radius at u = {u:g}; "
                f"raise the cutoff")
        if abs(t_chi) >= _EXT_RADIUS * T:
            raise _radius_error(abs(t_chi), _EXT_RADIUS * T, u, entry.label)
        rk = _per_char_ratios(pc)
        p = float(pc.weight)
        for m in range(6):
            val, last = _accelerated(t_chi, pc.y, T, rk, m)
            buckets[m].append(p * val)
            if m == 0:
                err_parts.append(abs(p * last))
            p *= dtds
    values = tuple(math.fsum(b) for b in buckets)
    if s > 0.0 and not values[2] > 0.0:
        raise ArithmeticError(
            f"second derivative came out nonpositive ({values[2]:g}) at s = {s:g}; "
            f"the zero data must be inconsistent")
    return LDerivs(s=s, values=values, u=u,
                   error_estimate=math.fsum(err_parts))


# ------------------------------------------------------------- asymptotic model

@dataclass(frozen=True)
class ModelConstants:
    """Conductor- and race-level constants of the large-s model."""

    q: int
    qstar: int
    A0: float
    A: float
    X: float
    alpha_sum: float
    Y: float
    Z: float
    sum_alpha_delta: float


@dataclass(frozen=True)
class AsymptoticL:
    """Large-s model values of the cumulant function and derivatives 1..3."""

    s: float
    value: float
    d1: float
    d2: float
    d3: float
    W: float
    constants: ModelConstants


_DELTA_CACHE: dict = {}


def _table_delta(entry, tables) -> float:
    table = resolve_table(entry, tables)
    key = (table.label, table.qstar, len(table), float(table.last_zero))
    if key not in _DELTA_CACHE:
        _DELTA_CACHE[key] = span_and_delta(table, table.last_zero).delta
    return _DELTA_CACHE[key]


def model_constants(race: RaceSpec, tables=None) -> ModelConstants:
    """Constants feeding the large-s model and the extreme-tail estimates.

    Requires every character to share one conductor, so that a single
    base constant A applies; that covers the prime-count case, prime
    moduli, and any single-series race. Mixed-conductor races have no
    such closed model and go through l0_full instead.
    """
    qstars = {entry.qstar for entry in race.characters}
    if len(qstars) != 1:
        raise ValueError(
            "the asymptotic model needs a single shared conductor "
            f"(got {sorted(qstars)}); mixed-conductor races go through l0_full")
    qstar = qstars.pop()
    bc = base_constants(qstar)
    parts_a = []
    parts_y = []
    parts_z = []
    parts_d = []
    for entry in race.characters:
        w = float(entry.weight)
        la = math.log(entry.alpha)
        parts_a.append(w * entry.alpha)
        parts_y.append(w * entry.alpha * la)
        parts_z.append(w * entry.alpha * la * la)
        parts_d.append(entry.alpha * _table_delta(entry, tables))
    alpha_sum = math.fsum(parts_a)
    return ModelConstants(
        q=race.q, qstar=qstar, A0=bc.A0, A=bc.A, X=bc.X,
        alpha_sum=alpha_sum,
        Y=math.fsum(parts_y) / alpha_sum,
        Z=math.fsum(parts_z) / alpha_sum,
        sum_alpha_delta=math.fsum(parts_d),
    )


def l0_asymptotic(s: float, race: RaceSpec, tables=None) -> AsymptoticL:
    """Smooth-model cumulant function for large s (reliable from s ~ 10 up).

    Each character contributes the single-series model at alpha*s:
    derivative (log sigma)^2/2pi + A log(sigma)/pi + delta + X, with its
    integral for the value and the log-derivative forms for orders 2
    and 3. Conjugate pairs enter through their table's combined delta.
    """
    s = float(s)
    if s <= 0.0:
        raise ValueError("the asymptotic model needs s > 0")
    mc = model_constants(race, tables)
    A, X = mc.A, mc.X
    v0, v1, v2, v3 = [], [], [], []
    for entry in race.characters:
        w = float(entry.weight)
        al = entry.alpha
        sig = al * s
        ls = math.log(sig)
        delta = _table_delta(entry, tables)
        smooth = ls * ls / (2.0 * math.pi) + A * ls / math.pi + X
        v1.append(w * al * smooth + al * delta)
        v0.append(sig * (w * al * smooth + al * delta)
                  - w * al * sig / math.pi * (ls + A - 1.0))
        v2.append(w * al * (ls + A) / (math.pi * s))
        v3.append(-w * al * (ls + A - 1.0) / (math.pi * s * s))
    return AsymptoticL(
        s=s,
        value=math.fsum(v0),
        d1=math.fsum(v1),
        d2=math.fsum(v2),
        d3=math.fsum(v3),
        W=math.log(s) + A + mc.Y,
        constants=mc,
    )


def _model_w(mc: ModelConstants, v: float) -> float:
    w2 = (mc.A * mc.A + mc.Y * mc.Y
          + 2.0 * math.pi * v / mc.alpha_sum
          - 2.0 * math.pi / mc.alpha_sum * mc.sum_alpha_delta
          - 2.0 * math.pi * mc.X
          - mc.Z)
    if w2 <= 1.0:
        raise ValueError(
            f"threshold v = {v:g} is below the model's validity range "
            f"(the saddle equation has no large root)")
    return math.sqrt(w2)


def model_saddle(race_or_constants, v: float, tables=None) -> float:
    """Model solution s of d1 = v; useful as a starting point for solvers."""
    mc = _as_constants(race_or_constants, tables)
    W = _model_w(mc, v)
    return math.exp(W - mc.A - mc.Y)


def model_log_density(race_or_constants, v: float, tables=None) -> float:
    """Double-exponential model of log P0(v) for large v."""
    mc = _as_constants(race_or_constants, tables)
    W = _model_w(mc, v)
    return -(mc.alpha_sum / mc.q) * (W - 1.0) * math.exp(W - mc.Y - mc.A0)


def model_log_exceedance(race_or_constants, v: float, tables=None) -> float:
    """Model of log E(v): the density model less the log of the saddle."""
    mc = _as_constants(race_or_constants, tables)
    W = _model_w(mc, v)
    log_s = W - mc.A - mc.Y
    return -(mc.alpha_sum / mc.q) * (W - 1.0) * math.exp(W - mc.Y - mc.A0) - log_s


def _as_constants(race_or_constants, tables) -> ModelConstants:
    if isinstance(race_or_constants, ModelConstants):
        return race_or_constants
    return model_constants(race_or_constants, tables)

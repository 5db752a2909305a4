"""Fourier route: Poisson summation of the characteristic function.

The density's Fourier transform is a product of explicit-zero kernel
factors and the controlled tail factor from transforms. Poisson
summation turns the inversion integral into a lattice sum over
frequencies m*domega; the wrap-around (aliasing) error is a sum of
exceedance masses at 2*pi/domega - v and beyond, which the Gaussian
exceedance bound controls, so the step can be taken far larger than a
quadrature view would suggest. Each lattice term is independent of the
others; they are precomputed once per parameter set and reduced in a
fixed ascending order so results are bit-reproducible.

The exceedance sum reads
    E(v) = 1/2 - v*domega/(2 pi) - (1/pi) sum_m phat(m*domega) sin(m v domega)/m
and the density sum
    P0(v) = (domega/pi) (1/2 + sum_m phat(m*domega) cos(m v domega)),
both truncated at the frequency ceiling C where the tail factor's
exponent passes 46 (value below 1e-20) or the remainder's convergence
radius ends, whichever comes first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .race import RaceSpec, bias_offset
from .results import DensityResult
from .transforms import phat_prefix, phat_remainder
from .zerodata import TailStats, aggregate_stats, montgomery_bound

__all__ = [
    "ParameterError",
    "RSParams",
    "PhatSample",
    "choose_params",
    "compute_E",
    "compute_P",
    "default_domega",
    "default_params",
    "density_grid",
    "phat_samples",
    "race_result",
]

# tail-factor exponent past which a lattice term is dropped: values
# below e^-46 ~ 1e-20 cannot move a result read at 1e-16
_EXPONENT_CUTOFF = 46.0


class ParameterError(ValueError):
    """Poisson parameters cannot deliver the requested accuracy."""


@dataclass(frozen=True)
class RSParams:
    """Parameter set for one Poisson-summation run.

    target, when set, arms the aliasing check in compute_E/compute_P:
    a wrap-around bound above it refuses the evaluation instead of
    silently degrading.
    """

    u: float
    K: int
    domega: float
    C: float
    v_max: float
    target: float | None = None

    def __post_init__(self):
        if not (self.domega > 0.0 and math.isfinite(self.domega)):
            raise ParameterError("domega must be positive and finite")
        if self.K < 1:
            raise ParameterError("K must be at least 1")
        if not (self.C > 0.0):
            raise ParameterError("frequency ceiling C must be positive")
        if 2.0 * math.pi / self.domega <= self.v_max:
            raise ParameterError(
                f"2 pi / domega = {2.0 * math.pi / self.domega:.6g} must exceed "
                f"v_max = {self.v_max:.6g}; shrink domega")


@dataclass(frozen=True)
class PhatSample:
    """The characteristic function at one lattice frequency."""

    m: int
    omega: float
    prefix: float
    tail: float
    error: float   # absolute error estimate for prefix*tail

    @property
    def phat(self) -> float:
        return self.prefix * self.tail


def _stats_for(race: RaceSpec, params: RSParams, stats, tables) -> TailStats:
    if stats is not None:
        if stats.u != params.u:
            raise ParameterError(
                f"stats were aggregated at u = {stats.u:g}, params ask {params.u:g}")
        if len(stats.R) < params.K:
            raise ParameterError(
                f"stats carry {len(stats.R)} moment ratios, K = {params.K} needed")
        return stats
    return aggregate_stats(race, params.u, Kmax=max(params.K, 2), tables=tables)


def phat_samples(race: RaceSpec, params: RSParams, stats: TailStats = None,
                 tables=None) -> tuple[PhatSample, ...]:
    """Characteristic-function values at m*domega for 0 < m*domega < C.

    The expensive, threshold-independent part of both Poisson sums;
    evaluate once and reuse across v. Frequencies past the tail
    factor's convergence radius come back as exact zeros (each carries
    at least one kernel factor beyond its first root, making the true
    value smaller than anything retained here).
    """
    stats = _stats_for(race, params, stats, tables)
    out = []
    m_max = int(math.ceil(params.C / params.domega))
    for m in range(1, m_max + 1):
        omega = m * params.domega
        if omega >= params.C:
            break
        tail = phat_remainder(omega, stats, params.K)
        if tail.beyond_radius or tail.value == 0.0:
            out.append(PhatSample(m, omega, 0.0, 0.0, 0.0))
            continue
        prefix = phat_prefix(omega, race, params.u, tables)
        # d(exp(-x)) = -exp(-x) dx: the tail's exponent error transfers
        # multiplicatively
        out.append(PhatSample(m, omega, prefix, tail.value,
                              abs(prefix) * tail.value * tail.error_estimate))
    return tuple(out)


def _aliasing_log_bound(v: float, params: RSParams, stats: TailStats) -> float:
    # the wrap-around error is below E(2 pi / domega - |v|)
    w = 2.0 * math.pi / params.domega - abs(v)
    return montgomery_bound(w, stats)


def _check_aliasing(v: float, params: RSParams, stats: TailStats,
                    density: bool) -> float:
    log_bound = _aliasing_log_bound(v, params, stats)
    bound = math.exp(log_bound)
    if density:
        # the density at w is below the exceedance mass one deviation
        # earlier spread over that deviation
        w = 2.0 * math.pi / params.domega - abs(v)
        bound = math.exp(montgomery_bound(max(w - stats.sigma0, 0.0), stats)) \
            / stats.sigma0
    if params.target is not None and bound > params.target:
        need = abs(v) + stats.sigma0 * math.sqrt(
            2.0 * math.log(1.0 / params.target))
        raise ParameterError(
            f"aliasing bound {bound:.3g} exceeds target {params.target:.3g}; "
            f"domega must be at most {2.0 * math.pi / need:.6g}")
    return bound


def _truncation_bound(samples, params: RSParams, stats: TailStats) -> float:
    # terms dropped past C have tail factor below e^-46; count how many
    # lattice points sit between C and the radius end, where they stop
    # existing altogether
    if not (stats.T > 0.0) or math.isnan(stats.T):
        return 0.0
    omega_end = stats.T / stats.sigma_u
    if omega_end <= params.C:
        return 0.0
    m_lo = int(math.floor(params.C / params.domega)) + 1
    m_hi = int(math.ceil(omega_end / params.domega))
    if m_hi < m_lo:
        return 0.0
    return math.exp(-_EXPONENT_CUTOFF) / math.pi * math.fsum(
        1.0 / m for m in range(m_lo, m_hi + 1))


def compute_E(v: float, race: RaceSpec, params: RSParams,
              stats: TailStats = None, tables=None,
              samples=None) -> DensityResult:
    """Exceedance probability E(v) by the Poisson lattice sum.

    The error estimate adds the aliasing bound, the summed per-term
    tail-factor error estimates, and the bound on terms dropped past
    the frequency ceiling.
    """
    v = float(v)
    stats = _stats_for(race, params, stats, tables)
    if abs(v) > params.v_max:
        raise ParameterError(
            f"|v| = {abs(v):g} exceeds the v_max = {params.v_max:g} these "
            f"parameters were validated for")
    alias = _check_aliasing(v, params, stats, density=False)
    if samples is None:
        samples = phat_samples(race, params, stats, tables)
    terms = []
    term_err = []
    for s in samples:
        if s.tail == 0.0:
            continue
        sine = math.sin(s.m * v * params.domega)
        terms.append(s.phat * sine / s.m)
        term_err.append(s.error / s.m)
    value = 0.5 - v * params.domega / (2.0 * math.pi) - math.fsum(terms) / math.pi
    err = (alias + math.fsum(term_err) / math.pi
           + _truncation_bound(samples, params, stats))
    return DensityResult(
        v=v, log_p=float("nan"),
        log_e=math.log(value) if value > 0.0 else float("-inf"),
        method="fourier",
        params={"u": params.u, "K": params.K, "domega": params.domega,
                "C": params.C, "n_terms": len(terms),
                "n_zeros": stats.n_zeros},
        error_estimate=err)


def compute_P(v: float, race: RaceSpec, params: RSParams,
              stats: TailStats = None, tables=None,
              samples=None) -> DensityResult:
    """Density P0(v) by the Poisson lattice sum. Even in v by construction."""
    v = float(v)
    stats = _stats_for(race, params, stats, tables)
    if abs(v) > params.v_max:
        raise ParameterError(
            f"|v| = {abs(v):g} exceeds the v_max = {params.v_max:g} these "
            f"parameters were validated for")
    alias = _check_aliasing(v, params, stats, density=True)
    if samples is None:
        samples = phat_samples(race, params, stats, tables)
    terms = []
    term_err = []
    for s in samples:
        if s.tail == 0.0:
            continue
        terms.append(s.phat * math.cos(s.m * v * params.domega))
        term_err.append(s.error)
    value = params.domega / math.pi * (0.5 + math.fsum(terms))
    err = (alias
           + params.domega / math.pi * math.fsum(term_err)
           + params.domega * _truncation_bound(samples, params, stats))
    return DensityResult(
        v=v, log_p=math.log(value) if value > 0.0 else float("-inf"),
        log_e=float("nan"), method="fourier",
        params={"u": params.u, "K": params.K, "domega": params.domega,
                "C": params.C, "n_terms": len(terms),
                "n_zeros": stats.n_zeros},
        error_estimate=err)


def density_grid(vs, race: RaceSpec, params: RSParams,
                 stats: TailStats = None, tables=None) -> np.ndarray:
    """P0 on an array of thresholds, sharing one set of lattice samples."""
    stats = _stats_for(race, params, stats, tables)
    vs = np.asarray(vs, dtype=float)
    if vs.size and float(np.max(np.abs(vs))) > params.v_max:
        raise ParameterError(
            f"grid reaches |v| = {float(np.max(np.abs(vs))):g} beyond "
            f"v_max = {params.v_max:g}")
    _check_aliasing(float(np.max(np.abs(vs))) if vs.size else 0.0,
                    params, stats, density=True)
    samples = phat_samples(race, params, stats, tables)
    ms = np.array([s.m for s in samples if s.tail != 0.0], dtype=float)
    ph = np.array([s.phat for s in samples if s.tail != 0.0], dtype=float)
    acc = 0.5 + np.cos(np.outer(vs, ms) * params.domega) @ ph
    return params.domega / math.pi * acc


def default_domega(race: RaceSpec, sigma0: float) -> float:
    """Frequency step defaults: pi/2 for the prime-count distribution,
    0.8 for modulus 8, half the reciprocal deviation for other races."""
    if race.q == 1:
        return math.pi / 2.0
    if race.q == 8:
        return 0.8
    return 1.0 / (2.0 * sigma0)


def _ceiling_for(stats: TailStats, K: int) -> float:
    # smallest omega whose tail-factor exponent reaches the cutoff,
    # capped at the convergence radius where samples vanish anyway
    from .specfun import c_coeffs
    c = c_coeffs(K).c

    def exponent(tau: float) -> float:
        return math.fsum(c[k - 1] * stats.R[k - 1] * tau ** (2 * k)
                         for k in range(1, K + 1))

    T = stats.T
    if not (T > 0.0) or math.isnan(T):
        raise ParameterError("stats carry no usable convergence radius")
    if exponent(T * (1.0 - 1e-12)) < _EXPONENT_CUTOFF:
        return T / stats.sigma_u
    lo, hi = 0.0, T
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if exponent(mid) < _EXPONENT_CUTOFF:
            lo = mid
        else:
            hi = mid
    return hi / stats.sigma_u


def choose_params(v_max: float, stats: TailStats, target: float,
                  domega: float = None) -> RSParams:
    """Smallest-cost parameters meeting the accuracy target.

    The step is the largest one whose wrap-around bound stays under a
    third of the target (or the caller's explicit step, validated); the
    ceiling is where tail factors drop below 1e-20; K is the smallest
    retained order whose summed per-term error estimates stay under a
    third of the target.
    """
    if not 1e-16 < target < 1e-2:
        raise ParameterError(
            f"target {target:.3g} outside the feasible window (1e-16, 1e-2): "
            f"the lattice sum reads differences of order-one quantities, so "
            f"double precision floors its accuracy near 1e-16")
    slack = target / 3.0
    need = v_max + stats.sigma0 * math.sqrt(2.0 * math.log(1.0 / slack))
    domega_max = 2.0 * math.pi / need
    if domega is None:
        domega = domega_max
    elif domega > domega_max:
        raise ParameterError(
            f"domega = {domega:g} leaves the aliasing bound above "
            f"{slack:.3g}; at most {domega_max:.6g} is admissible")
    best = None
    for K in range(2, len(stats.R) + 1):
        params = RSParams(u=stats.u, K=K, domega=domega,
                          C=_ceiling_for(stats, K), v_max=v_max,
                          target=target)
        err = _series_error_budget(params, stats)
        if err < slack:
            best = params
            break
    if best is None:
        raise ParameterError(
            f"per-term error stays above {slack:.3g} even at K = "
            f"{len(stats.R)}; raise the zero cutoff u or the moment depth")
    return best


def _series_error_budget(params: RSParams, stats: TailStats) -> float:
    # |kernel product| <= 1, so the per-term error is bounded by the
    # tail factor's own estimate; 1/(pi m) weighting as in the sums
    parts = []
    m = 1
    while m * params.domega < params.C:
        tail = phat_remainder(m * params.domega, stats, params.K)
        if tail.value != 0.0:
            parts.append(tail.value * tail.error_estimate / m)
        m += 1
    return math.fsum(parts) / math.pi


def default_params(race: RaceSpec, stats: TailStats,
                   target: float = 1e-11, v_max: float = None) -> RSParams:
    """choose_params with the per-race default frequency step."""
    if v_max is None:
        v_max = max(1.0, abs(bias_offset(race)))
    step = default_domega(race, stats.sigma0)
    return choose_params(v_max, stats, target, domega=step)


def race_result(race: RaceSpec, params: RSParams = None,
                stats: TailStats = None, tables=None,
                target: float = 1e-11) -> DensityResult:
    """Chance of the trailing contestant leading: E at the race offset."""
    offset = bias_offset(race)
    if offset == 0.0:
        raise ParameterError(
            f"race {race.name or race.q} carries no offset; the headline "
            f"number for an unbiased race is 1/2 by symmetry")
    v = abs(offset)
    if params is None:
        if stats is None:
            raise ParameterError("race_result needs params or stats")
        params = default_params(race, stats, target=target, v_max=v)
    return compute_E(v, race, params, stats=stats, tables=tables)

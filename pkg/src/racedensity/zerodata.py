"""Zero tables and the tail statistics built from them.

Every calculation route starts from lists of positive imaginary parts
gamma of nontrivial L-function zeros. This module loads and validates
those lists, evaluates the inverse-power sums

    b_k(u) = sum over gamma > u of (1/4 + gamma^2)^(-k)

with an analytic continuation past the end of each table, and aggregates
them across the characters of a race into the moment data (B_k, R_k,
sigma_u, convergence radius T, explicit span S) that the Fourier,
saddle-point and convolution routes all consume.

Tables for conjugate character pairs are merged: one file holds both
members' ordinates ascending, with weight = 2 recorded in the header.
All per-table sums then already cover the pair, while per-character
ratios recover the single-series values through the weight.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .race import RaceEntry, RaceSpec
from .specfun import j0_zeros

_TWO_PI = 2.0 * math.pi
_J1 = j0_zeros(1)[0]

class ZeroDataError(ValueError):
    pass


@dataclass(frozen=True)
class ZeroTable:
    """An ascending list of zero ordinates for one L-function (weight 1)
    or a merged conjugate pair (weight 2), plus the exact full-spectrum
    value of b_1 when known."""
    gammas: np.ndarray
    qstar: int
    label: str
    source: str
    weight: int = 1
    parity: int = 0
    b1_total: float | None = None

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ZeroDataError(f"{self.label}: empty zero table")
        if not np.all(np.isfinite(g)):
            raise ZeroDataError(f"{self.label}: non-finite ordinate")
        if g[0] <= 0.0 or np.any(np.diff(g) <= 0.0):
            raise ZeroDataError(
                f"{self.label}: ordinates must be positive and strictly "
                "ascending")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "gammas", g)
        if self.qstar < 1:
            raise ZeroDataError(f"{self.label}: qstar must be >= 1")
        # the counting function can never wander far from its smooth
        # approximation; a residual of 4 means zeros are missing or
        # duplicated, far outside genuine counting fluctuations
        r = self.counting_residuals()
        worst = max(np.max(np.abs(r)), np.max(np.abs(r - 1.0)))
        if worst >= 4.0:
            raise ZeroDataError(
                f"{self.label}: counting residual reaches {worst:.2f} "
                "(>= 4); the table has gaps or duplicates")

    def smooth_count(self, u):
        """Expected number of ordinates below u, up to bounded terms."""
        u = np.asarray(u, dtype=float)
        x = u / _TWO_PI
        return self.weight * x * (np.log(np.maximum(self.qstar * x, 1e-300))
                                  - 1.0)

    def counting_residuals(self) -> np.ndarray:
        """N(gamma_i) - smooth(gamma_i) at each jump (counting gamma_i)."""
        n = np.arange(1, self.gammas.size + 1, dtype=float)
        return n - self.smooth_count(self.gammas)

    def count(self, u: float) -> int:
        """Number of tabulated ordinates at or below u."""
        return int(np.searchsorted(self.gammas, u, side="right"))

    @property
    def first_zero(self) -> float:
        return float(self.gammas[0])

    @property
    def last_zero(self) -> float:
        return float(self.gammas[-1])

    def __len__(self) -> int:
        return int(self.gammas.size)


_HEADER_KEYS = {"key", "qstar", "parity", "weight", "count", "max_gamma",
                "b1_total", "chi", "method"}


def load_zeros(path: str, qstar: int | None = None,
               label: str | None = None) -> ZeroTable:
    """Read a zero table file: '#' header lines with 'name: value'
    fields, then one ordinate per line, ascending."""
    head: dict[str, str] = {}
    vals: list[float] = []
    prev = 0.0
    try:
        fh = open(path, encoding="utf-8")
    except OSError as e:
        raise ZeroDataError(f"{path}: {e.strerror or e}") from None
    with fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    k, v = body.split(":", 1)
                    if k.strip() in _HEADER_KEYS:
                        head[k.strip()] = v.strip()
                continue
            try:
                x = float(line)
            except ValueError:
                raise ZeroDataError(
                    f"{path}:{i}: not a number: {line!r}") from None
            if not math.isfinite(x) or x <= 0.0:
                raise ZeroDataError(
                    f"{path}:{i}: ordinates must be finite and positive")
            if x <= prev:
                raise ZeroDataError(
                    f"{path}:{i}: ordinate {x!r} not above previous {prev!r}")
            prev = x
            vals.append(x)
    if not vals:
        raise ZeroDataError(f"{path}: no ordinates found")
    if "count" in head and int(head["count"]) != len(vals):
        raise ZeroDataError(
            f"{path}: header says {head['count']} ordinates, file has "
            f"{len(vals)}")
    if "max_gamma" in head and vals[-1] > float(head["max_gamma"]) + 1e-9:
        raise ZeroDataError(
            f"{path}: last ordinate {vals[-1]!r} above the header's "
            f"search ceiling {head['max_gamma']}")
    if qstar is None:
        if "qstar" not in head:
            raise ZeroDataError(
                f"{path}: no qstar header and none supplied")
        qstar = int(head["qstar"])
    if label is None:
        label = head.get("key") or os.path.splitext(os.path.basename(path))[0]
    b1 = float(head["b1_total"]) if "b1_total" in head else None
    return ZeroTable(
        gammas=np.array(vals), qstar=qstar, label=label, source=path,
        weight=int(head.get("weight", 1)), parity=int(head.get("parity", 0)),
        b1_total=b1)


def _data_dir() -> str:
    env = os.environ.get("RACE_DENSITY_DATA")
    if env:
        return env
    return str(resources.files("racedensity").joinpath("data"))


def available_tables() -> tuple[str, ...]:
    d = _data_dir()
    try:
        names = os.listdir(d)
    except OSError:
        return ()
    return tuple(sorted(os.path.splitext(f)[0] for f in names
                        if f.endswith(".txt")))


_table_cache: dict[str, ZeroTable] = {}


def bundled_table(key: str) -> ZeroTable:
    """Load a packaged zero table by key (e.g. 'zeta', 'mod4',
    'mod13_j5'), honoring the RACE_DENSITY_DATA directory override."""
    path = os.path.join(_data_dir(), key + ".txt")
    path = os.path.abspath(path)
    if path not in _table_cache:
        if not os.path.exists(path):
            raise ZeroDataError(
                f"no bundled zero table {key!r}; available: "
                f"{', '.join(available_tables())}")
        _table_cache[path] = load_zeros(path, label=key)
    return _table_cache[path]


@dataclass(frozen=True)
class CountCheck:
    n_points: int
    mean_residual: float
    expected_mean: float
    max_abs_residual: float
    flagged: bool


def validate_counting(table: ZeroTable, u_lo: float = 0.0,
                      u_hi: float | None = None) -> CountCheck:
    """Compare N(u) against its smooth approximation at the midpoints
    between consecutive ordinates. The residual mean has a known target
    (7/8 for the prime-count series; weight*(-1/8 + parity/4) for
    Dirichlet series); drifting off it by more than 0.5 flags the table
    as corrupted (missing or spurious zeros)."""
    g = table.gammas
    if u_hi is None:
        u_hi = float(g[-1])
    mids = 0.5 * (g[:-1] + g[1:])
    sel = (mids >= u_lo) & (mids <= u_hi)
    mids = mids[sel]
    if mids.size == 0:
        raise ZeroDataError(
            f"{table.label}: no midpoints inside [{u_lo}, {u_hi}]")
    counts = np.arange(1, g.size, dtype=float)[sel]
    res = counts - table.smooth_count(mids)
    if table.qstar == 1:
        expected = 7.0 / 8.0
    else:
        expected = table.weight * (-1.0 / 8.0 + table.parity / 4.0)
    mean = float(np.mean(res))
    return CountCheck(
        n_points=int(mids.size), mean_residual=mean, expected_mean=expected,
        max_abs_residual=float(np.max(np.abs(res))),
        flagged=abs(mean - expected) > 0.5)


def tail_bk(table: ZeroTable, u: float, k: int, method: str = "auto") -> float:
    """b_k(u), the inverse-power sum over ordinates above u.

    method='auto': for k = 1 with a known full-spectrum total, subtract
    the head sum from it; otherwise sum the tabulated tail and attach the
    analytic continuation at the end of the table. method='closed' forces
    the subtraction path, method='tail' forces the explicit path.

    Past the last tabulated ordinate only the analytic term remains; its
    own relative accuracy decays like k/u, so thin tails trigger a
    warning rather than silently degrading.
    """
    if k < 1 or k != int(k):
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if not (math.isfinite(u) and u >= 0.0):
        raise ValueError(f"u must be finite and >= 0, got {u!r}")
    g = table.gammas
    U = float(g[-1])
    tail_g = g[g > u]
    if method == "closed":
        if k != 1:
            raise ValueError("closed form only available for k = 1")
        if table.b1_total is None:
            raise ZeroDataError(
                f"{table.label}: no full-spectrum b_1 recorded")
    if tail_g.size < 100:
        warnings.warn(
            f"{table.label}: only {tail_g.size} tabulated zeros above "
            f"u={u:g}; b_{k} leans on the analytic tail "
            f"(relative error of order {k / max(u, U):.1e} * 10)",
            stacklevel=2)
    if k == 1 and method in ("auto", "closed") and table.b1_total is not None \
            and u < U:
        head = math.fsum(1.0 / (0.25 + x * x) for x in g[g <= u])
        return table.b1_total - head
    head = math.fsum((0.25 + x * x) ** (-k) for x in tail_g)
    ueff = max(u, U)
    y = math.log(table.qstar * ueff / _TWO_PI)
    m = 2 * k - 1
    tail = table.weight * (y + 1.0 / m) / (2.0 * m * math.pi * ueff ** m)
    return head + tail


@dataclass(frozen=True)
class SpanDelta:
    S: float        # explicit span 2 * sum over gamma <= u of (1/4+g^2)^(-1/2)
    delta: float    # constant term of the span's large-u expansion
    n_used: int     # ordinates behind the delta estimate


def _span_main(table: ZeroTable, t: np.ndarray) -> np.ndarray:
    lt = np.log(t)
    a_chi = math.log(table.qstar / _TWO_PI)
    return table.weight * (lt * lt / (2.0 * math.pi) + a_chi * lt / math.pi)


def span_and_delta(table: ZeroTable, u: float) -> SpanDelta:
    """S(u) plus an estimate of the constant in its smooth expansion,
    taken as the median residual over the table's top decade (the median
    rides out both the jump discontinuities and the slow main-term
    drift).

    Sampling the running sum right at a zero lands just after a jump,
    which sits half a jump above the phase-averaged residual; the
    long-run counting offset itself is folded into the constant by
    partial summation. Subtracting half of each sample's own jump
    removes that bias, and brings the estimate within a few 1e-5 of the
    level the residual actually oscillates about."""
    g = table.gammas
    if u > g[-1]:
        raise ZeroDataError(
            f"{table.label}: S({u:g}) needs zeros beyond the table end "
            f"{g[-1]:g}")
    s_u = 2.0 * math.fsum(1.0 / math.sqrt(0.25 + x * x) for x in g[g <= u])
    half_jump = 1.0 / np.sqrt(0.25 + g * g)
    cum = 2.0 * np.cumsum(half_jump)
    top = g >= g[-1] / 10.0
    resid = cum[top] - _span_main(table, g[top]) - half_jump[top]
    return SpanDelta(S=s_u, delta=float(np.median(resid)),
                     n_used=int(np.count_nonzero(top)))


@dataclass(frozen=True)
class CharTailStats:
    label: str
    qstar: int
    weight: int
    alpha: float
    b: tuple[float, ...]     # table-level b_k(u), k = 1..Kmax
    n_zeros: int
    S: float
    y: float
    delta: float
    r2: float                # single-series b_2/b_1^2
    T_single: float          # convergence radius as a lone series
    T_effective: float       # radius inside this race's normalization


@dataclass(frozen=True)
class TailStats:
    race: str
    u: float
    Kmax: int
    B: tuple[float, ...]     # B_k = sum over characters alpha^(2k) b_k
    R: tuple[float, ...]     # R_k = B_k / B_1^k
    sigma_u: float
    sigma0: float
    beta0: float             # R_2 evaluated at u = 0
    S: float                 # alpha-weighted explicit span
    n_zeros: int
    T: float
    per_char: tuple[CharTailStats, ...]

    @property
    def b1(self) -> float:
        return self.B[0]


def resolve_table(entry: RaceEntry,
                  tables: dict[str, ZeroTable] | None = None) -> ZeroTable:
    """The zero table an entry draws from: an explicit override wins,
    then a file path, then the bundled set."""
    if tables and entry.label in tables:
        return tables[entry.label]
    if os.sep in entry.table or entry.table.endswith(".txt"):
        return load_zeros(entry.table, qstar=entry.qstar, label=entry.label)
    return bundled_table(entry.table)


def _t_single(y: float, r2: float) -> float:
    # the tail asymptotics of b_1 and b_2 make (y+1/3)/(6(y+1)r_2) equal
    # to b_1 u^2 / 2, which is where the first oscillatory-kernel zero
    # pinches the transform's log expansion
    if not (y + 1.0 / 3.0 > 0.0 and r2 > 0.0):
        return float("nan")
    return _J1 * math.sqrt((y + 1.0 / 3.0) / (6.0 * (y + 1.0) * r2))


def aggregate_stats(race: RaceSpec, u: float, Kmax: int = 8,
                    tables: dict[str, ZeroTable] | None = None) -> TailStats:
    """All tail statistics of a race at truncation height u.

    B_k sums alpha^(2k) b_k over the race's characters (merged tables
    already cover conjugate pairs). The convergence radius T is the
    smallest per-character radius after rescaling each one into the
    race's own variance normalization.
    """
    if Kmax < 2:
        raise ValueError("Kmax must be at least 2")
    per = []
    b10 = []
    b20 = []
    for e in race.characters:
        t = resolve_table(e, tables)
        b = tuple(tail_bk(t, u, k) for k in range(1, Kmax + 1))
        sd = span_and_delta(t, min(u, t.last_zero))
        if u > t.last_zero:
            warnings.warn(
                f"{e.label}: span frozen at table end {t.last_zero:g} < "
                f"u={u:g}", stacklevel=2)
        y = math.log(t.qstar * u / _TWO_PI) if u > 0.0 else float("-inf")
        # single-series ratios: the merged table's b_k is weight times the
        # per-member value, so r_k picks up weight^(k-1)
        r2 = t.weight * b[1] / (b[0] * b[0])
        per.append(CharTailStats(
            label=e.label, qstar=t.qstar, weight=t.weight, alpha=e.alpha,
            b=b, n_zeros=t.count(u), S=sd.S, y=y, delta=sd.delta, r2=r2,
            T_single=_t_single(y, r2), T_effective=float("nan")))
        if t.b1_total is not None:
            b10.append(t.b1_total)
        else:
            b10.append(tail_bk(t, 0.0, 1))
        b20.append(tail_bk(t, 0.0, 2))
    B = tuple(
        math.fsum(p.alpha ** (2 * k) * p.b[k - 1] for p in per)
        for k in range(1, Kmax + 1))
    if B[0] <= 0.0:
        raise ZeroDataError(f"race {race.name or race.q}: b_1 sum is zero")
    R = tuple(bk / B[0] ** k for k, bk in enumerate(B, start=1))
    B1_0 = math.fsum(e.alpha ** 2 * b for e, b in zip(race.characters, b10))
    B2_0 = math.fsum(e.alpha ** 4 * b for e, b in zip(race.characters, b20))
    # effective radius per character: alpha^2 b_1(chi) of the limiting
    # series against the race's own B_1
    per2 = []
    for p in per:
        b1_chi = p.b[0] / p.weight
        t_eff = p.T_single * math.sqrt(B[0] / (p.alpha ** 2 * b1_chi)) \
            if p.alpha > 0 else float("inf")
        per2.append(CharTailStats(
            label=p.label, qstar=p.qstar, weight=p.weight, alpha=p.alpha,
            b=p.b, n_zeros=p.n_zeros, S=p.S, y=p.y, delta=p.delta, r2=p.r2,
            T_single=p.T_single, T_effective=t_eff))
    t_vals = [p.T_effective for p in per2]
    T = float("nan") if any(math.isnan(t) for t in t_vals) else min(t_vals)
    return TailStats(
        race=race.name, u=float(u), Kmax=Kmax, B=B, R=R,
        sigma_u=math.sqrt(2.0 * B[0]), sigma0=math.sqrt(2.0 * B1_0),
        beta0=B2_0 / (B1_0 * B1_0),
        S=math.fsum(p.alpha * p.S for p in per2),
        n_zeros=sum(p.n_zeros for p in per2), T=T, per_char=tuple(per2))


def moment_ratios(stats: TailStats) -> tuple[float, float, float, float]:
    """Even-moment ratios of the limiting distribution against a Gaussian
    of the same variance, through the eighth moment. Departures from 1
    measure how far the race density is from its normal approximation."""
    r2, r3, r4 = stats.R[1], stats.R[2], stats.R[3]
    return (
        1.0,
        1.0 - r2 / 2.0,
        1.0 - 3.0 * r2 / 2.0 + 2.0 * r3 / 3.0,
        1.0 - 3.0 * r2 + 3.0 * r2 * r2 / 4.0 + 8.0 * r3 / 3.0
        - 11.0 * r4 / 8.0,
    )


def montgomery_bound(v: float, stats) -> float:
    """Upper bound on log E(v) from exponential-moment inequalities.

    Always applies the full-spectrum Gaussian bound -v^2/(2 sigma_0^2);
    any supplied truncation with explicit span S(u) <= v sharpens it to
    -(v - S)^2 / (2 sigma_u^2). The tightest applicable bound wins.
    """
    if not v >= 0.0:
        raise ValueError(f"v must be >= 0, got {v!r}")
    if v == 0.0:
        return 0.0
    if isinstance(stats, TailStats):
        stats = (stats,)
    best = math.inf
    for st in stats:
        best = min(best, -v * v / (2.0 * st.sigma0 * st.sigma0))
        if st.u > 0.0 and v >= st.S and st.sigma_u > 0.0:
            best = min(best, -(v - st.S) ** 2 / (2.0 * st.sigma_u ** 2))
    if not math.isfinite(best):
        raise ValueError("no stats supplied")
    return best

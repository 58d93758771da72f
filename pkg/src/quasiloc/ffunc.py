"""Decay functions F(r) = (1+r)^{-s}, optionally weighted by e^{-r}, on Z and Z^2.

Every infinite lattice sum is returned as a :class:`TailBound`: an exactly
summed finite part plus a rigorous upper bound on the remainder obtained by
comparing lattice points with the unit squares (or unit intervals) around
them.  Values can carry a common logarithmic scale so that sums far below
the double-precision range stay representable.

Tail comparison in two dimensions.  For a lattice point y the unit square
centred at y lies inside the annulus ``| |z| - |y| | <= sqrt(2)/2``.  Since F
is non-increasing, ``F(|y|) <= F(|z| - sqrt(2)/2)`` on that square, which gives

    sum_{|y| >= R} F(|y|) <= 2 pi int_{R - sqrt 2}^inf (v + sqrt(2)/2) F(v) dv

for R >= sqrt 2.  Both families admit closed forms for the right-hand side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError

SQRT2 = math.sqrt(2.0)
HALF_DIAG = SQRT2 / 2.0
# constant appearing in the decay estimate for the weighted tail function
DECAY_CONSTANT = 4.0 * math.pi * math.exp(SQRT2)


@dataclass(frozen=True)
class FFunction:
    """``F(r) = (1+r)^{-s}``, times ``e^{-r}`` when ``weighted``; lattice exponent ``nu``."""

    s: float
    weighted: bool = False
    nu: int = 2

    def __post_init__(self):
        if self.nu not in (1, 2):
            raise DomainError("nu must be 1 or 2")
        if self.s < 0:
            raise DomainError("base exponent must be non-negative")

    def log(self, r):
        r = np.asarray(r, dtype=float)
        out = -self.s * np.log1p(r)
        if self.weighted:
            out = out - r
        return out

    def __call__(self, r):
        return np.exp(self.log(r))

    def base(self) -> "FFunction":
        """The unweighted member of the same family."""
        return FFunction(self.s, False, self.nu)

    def with_weight(self) -> "FFunction":
        return FFunction(self.s, True, self.nu)

    @property
    def summable(self) -> bool:
        return self.weighted or self.s > self.nu

    def require_summable(self):
        if not self.summable:
            raise DivergenceError(
                f"sum of (1+r)^-{self.s} over Z^{self.nu} diverges (need s > {self.nu})")

    def to_json(self) -> dict:
        return {"s": self.s, "weighted": self.weighted, "nu": self.nu}

    @classmethod
    def from_json(cls, data: dict) -> "FFunction":
        return cls(float(data["s"]), bool(data.get("weighted", False)), int(data.get("nu", 2)))


@dataclass(frozen=True)
class TailBound:
    """Enclosure ``[partial_sum, partial_sum + tail_upper]``, scaled by ``exp(log_scale)``."""

    partial_sum: float
    tail_upper: float
    cut_radius: int
    log_scale: float = 0.0

    def __post_init__(self):
        if not self.tail_upper >= 0:
            raise DomainError("tail_upper must be non-negative")

    @property
    def lower(self) -> float:
        return self.partial_sum * math.exp(self.log_scale)

    @property
    def upper(self) -> float:
        return (self.partial_sum + self.tail_upper) * math.exp(self.log_scale)

    @property
    def log_upper(self) -> float:
        total = self.partial_sum + self.tail_upper
        return -math.inf if total == 0 else math.log(total) + self.log_scale

    @property
    def log_lower(self) -> float:
        return -math.inf if self.partial_sum == 0 else math.log(self.partial_sum) + self.log_scale

    def contains(self, value: float, rel: float = 1e-12) -> bool:
        return self.lower * (1 - rel) <= value <= self.upper * (1 + rel)

    def to_json(self) -> dict:
        return {"partial_sum": self.lower, "tail_upper": self.upper - self.lower,
                "cut_radius": self.cut_radius}


# ---------------------------------------------------------------- lattice sums

def _rows(R: int, nu: int):
    """Yield ``(multiplicity, radii)`` for the lattice points with ``|y| <= R``."""
    if nu == 1:
        yield 1, np.array([0.0])
        yield 2, np.arange(1, R + 1, dtype=float)
        return
    R2 = R * R
    for x in range(0, R + 1):
        ymax = math.isqrt(R2 - x * x)
        ys = np.arange(-ymax, ymax + 1, dtype=float)
        yield (1 if x == 0 else 2), np.hypot(float(x), ys)


def shell_sum(F: FFunction, t: float, R: int, log_scale: float = 0.0) -> float:
    """``exp(-log_scale) * sum_{t <= |y| <= R} F(|y|)``, summed row by row with fsum."""
    parts = []
    for mult, r in _rows(R, F.nu):
        r = r[r >= t - 1e-12] if t > 0 else r
        if r.size:
            parts.append(mult * float(np.sum(np.exp(F.log(r) - log_scale))))
    return math.fsum(parts)


def _log_tail_integral(F: FFunction, a: float) -> float:
    """log of ``2 pi int_a^inf (v + sqrt(2)/2) F(v) dv`` for a >= 0 (two dimensions)."""
    c = HALF_DIAG
    if F.weighted:
        # (1+v)^{-s} <= (1+a)^{-s}; int_a^inf (v+c) e^{-v} dv = e^{-a} (a + c + 1)
        return math.log(2 * math.pi) - F.s * math.log1p(a) - a + math.log(a + c + 1)
    F.require_summable()
    s = F.s
    # int (1+v)^{1-s} + (c-1)(1+v)^{-s}
    val = (1 + a) ** (2 - s) / (s - 2) + (c - 1) * (1 + a) ** (1 - s) / (s - 1)
    return math.log(2 * math.pi * val)


def _log_tail_1d(F: FFunction, n0: int) -> float:
    """log of ``2 int_{n0-1}^inf F`` which bounds ``sum_{|n| >= n0} F(|n|)`` for n0 >= 1."""
    a = float(n0 - 1)
    if F.weighted:
        return math.log(2.0) - F.s * math.log1p(a) - a
    F.require_summable()
    return math.log(2.0 / (F.s - 1)) + (1 - F.s) * math.log1p(a)


def log_tail_from(F: FFunction, t: float) -> float:
    """log of a rigorous upper bound on ``sum_{|y| >= t} F(|y|)``.

    Valid for t >= 2 in two dimensions and t >= 1 in one dimension.
    """
    if F.nu == 1:
        if t < 1:
            raise DomainError("one-dimensional tail needs t >= 1")
        return _log_tail_1d(F, math.ceil(t - 1e-12))
    if t < 2:
        raise DomainError("two-dimensional tail needs t >= 2")
    return _log_tail_integral(F, t - SQRT2)


def _enclose(F: FFunction, t: float, cut: int, log_scale: float) -> TailBound:
    """Sum over ``t <= |y| <= cut`` plus the tail beyond ``cut``."""
    partial = shell_sum(F, t, cut, log_scale)
    if F.nu == 1:
        log_tail = log_tail_from(F, cut + 1)
    else:
        log_tail = _tail_strictly_beyond(F, cut)
    return TailBound(partial, math.exp(log_tail - log_scale), cut, log_scale)


def _tail_strictly_beyond(F: FFunction, R: int) -> float:
    """log bound on ``sum_{|y| > R} F(|y|)`` in two dimensions (R >= 1)."""
    # the nearest lattice radius above R is at least sqrt(R^2 + 1)
    return _log_tail_integral(F, math.sqrt(R * R + 1.0) - SQRT2)


def f_norm(F: FFunction, cut: int) -> TailBound:
    """Enclosure of ``||F|| = sup_x sum_y F(d(x,y))``."""
    if cut < 1:
        raise DomainError("cut must be >= 1")
    F.require_summable()
    return _enclose(F, 0.0, int(cut), 0.0)


def default_cut(F: FFunction, t: float) -> int:
    """A cut radius making the tail of ``G_F(t)`` negligible relative to its head."""
    t0 = int(math.ceil(t))
    if F.weighted:
        return t0 + 45
    return max(t0 + 200, 2 * t0)


def g_f(F: FFunction, t: float, cut: int | None = None) -> TailBound:
    """Enclosure of ``G_F(t) = sup_x sum_{d(x,y) >= t} F(d(x,y))``.

    The result is scaled by ``log F(t)`` so very small values do not underflow.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    F.require_summable()
    if cut is None:
        cut = default_cut(F, t)
    if cut < t:
        raise DomainError(f"cut ({cut}) must be >= t ({t})")
    if cut < 1:
        raise DomainError("cut must be >= 1")
    return _enclose(F, t, int(cut), float(F.log(t)))


def g_f_upper(F: FFunction, t: float) -> float:
    """Convenience: certified upper bound on ``G_F(t)``; zero for ``t = inf``."""
    if math.isinf(t):
        return 0.0
    return g_f(F, max(t, 0.0)).upper


# ------------------------------------------------------------ convolution constant

def conv_partial(F: FFunction, v, cut: int, center=(0, 0)) -> float:
    """``sum_z F(|z|) F(|v-z|) / F(|v|)`` over lattice z with ``|z - center| <= cut``."""
    v = np.asarray(v, dtype=float).reshape(-1)
    center = np.asarray(center, dtype=float).reshape(-1)
    if F.nu == 1:
        zs = np.arange(-cut, cut + 1, dtype=float)[:, None] + np.round(center)
    else:
        ax = np.arange(-cut, cut + 1, dtype=float)
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        keep = gx**2 + gy**2 <= cut * cut
        zs = np.stack([gx[keep], gy[keep]], axis=1) + np.round(center)
    dz = np.sqrt((zs**2).sum(1))
    dvz = np.sqrt(((zs - v) ** 2).sum(1))
    dv = float(np.sqrt((v**2).sum()))
    logs = F.log(dz) + F.log(dvz) - F.log(dv)
    return math.fsum(np.exp(logs))


def _scan_points(cut: int, nu: int):
    ks = sorted({int(round(k)) for k in np.geomspace(1, max(cut, 1), 24)} | {0})
    pts = [(k,) if nu == 1 else (k, 0) for k in ks]
    if nu == 2:
        pts += [(k, k) for k in ks if k and k * SQRT2 <= cut]
    return pts


def conv_constant(F: FFunction, cut: int) -> TailBound:
    """Enclosure of the convolution constant ``C_F``.

    Lower end: the largest truncated convolution sum over a scan of separations.
    Upper end: ``2^s ||F_unweighted||``, since
    ``(1+|v|)/((1+|z|)(1+|v-z|)) <= 1/(1+|z|) + 1/(1+|v-z|)``, convexity of
    ``x -> x^s`` and ``e^{|v| - |z| - |v-z|} <= 1``.
    """
    if cut < 1:
        raise DomainError("cut must be >= 1")
    base = F.base()
    base.require_summable()
    lower = 0.0
    for v in _scan_points(cut, F.nu):
        mid = tuple(round(c / 2) for c in v)
        lower = max(lower, conv_partial(F, v, cut, center=mid))
    upper = 2.0**F.s * f_norm(base, cut).upper
    return TailBound(lower, max(upper - lower, 0.0), cut)


_CF_CACHE: dict = {}


def cf_bounds(F: FFunction, cut: int = 64) -> tuple[float, float]:
    """Cached ``(lower, upper)`` for ``C_F``."""
    key = (F, cut)
    if key not in _CF_CACHE:
        tb = conv_constant(F, cut)
        _CF_CACHE[key] = (tb.lower, tb.upper)
    return _CF_CACHE[key]


# ------------------------------------------------------------ decay estimate

def decay_log_rhs(F: FFunction, m: float) -> float:
    """log of ``C F(m - sqrt 2) m e^{-m}`` with F the unweighted base function."""
    return math.log(DECAY_CONSTANT) + float(F.base().log(m - SQRT2)) + math.log(m) - m


def gf_decay_check(F: FFunction, m_lo: int, m_hi: int) -> list[dict]:
    """Compare the enclosure of ``G_{F_r}(m)`` with the decay estimate for each m.

    Comparisons are made between logarithms.  Each row carries both sides and
    the log margin (positive means the inequality holds).
    """
    if not F.weighted:
        raise DomainError("the decay estimate concerns the weighted function F_r")
    if F.nu != 2:
        raise DomainError("the decay estimate is stated on Z^2")
    if m_lo <= SQRT2:
        raise DomainError("m_lo must exceed sqrt(2)")
    rows = []
    for m in range(int(m_lo), int(m_hi) + 1):
        lhs = g_f(F, m).log_upper
        rhs = decay_log_rhs(F, m)
        rows.append({"m": m, "log_lhs": lhs, "log_rhs": rhs, "log_margin": rhs - lhs,
                     "satisfied": lhs <= rhs})
    return rows


# ------------------------------------------------------------ moment condition

@dataclass
class TildeTable:
    """Tabulated majorant ``F~(r)`` on the integer grid ``r = 0..len-1``."""

    r: np.ndarray
    values: np.ndarray
    alpha: float
    meta: dict = field(default_factory=dict)

    def __call__(self, r):
        idx = np.clip(np.floor(np.asarray(r)).astype(int), 0, len(self.r) - 1)
        return self.values[idx]


def _moment_tail(F: FFunction, alpha: float, cut: int) -> float:
    """Upper bound on ``sum_{n > cut} (1+n)^{2nu+1} G_F(n)^alpha``."""
    p_w = 2 * F.nu + 1
    n1 = cut + 1
    if F.nu == 2 and n1 < 3:
        raise DomainError("cut too small for the analytic tail")

    def log_term(n):
        return p_w * math.log1p(n) + alpha * log_tail_from(F, n)

    if F.weighted:
        # consecutive-term ratio is bounded by its value at n1 because each factor
        # of the ratio decreases in n; sum as a geometric series
        c = HALF_DIAG if F.nu == 2 else 0.0
        a0 = n1 - (SQRT2 if F.nu == 2 else 1.0)
        log_q = (p_w * math.log((n1 + 2.0) / (n1 + 1.0)) - alpha
                 + alpha * math.log((a0 + c + 2) / (a0 + c + 1)))
        if log_q >= 0:
            raise DivergenceError("cut too small for a geometric tail; increase cut")
        return math.exp(log_term(n1)) / (1 - math.exp(log_q))
    F.require_summable()
    drop = F.nu  # the tail of G_F(n) decays like (1+n)^{nu - s}
    p = alpha * (F.s - drop) - p_w
    if p <= 1:
        raise DivergenceError(
            f"moment sum diverges: alpha*(s-nu) - (2nu+1) = {p:.3g} must exceed 1")
    shift = SQRT2 if F.nu == 2 else 1.0
    if F.nu == 2:
        lead = 2 * math.pi / (F.s - 2)
    else:
        lead = 2.0 / (F.s - 1)
    kappa = (2.0 + cut) / (2.0 + cut - shift)
    # term(n) <= lead^alpha kappa^{p_w} (1+n-shift)^{-p}; integrate from n1-1
    base = 1 + (n1 - 1) - shift
    return lead**alpha * kappa**p_w * base ** (1 - p) / (p - 1)


def moment_and_tilde(F: FFunction, alpha: float = 0.5, cut: int = 60):
    """Enclosure of ``sum_{n>=0} (1+n)^{2nu+1} G_F(n)^alpha`` and the majorant table.

    The table holds ``F~(r) = max{F(r/3), sum_{n >= floor(r/3)} (1+n)^{2nu+1} G_F(n)^alpha}``
    for integer r in ``[0, 3 cut]``, using upper enclosures throughout.
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    F.require_summable()
    p_w = 2 * F.nu + 1
    lo_terms, hi_terms = [], []
    for n in range(cut + 1):
        tb = g_f(F, n)
        lo_terms.append((1 + n) ** p_w * tb.lower**alpha)
        hi_terms.append((1 + n) ** p_w * tb.upper**alpha)
    tail = _moment_tail(F, alpha, cut)
    lower = math.fsum(lo_terms)
    upper = math.fsum(hi_terms) + tail
    total = TailBound(lower, upper - lower, cut)
    # suffix sums of upper terms give a non-increasing second branch
    suffix = np.empty(cut + 2)
    suffix[cut + 1] = tail
    for n in range(cut, -1, -1):
        suffix[n] = suffix[n + 1] + hi_terms[n]
    r = np.arange(0, 3 * cut + 1)
    k = r // 3
    values = np.maximum(F(r / 3.0), suffix[k])
    values = np.minimum.accumulate(values)
    return total, TildeTable(r, values, alpha, {"cut": cut, "tail": tail})

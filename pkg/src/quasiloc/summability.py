"""Cone geometry and certified bounds for the boundary summability condition on Z^2.

Frame: ``Gamma2`` has its tip at ``O`` and half-angle ``alpha``; ``Gamma1`` has
the same axis, tip ``O + d2 * axis`` and half-angle ``beta < alpha``.  The
auxiliary cones are ``Gamma2'`` (tip ``O - d2' * axis``, half-angle
``alpha + eps``) and ``Gamma1'`` (tip ``O + (d2 + d1) * axis``, half-angle
``beta - eps``).  The strip ``S = Gamma2' - Gamma1'`` is where the boundary
automorphism acts.

The quantity to bound is

    sum over pairs (x, y), with x in Gamma1 and y outside Gamma2, or x in
    Gamma2 - Gamma1 and y outside it, of sum_m G(m) f(m, x, y),

with ``G = G_{F_r}`` for a weighted F-function.  Writing
``T(k) = sum_{m >= k} G(m)``, each term region X contributes
``|X| sup_t ||Phi(X;t)|| T(ceil d(S^c, X))`` once per ordered pair it
carries.  Pairs whose x lies within the first ``K`` shells are summed exactly
(with rigorous upper bounds for T and a continuous lower bound for the
distances); the remaining shells are bounded in closed form.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DomainError, GeometryInfeasibleError, TruncationError
from .ffunc import DECAY_CONSTANT, FFunction, g_f
from .interaction import Interaction
from .lattice import Cone, LatticeConfig, ball_size

N0_CAP = 10**6
E = math.e


# ------------------------------------------------------------------ configuration


@dataclass(frozen=True)
class ConePairConfig:
    """Angles in radians; distances in lattice units.

    ``d_phi``, ``c_sharp`` and ``m_sup`` describe the interaction (range,
    largest support size, largest term norm).  ``apex`` and ``axis_angle``
    place the tip of Gamma2 and the common axis.
    """

    alpha: float
    beta: float
    eps: float
    d2: float
    d1: float
    d2p: float
    d_phi: float = 1.0
    c_sharp: int = 2
    m_sup: float = 1.0
    apex: tuple = (0.0, 0.0)
    axis_angle: float = 0.0

    def __post_init__(self):
        if not self.alpha > self.beta:
            raise GeometryInfeasibleError(
                "Gamma2 must open wider than Gamma1 (alpha > beta); equal angles give "
                "parallel boundaries")
        if not 0 < self.eps < self.beta:
            raise DomainError("eps must satisfy 0 < eps < beta")
        if not self.alpha + self.eps < math.pi / 2:
            raise DomainError("alpha + eps must stay below pi/2")
        for name in ("d2", "d1", "d2p", "d_phi"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.c_sharp < 1 or self.m_sup < 0:
            raise DomainError("c_sharp must be >= 1 and m_sup >= 0")

    @property
    def axis(self) -> np.ndarray:
        return np.array([math.cos(self.axis_angle), math.sin(self.axis_angle)])

    def cones(self) -> dict:
        o = np.asarray(self.apex, dtype=float)
        a = self.axis
        mk = lambda tip, h: Cone(tuple(tip), self.axis_angle, h)  # noqa: E731
        return {
            "gamma2": mk(o, self.alpha),
            "gamma1": mk(o + self.d2 * a, self.beta),
            "gamma2p": mk(o - self.d2p * a, self.alpha + self.eps),
            "gamma1p": mk(o + (self.d2 + self.d1) * a, self.beta - self.eps),
        }

    def to_json(self) -> dict:
        out = asdict(self)
        out["apex"] = list(self.apex)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ConePairConfig":
        data = dict(data)
        if "apex" in data:
            data["apex"] = tuple(data["apex"])
        return cls(**data)


def default_eps(alpha: float, beta: float) -> float:
    """Half of the available angular slack."""
    return min(beta / 2, (math.pi / 2 - alpha) / 2)


def default_offsets(alpha: float, beta: float, eps: float, d_phi: float) -> tuple[float, float]:
    """``(d1, d2')`` large enough that both strip margins exceed ``2 d_phi`` near the tips."""
    d2p = (2 * d_phi + 1) / math.sin(alpha + eps)
    d1 = (2 * d_phi + 1) / math.sin(beta - eps)
    return d1, d2p


# ------------------------------------------------------------------ geometry


def d_gamma1(cfg: ConePairConfig, n):
    """Arc length along a boundary ray of Gamma1 from its tip to the circle ``|x - O| = n``.

    Zero where the circle does not reach the ray beyond the tip.
    """
    n = np.asarray(n, dtype=float)
    disc = n**2 - cfg.d2**2 * (1 - math.cos(cfg.beta) ** 2)
    val = np.sqrt(np.clip(disc, 0.0, None)) - cfg.d2 * math.cos(cfg.beta)
    return np.where((disc >= 0) & (val > 0), val, 0.0)


def gamma_terms(cfg: ConePairConfig) -> tuple[float, float]:
    """``(gamma0, d_gamma0)``.

    The line through the tip of Gamma1' perpendicular to its boundary ray meets
    the boundary ray of Gamma1 at distance ``d_gamma0`` from the tip of Gamma1;
    ``gamma0`` is the length of that perpendicular segment.
    """
    b, e = cfg.beta, cfg.eps
    ray = np.array([math.cos(b), math.sin(b)])
    normal = np.array([-math.sin(b - e), math.cos(b - e)])
    # tip1 + l * ray = tip1p + s * normal, tip1p - tip1 = (d1, 0) in the axis frame
    M = np.column_stack([ray, -normal])
    l, s = np.linalg.solve(M, np.array([cfg.d1, 0.0]))
    return float(abs(s)), float(l)


def gamma_of_n(cfg: ConePairConfig, n):
    g0, dg0 = gamma_terms(cfg)
    return g0 + (d_gamma1(cfg, n) - dg0) * math.sin(cfg.eps)


@dataclass
class GeometryReport:
    d0: float
    n0: int
    shell_width: float
    gamma0: float
    d_gamma0: float
    d_gamma1_to_gamma2c: float
    d_gamma2_to_gamma2pc: float
    samples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    def shell_radius(self, k: int) -> float:
        """Inner radius of shell k; shells start at ``n0``."""
        return self.n0 + k * self.shell_width


def build_geometry(cfg: ConePairConfig, n_samples=(0, 5, 10, 20, 50, 100, 200)) -> GeometryReport:
    """Distances, ``n0``, ``d0`` and the shell width for a cone configuration.

    ``n0`` is the smallest integer radius at which both strip margins
    (towards the outside of Gamma2' and towards Gamma1') exceed ``2 d_phi``,
    taken among radii where the ``gamma(n)`` formula applies, i.e. where the
    circle has passed the foot point ``d_gamma0``.
    """
    se = math.sin(cfg.eps)
    g0, dg0 = gamma_terms(cfg)
    base = cfg.d2p * math.sin(cfg.alpha + cfg.eps)
    target = 2 * cfg.d_phi

    # first radius at which the gamma formula applies
    lo = 0
    hi = 1
    while d_gamma1(cfg, hi) < dg0:
        hi *= 2
        if hi > N0_CAP:
            raise GeometryInfeasibleError("foot point beyond the radius cap")
    while lo < hi:
        mid = (lo + hi) // 2
        if d_gamma1(cfg, mid) >= dg0:
            hi = mid
        else:
            lo = mid + 1
    start = lo

    def d0_of(n):
        return min(base + n * se, float(gamma_of_n(cfg, n)))

    # d0_of is non-decreasing beyond ``start``; bisect the first n with d0 > target
    hi = max(start, 1)
    while d0_of(hi) <= target:
        hi *= 2
        if hi > N0_CAP:
            raise GeometryInfeasibleError(
                f"no admissible n0 below {N0_CAP}: the cone boundaries separate too slowly")
    lo = start
    while lo < hi:
        mid = (lo + hi) // 2
        if d0_of(mid) > target:
            hi = mid
        else:
            lo = mid + 1
    n0 = lo
    samples = [{"n": int(n), "d_gamma1": float(d_gamma1(cfg, n)),
                "gamma": float(gamma_of_n(cfg, n)) if d_gamma1(cfg, n) >= dg0 else None,
                "outer_margin": base + n * se}
               for n in n_samples]
    return GeometryReport(d0=d0_of(n0), n0=int(n0), shell_width=1.0 / se, gamma0=g0,
                          d_gamma0=dg0, d_gamma1_to_gamma2c=cfg.d2 * math.sin(cfg.alpha),
                          d_gamma2_to_gamma2pc=base, samples=samples)


# ------------------------------------------------------------------ G sums


def shell_tail(k: int, F: FFunction) -> float:
    """Closed-form bound ``C F(0) e^{-k+1} ((e-1)k + 1) / (e-1)^2`` on ``sum_{m >= k} G_{F_r}(m)``."""
    if k < 2:
        raise DomainError("the bound holds for k >= 2")
    if not F.weighted or F.nu != 2:
        raise DomainError("the bound concerns a weighted F-function on Z^2")
    F0 = float(F.base()(0.0))
    return DECAY_CONSTANT * F0 * math.exp(-k + 1) * ((E - 1) * k + 1) / (E - 1) ** 2


def log_shell_tail(k: int, F: FFunction) -> float:
    F0 = float(F.base()(0.0))
    return (math.log(DECAY_CONSTANT * F0) + (-k + 1) + math.log((E - 1) * k + 1)
            - 2 * math.log(E - 1))


def tail_of_tails(K: int, F: FFunction) -> float:
    """``sum_{k >= K} shell_tail(k)`` in closed form (K >= 2)."""
    if K < 2:
        raise DomainError("K must be >= 2")
    q = math.exp(-1.0)
    s0 = q ** (K - 1) / (1 - q)
    s1 = q ** (K - 1) * (K * (1 - q) + q) / (1 - q) ** 2
    F0 = float(F.base()(0.0))
    return DECAY_CONSTANT * F0 * ((E - 1) * s1 + s0) / (E - 1) ** 2


_T_CACHE: dict = {}


def t_table(F: FFunction, m_max: int = 80) -> np.ndarray:
    """Upper bounds on ``T(k) = sum_{m >= k} G(m)`` for k = 0..m_max+1."""
    key = (F, m_max)
    if key not in _T_CACHE:
        G = np.array([g_f(F, m).upper for m in range(m_max + 1)])
        T = np.empty(m_max + 2)
        T[m_max + 1] = shell_tail(m_max + 1, F)
        for k in range(m_max, -1, -1):
            T[k] = T[k + 1] + G[k]
        _T_CACHE[key] = T
    return _T_CACHE[key]


def t_upper(F: FFunction, k: np.ndarray, m_max: int = 80) -> np.ndarray:
    T = t_table(F, m_max)
    k = np.asarray(k, dtype=int)
    out = np.empty(k.shape)
    inside = k <= m_max + 1
    out[inside] = T[np.clip(k[inside], 0, None)]
    far = ~inside
    if far.any():
        out[far] = [shell_tail(int(v), F) for v in k[far]]
    return out


# ------------------------------------------------------------------ interaction shapes


def interaction_shapes(phi: Interaction) -> list:
    """Translation classes of the term regions: ``[(offsets, |X| * max sup norm)]``.

    The certificate treats Phi as the translation-invariant interaction with
    these shapes; each shape keeps the largest norm seen among its copies.
    """
    best: dict = {}
    for X in phi.groups:
        c = np.array(X.sites, dtype=int).reshape(len(X), -1)
        if c.shape[1] != 2:
            raise DomainError("the summability certificate lives on Z^2")
        off = c - c.min(0)
        key = tuple(sorted(map(tuple, off.tolist())))
        val = len(X) * phi.sup_norm(X)
        best[key] = max(best.get(key, 0.0), val)
    return [(np.array(k), v) for k, v in sorted(best.items()) if v > 0]


def interaction_metadata(phi: Interaction) -> dict:
    shapes = interaction_shapes(phi)
    if not shapes:
        return {"d_phi": 0.0, "c_sharp": 0, "m_sup": 0.0}
    diam = max(float(np.sqrt(((o[:, None] - o[None]) ** 2).sum(-1)).max()) for o, _ in shapes)
    return {"d_phi": diam, "c_sharp": max(len(o) for o, _ in shapes),
            "m_sup": max(phi.sup_norm(X) for X in phi.groups)}


# ------------------------------------------------------------------ certificate


@dataclass
class SummabilityCertificate:
    finite_pair_sum: float
    ball_sum: float
    shell_sum_partial: float
    shell_tail_upper: float
    total_upper: float
    converged: bool
    shells: int
    geometry: dict
    config: dict
    cp_bound: float
    cp_lattice_max: int
    f_bound: float
    shell_rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    def shell_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "inner_radius", "outer_radius", "pairs", "contribution",
                    "analytic_bound"])
        for r in self.shell_rows:
            w.writerow([r["k"], f"{r['inner_radius']:.12g}", f"{r['outer_radius']:.12g}",
                        r["pairs"], f"{r['contribution']:.12e}", f"{r['analytic_bound']:.12e}"])
        return buf.getvalue()


def _zone_labels(cones: dict, pts: np.ndarray) -> np.ndarray:
    """0 for Gamma1, 1 for Gamma2 - Gamma1, 2 outside Gamma2."""
    in1 = cones["gamma1"].contains(pts)
    in2 = cones["gamma2"].contains(pts)
    return np.where(in1, 0, np.where(in2, 1, 2))


def _strip_distance(cones: dict, pts: np.ndarray) -> np.ndarray:
    """Lower bound on the lattice distance to the complement of ``Gamma2' - Gamma1'``.

    The Euclidean distance to the closed continuous complement never exceeds
    the distance to its lattice points.
    """
    out = cones["gamma2p"].distance_to_complement(pts)
    return np.minimum(out, cones["gamma1p"].distance(pts))


def _ray_length_in_annulus(cfg: ConePairConfig, r_in: float, r_out: float) -> tuple[float, float]:
    """Lengths of a Gamma2 ray and a Gamma1 ray inside ``r_in <= |x - O| <= r_out``."""
    l2 = max(r_out - max(r_in, 0.0), 0.0)
    l1 = float(d_gamma1(cfg, r_out) - d_gamma1(cfg, max(r_in, 0.0)))
    return l2, max(l1, 0.0)


def cp_bound(cfg: ConePairConfig, r_in: float, width: float, d_phi: float) -> float:
    """Upper bound on the number of ordered pairs (x, y) with x in one shell of
    Gamma2 - Gamma1, y outside it and ``|x - y| <= d_phi``.

    x lies within ``d_phi`` of a boundary ray point whose radius is within
    ``d_phi`` of the shell; lattice points within ``rho - sqrt(2)/2`` of a
    segment of length L number at most ``2 rho L + pi rho^2``.
    """
    l2, l1 = _ray_length_in_annulus(cfg, r_in - d_phi, r_in + width + d_phi)
    rho = d_phi + math.sqrt(2) / 2
    per_ray = lambda L: 2 * rho * L + math.pi * rho**2  # noqa: E731
    xs = 2 * per_ray(l2) + 2 * per_ray(l1)
    return xs * (ball_size(d_phi, 2) - 1)


def certify_anan(phi: Interaction, cfg: ConePairConfig, lattice: LatticeConfig,
                 F: FFunction | None = None, shells: int = 8, m_max: int = 80) -> SummabilityCertificate:
    """Certified upper bound on the boundary summability sum for ``phi`` and ``cfg``.

    Phi is read as a translation-invariant interaction through its term shapes
    (see :func:`interaction_shapes`).  The declared metadata in ``cfg`` must
    dominate the values measured from Phi.
    """
    F = F or FFunction(3.0, True, 2)
    if not F.weighted or F.nu != 2:
        raise DomainError("F must be a weighted F-function on Z^2")
    if shells < 2:
        raise DomainError("at least two shells are required")
    meta = interaction_metadata(phi)
    if meta["d_phi"] > cfg.d_phi + 1e-12 or meta["c_sharp"] > cfg.c_sharp \
            or meta["m_sup"] > cfg.m_sup * (1 + 1e-12):
        raise DomainError(f"interaction exceeds the declared metadata: {meta}")
    geo = build_geometry(cfg)
    cones = cfg.cones()
    w = geo.shell_width
    r_end = geo.shell_radius(shells)
    need = int(math.ceil(r_end + cfg.d_phi + np.abs(cfg.apex).max() + 1))
    if lattice.truncation_radius < need:
        raise TruncationError(f"truncation radius {lattice.truncation_radius} too small; "
                              f"need at least {need}")
    shapes = interaction_shapes(phi)
    f_bound = cfg.c_sharp * cfg.m_sup * 2.0 ** ball_size(cfg.d_phi, 2)
    cp = cp_bound(cfg, geo.shell_radius(shells), w, cfg.d_phi)
    notes = ["shells start at radius n0 so that the strip margins exceed k + 2 d_phi"]
    rows = [{"k": k, "inner_radius": geo.shell_radius(k), "outer_radius": geo.shell_radius(k + 1),
             "pairs": 0, "contribution": 0.0,
             "analytic_bound": cp_bound(cfg, geo.shell_radius(k), w, cfg.d_phi) * f_bound
             * float(t_upper(F, np.array([k]), m_max)[0])}
            for k in range(shells)]
    finite_pair = []
    ball = []
    per_shell = [[] for _ in range(shells)]
    if not shapes:
        return SummabilityCertificate(0.0, 0.0, 0.0, 0.0, 0.0, True, shells, geo.to_json(),
                                      cfg.to_json(), cp, 0, f_bound, rows, notes)

    o = np.asarray(cfg.apex, dtype=float)
    R = need
    ax = np.arange(int(math.floor(o[0])) - R, int(math.ceil(o[0])) + R + 1)
    ay = np.arange(int(math.floor(o[1])) - R, int(math.ceil(o[1])) + R + 1)
    gx, gy = np.meshgrid(ax, ay, indexing="ij")
    base_pts = np.stack([gx.ravel(), gy.ravel()], 1).astype(float)

    for offsets, weight in shapes:
        sites = [base_pts + off for off in offsets]
        labels = [_zone_labels(cones, p) for p in sites]
        # only translates whose sites touch at least two zones can carry pairs
        lab = np.stack(labels, 1)
        mixed = lab.min(1) != lab.max(1)
        if not mixed.any():
            continue
        lab = lab[mixed]
        pts = [p[mixed] for p in sites]
        dist = np.min(np.stack([_strip_distance(cones, p) for p in pts], 1), 1)
        k_min = np.ceil(dist - 1e-9).astype(int)
        T = t_upper(F, k_min, m_max)
        contrib = weight * T
        for i in range(len(offsets)):
            rad = np.hypot(*(pts[i] - o).T)
            for j in range(len(offsets)):
                if i == j:
                    continue
                li, lj = lab[:, i], lab[:, j]
                first = (li == 0) & (lj == 2)
                second = (li == 1) & (lj != 1)
                if first.any():
                    finite_pair.append(contrib[first])
                if second.any():
                    r = rad[second]
                    c = contrib[second]
                    in_ball = r <= geo.n0
                    ball.append(c[in_ball])
                    kk = np.floor((r[~in_ball] - geo.n0) / w - 1e-12).astype(int)
                    kk = np.maximum(kk, 0)
                    cc = c[~in_ball]
                    # shells from index ``shells`` on are covered by the closed-form tail
                    for k in np.unique(kk):
                        if k < shells:
                            per_shell[k].append(cc[kk == k])

    def fsum(parts):
        return math.fsum(np.concatenate(parts)) if parts else 0.0

    cp_lat = 0
    for k in range(shells):
        rows[k]["pairs"] = int(sum(len(p) for p in per_shell[k]))
        rows[k]["contribution"] = fsum(per_shell[k])
        cp_lat = max(cp_lat, rows[k]["pairs"])
    finite_pair_sum = fsum(finite_pair)
    ball_sum = fsum(ball)
    partial = math.fsum(r["contribution"] for r in rows)
    tail = cp * f_bound * tail_of_tails(shells, F)
    total = finite_pair_sum + ball_sum + partial + tail
    consistent = all(r["contribution"] <= r["analytic_bound"] * (1 + 1e-9) for r in rows)
    converged = bool(math.isfinite(tail) and math.isfinite(total) and consistent)
    if not consistent:
        notes.append("a computed shell exceeded its analytic bound")
    return SummabilityCertificate(finite_pair_sum, ball_sum, partial, tail, total, converged,
                                  shells, geo.to_json(), cfg.to_json(), cp, cp_lat, f_bound,
                                  rows, notes)


def doubling_check(phi: Interaction, cfg: ConePairConfig, lattice: LatticeConfig,
                   F: FFunction | None = None, shells: int = 4) -> dict:
    """Compare the certificates for K and 2K shells.

    A sound tail bound forces ``|total(2K) - total(K)| < tail(K)``.
    """
    a = certify_anan(phi, cfg, lattice, F, shells)
    b = certify_anan(phi, cfg, lattice, F, 2 * shells)
    change = abs(b.total_upper - a.total_upper)
    return {"shells": shells, "total_K": a.total_upper, "total_2K": b.total_upper,
            "tail_K": a.shell_tail_upper, "change": change,
            "within_tail": bool(change < a.shell_tail_upper), "converged": a.converged and b.converged}


def certify_theorem(phi: Interaction, gamma1: Cone, gamma2: Cone, lattice: LatticeConfig,
                    F: FFunction | None = None, shells: int = 8, d_phi: float | None = None,
                    c_sharp: int | None = None, m_sup: float | None = None,
                    d1: float | None = None, d2p: float | None = None):
    """Choose ``Gamma1' < Gamma1`` and ``Gamma2' > Gamma2`` and certify the summability sum.

    Returns ``(gamma1p, gamma2p, certificate)``.
    """
    if abs(math.remainder(gamma1.axis_angle - gamma2.axis_angle, 2 * math.pi)) > 1e-12:
        raise DomainError("the two cones must share their axis direction")
    alpha, beta = gamma2.half_angle, gamma1.half_angle
    if not alpha > beta:
        raise GeometryInfeasibleError(
            "cone boundaries are parallel or converging (need alpha > beta)")
    shift = np.asarray(gamma1.apex) - np.asarray(gamma2.apex)
    axis = np.array([math.cos(gamma2.axis_angle), math.sin(gamma2.axis_angle)])
    d2 = float(shift @ axis)
    if d2 <= 0 or abs(float(shift @ np.array([-axis[1], axis[0]]))) > 1e-9:
        raise DomainError("the tip of Gamma1 must lie on the axis, ahead of the tip of Gamma2")
    meta = interaction_metadata(phi)
    d_phi = d_phi if d_phi is not None else max(meta["d_phi"], 1.0)
    c_sharp = c_sharp if c_sharp is not None else max(meta["c_sharp"], 1)
    m_sup = m_sup if m_sup is not None else meta["m_sup"]
    eps = default_eps(alpha, beta)
    dd1, dd2p = default_offsets(alpha, beta, eps, d_phi)
    cfg = ConePairConfig(alpha, beta, eps, d2, d1 if d1 is not None else dd1,
                         d2p if d2p is not None else dd2p, d_phi, c_sharp, m_sup,
                         tuple(gamma2.apex), gamma2.axis_angle)
    cert = certify_anan(phi, cfg, lattice, F, shells)
    cones = cfg.cones()
    return cones["gamma1p"], cones["gamma2p"], cert


# ------------------------------------------------------------------ lattice cross-checks


def _grid(cfg: ConePairConfig, R: int):
    o = np.round(np.asarray(cfg.apex)).astype(int)
    ax = np.arange(o[0] - R, o[0] + R + 1)
    ay = np.arange(o[1] - R, o[1] + R + 1)
    gx, gy = np.meshgrid(ax, ay, indexing="ij")
    return gx, gy, np.stack([gx.ravel(), gy.ravel()], 1).astype(float)


def lattice_cone_distance(cfg: ConePairConfig, R: int = 80) -> float:
    """Brute-force ``d(Gamma1, Gamma2^c)`` over lattice points within the box of radius R."""
    cones = cfg.cones()
    gx, _, pts = _grid(cfg, R)
    in2 = cones["gamma2"].contains(pts).reshape(gx.shape)
    in1 = cones["gamma1"].contains(pts).reshape(gx.shape)
    edt = ndimage.distance_transform_edt(in2)
    return float(edt[in1].min())


def lattice_d_gamma1(cfg: ConePairConfig, n: float, R: int | None = None) -> float:
    """Lattice stand-in for ``d_Gamma1(n)``: farthest boundary site of Gamma1 from its tip
    among boundary sites inside the closed ball of radius n around the tip of Gamma2."""
    R = R or int(math.ceil(n)) + 2
    cones = cfg.cones()
    gx, _, pts = _grid(cfg, R)
    in1 = cones["gamma1"].contains(pts).reshape(gx.shape)
    interior = ndimage.binary_erosion(in1, border_value=1)
    boundary = (in1 & ~interior).ravel()
    o = np.asarray(cfg.apex, dtype=float)
    tip = np.asarray(cones["gamma1"].apex)
    r = np.hypot(*(pts - o).T)
    sel = boundary & (r <= n)
    if not sel.any():
        return 0.0
    return float(np.hypot(*(pts[sel] - tip).T).max())


def strip_margin_check(cfg: ConePairConfig, shells: int = 4, R: int | None = None) -> dict:
    """Spot-check ``d(x, S^c) >= k + 2 d_phi`` for lattice x in shell k of Gamma2 - Gamma1,
    with lattice distances from a Euclidean distance transform."""
    geo = build_geometry(cfg)
    cones = cfg.cones()
    R = R or int(math.ceil(geo.shell_radius(shells) + 4 * cfg.d_phi + cfg.d2p + 4))
    gx, _, pts = _grid(cfg, R)
    S = (cones["gamma2p"].contains(pts) & ~cones["gamma1p"].contains(pts)).reshape(gx.shape)
    edt = ndimage.distance_transform_edt(S).ravel()
    lab = _zone_labels(cones, pts)
    r = np.hypot(*(pts - np.asarray(cfg.apex)).T)
    worst = math.inf
    rows = []
    for k in range(shells):
        sel = (lab == 1) & (r > geo.shell_radius(k)) & (r <= geo.shell_radius(k + 1))
        if not sel.any():
            continue
        m = float(edt[sel].min())
        rows.append({"k": k, "min_distance": m, "required": k + 2 * cfg.d_phi})
        worst = min(worst, m - (k + 2 * cfg.d_phi))
    return {"rows": rows, "satisfied": bool(worst >= 0), "worst_margin": worst}


__all__ = ["ConePairConfig", "GeometryReport", "SummabilityCertificate", "build_geometry",
           "shell_tail", "log_shell_tail", "tail_of_tails", "t_table", "certify_anan",
           "certify_theorem", "doubling_check", "d_gamma1", "gamma_terms", "gamma_of_n", "default_eps",
           "default_offsets", "interaction_shapes", "interaction_metadata", "cp_bound",
           "lattice_cone_distance", "lattice_d_gamma1", "strip_margin_check"]

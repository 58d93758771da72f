"""Factorization of finite-volume dynamics across a cone sandwich.

Starting from an interaction Phi and nested zones ``G1' < G1 < G2 < G2'``, the
pipeline

1. drops the zone-crossing terms (``Phi0``) and collects their negatives (``Phi1``);
2. transforms ``Phi1`` with the dynamics of Phi at anchor time 1 (``Psi``);
3. splits ``Psi`` into its part conditioned on the strip ``S = G2' - G1'``
   (``Psi~``) and the boundary potential ``V = H_Psi - H_Psi~``;
4. solves for the interpolating unitary ``W(t)`` with generator
   ``tau^{Psi~}_{t,1}(V(t))`` and sets ``u = tau^{Phi0}_{1,0}(W(0)*)`` and
   ``beta = tau^{Psi~}_{0,1}``.

All propagators are anchored at time 1 and obtained from a single backward
sweep from t = 1 to t = 0, so every identity is checked on one consistent set
of unitaries.  Each identity says that a product ``Y`` of those unitaries is
the identity, and its residual on a probe A is ``||Y A Y* - A|| = ||[Y, A]||``.
"""
from __future__ import annotations

import json
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebra import random_hermitian, spectral_norm
from .backend import BlockMatrix, dag, make_space
from .dynamics import EvolveConfig, Propagator, integrate
from .errors import BlockStructureError, DomainError, StageError
from .interaction import HamiltonianAssembler, Interaction, _member, decouple
from .lattice import Cone, LatticeConfig, Region, set_distance
from .transform import TransformedInteraction


# ------------------------------------------------------------------ geometry


def _zone_region(zone, volume: Region) -> Region:
    if isinstance(zone, Region):
        return zone & volume
    return Region(tuple(s for s in volume if _member(zone, s)))


def _zone_json(zone):
    if isinstance(zone, Cone):
        return {"cone": zone.to_json()}
    return {"region": zone.to_json()}


def _zone_from_json(data):
    """Accept ``{"cone": ...}``, ``{"region": ...}``, a bare cone object or a bare site list."""
    if isinstance(data, dict):
        if "cone" in data:
            return Cone.from_json(data["cone"])
        if "region" in data:
            return Region.from_json(data["region"])
        return Cone.from_json(data)
    return Region.from_json(data)


@dataclass(frozen=True)
class ConeSandwich:
    """Nested zones ``gamma1p < gamma1 < gamma2 < gamma2p`` given as cones or regions.

    Regions are convenient for chains, where the zones are intervals.
    """

    gamma1p: object
    gamma1: object
    gamma2: object
    gamma2p: object
    lattice: LatticeConfig | None = None

    def __post_init__(self):
        zones = (self.gamma1p, self.gamma1, self.gamma2, self.gamma2p)
        if all(isinstance(z, Cone) for z in zones):
            if not self.gamma2p.half_angle > self.gamma2.half_angle:
                raise DomainError("gamma2' must be wider than gamma2")
            if not self.gamma1p.half_angle < self.gamma1.half_angle:
                raise DomainError("gamma1' must be narrower than gamma1")
        elif not all(isinstance(z, Region) for z in zones):
            raise DomainError("zones must be all cones or all regions")

    def regions(self, volume: Region) -> dict:
        return {name: _zone_region(getattr(self, name), volume)
                for name in ("gamma1p", "gamma1", "gamma2", "gamma2p")}

    def validate(self, volume: Region) -> dict:
        """Check the strict inclusions on ``volume`` and return the zone regions."""
        r = self.regions(volume)
        chain = [r["gamma1p"], r["gamma1"], r["gamma2"], r["gamma2p"]]
        for a, b in zip(chain, chain[1:]):
            if not a < b:
                raise DomainError("zones are not strictly nested inside the volume")
        if not r["gamma1p"]:
            raise DomainError("gamma1' has no site inside the volume")
        return r

    def strip(self, volume: Region) -> Region:
        r = self.regions(volume)
        return r["gamma2p"] - r["gamma1p"]

    def zones(self, volume: Region) -> dict:
        """The three decoupling zones restricted to ``volume``."""
        r = self.regions(volume)
        return {"gamma1": r["gamma1"], "gamma2_minus_gamma1": r["gamma2"] - r["gamma1"],
                "outside_gamma2": volume - r["gamma2"]}

    def to_json(self) -> dict:
        out = {k: _zone_json(getattr(self, k)) for k in ("gamma1p", "gamma1", "gamma2", "gamma2p")}
        if self.lattice is not None:
            out["lattice"] = {"dimension": self.lattice.dimension,
                              "truncation_radius": self.lattice.truncation_radius}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ConeSandwich":
        lat = data.get("lattice")
        return cls(*(_zone_from_json(data[k]) for k in ("gamma1p", "gamma1", "gamma2", "gamma2p")),
                   lattice=LatticeConfig(**lat) if lat else None)


# ------------------------------------------------------------------ certificate


@dataclass
class FactorizationCertificate:
    residual_ata: float
    residual_www: float
    residual_ttt: float
    residual_quasifactor: float
    u_norm_defect: float
    beta_support_defect: float
    u_identity_defect: float
    beta_identity_defect: float
    beta_isometry_defect: float | None
    chain_bounds: dict
    tolerances: dict
    residual_mode: str
    backend: str
    psi_mode: str
    integrator_tol: float
    steps: int
    sample_times: tuple
    probe_seed: int
    n_probes: int
    geometry: dict
    runtime_s: float
    notes: list = field(default_factory=list)
    _data: dict = field(default_factory=dict, repr=False)

    @property
    def checks(self) -> dict:
        tol = self.tolerances
        return {
            "residual_ata": self.residual_ata <= tol["residual"],
            "residual_www": self.residual_www <= tol["residual"],
            "residual_ttt": self.residual_ttt <= tol["residual"],
            "residual_quasifactor": self.residual_quasifactor <= tol["residual"],
            "u_norm_defect": self.u_norm_defect <= tol["unitarity"],
            "beta_support_defect": self.beta_support_defect <= tol["beta_support"],
            "chain": bool(self.chain_bounds.get("satisfied", True)),
        }

    @property
    def valid(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if not k.startswith("_")}
        out["sample_times"] = list(self.sample_times)
        out["checks"] = self.checks
        out["valid"] = self.valid
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# ------------------------------------------------------------------ helpers


def _phase_defect(space, Y) -> float:
    """``||Y - c I||`` with the phase c taken from the trace (0 when Y = c I exactly)."""
    tr = space.to_dense(Y).trace() if space.kind == "dense" else Y.trace()
    c = tr / abs(tr) if abs(tr) > 0 else 1.0
    return space.norm(Y - c * space.eye())


def _herm(space, M):
    return (M + dag(M)) * 0.5


def _hconj(U, M):
    """``U* M U``."""
    return dag(U) @ M @ U


class _TimeCache:
    """Small cache for quantities that depend on the stage time only."""

    def __init__(self, fn, size: int = 8):
        self.fn = fn
        self.size = size
        self.store: OrderedDict = OrderedDict()

    def __call__(self, r: float):
        r = float(r)
        if r in self.store:
            self.store.move_to_end(r)
            return self.store[r]
        val = self.fn(r)
        self.store[r] = val
        if len(self.store) > self.size:
            self.store.popitem(last=False)
        return val


# ------------------------------------------------------------------ stages


def boundary_potential(phi: Interaction, sandwich: ConeSandwich, volume: Region, t: float,
                       cfg: EvolveConfig | None = None, psi: TransformedInteraction | None = None):
    """``V(t) = sum_Z (id - Pi_S)(Psi(Z, t))`` on ``volume`` (dense), with ``S = G2' - G1'``.

    Returns ``(V, contributions)`` where ``contributions`` maps each Z to its
    term ``(id - Pi_S)(Psi(Z, t))``.
    """
    from .algebra import cond_expect_matrix, fixed_order_sum

    S = sandwich.strip(volume)
    if psi is None:
        zones = sandwich.regions(volume)
        _, phi1 = decouple(phi, zones["gamma1"], zones["gamma2"])
        psi = TransformedInteraction(phi, phi1, 1.0, volume, cfg)
    contrib = {}
    for Z, M in psi.terms(t).items():
        contrib[Z] = M - cond_expect_matrix(M, volume, S, phi.d)
    dim = phi.d ** len(volume)
    V = fixed_order_sum(list(contrib.values())) if contrib else np.zeros((dim, dim), complex)
    return (V + V.conj().T) / 2, contrib


def interpolating_unitary(H_tilde, V, s: float, t: float, cfg: EvolveConfig | None = None,
                          space=None, volume: Region | None = None, breakpoints=()) -> Propagator:
    """``W(t)`` solving ``dW/dt = -i tau^{Psi~}_{t,s}(V(t)) W`` with ``W(s) = I``.

    ``H_tilde`` and ``V`` are callables ``r -> matrix`` in the storage format of
    ``space``.  The propagator of ``H_tilde`` is integrated alongside W.
    """
    cfg = cfg or EvolveConfig()
    if space is None:
        if volume is None:
            raise DomainError("give a space or a volume")
        space = make_space(volume, 2)

    def rhs(r, ys):
        UT, W = ys
        return (-1j * (H_tilde(r) @ UT), -1j * (_hconj(UT, V(r)) @ W))

    def polar(ys):
        return tuple(space.polar(y) for y in ys)

    ys, stats = integrate(rhs, (space.eye(), space.eye()), s, t, cfg,
                          breakpoints=breakpoints, polar=polar)
    return Propagator(space.region, (s, t), ys[1], cfg.tol, stats.accepted, "rk4")


def _neighbours(site, zone: Region):
    out = []
    for other in zone:
        if other != site and set_distance(Region((site,)), Region((other,))) <= 1.0 + 1e-12:
            out.append(other)
    return out


def make_probes(zones: dict, seed: int = 0, per_zone: int = 20, d: int = 2) -> list:
    """Random Hermitian 1- and 2-site probes (norm 1) inside each zone, fixed seed.

    Returns ``[(zone_name, support, local_matrix)]``.
    """
    rng = np.random.default_rng(seed)
    probes = []
    for name in sorted(zones):
        zone = zones[name]
        if not zone:
            continue
        sites = list(zone)
        for _ in range(per_zone):
            x = sites[int(rng.integers(len(sites)))]
            nb = _neighbours(x, zone)
            if nb and rng.random() < 0.5:
                support = Region((x, nb[int(rng.integers(len(nb)))]))
            else:
                support = Region((x,))
            probes.append((name, support, random_hermitian(rng, d ** len(support))))
    return probes


def _charge_projected(space, M: np.ndarray, support: Region) -> np.ndarray:
    """Keep only the charge-conserving part of a local matrix (renormalised)."""
    k = len(support)
    d = space.d
    idx = np.arange(d**k)
    dig = np.stack([(idx // d ** (k - 1 - j)) % d for j in range(k)], 1)
    q = space.local_charges[dig].sum(1)
    out = np.where(q[:, None] == q[None, :], M, 0.0)
    n = spectral_norm(out, True)
    return out / n if n > 0 else out


# ------------------------------------------------------------------ pipeline


def factorize(phi: Interaction, sandwich: ConeSandwich, volume: Region,
              cfg: EvolveConfig | None = None, *, backend: str = "auto", charges=None,
              psi_mode: str = "total", probe_seed: int = 0, probes_per_zone: int = 20,
              sample_times=(0.0, 0.25, 0.5, 0.75), tolerances: dict | None = None
              ) -> FactorizationCertificate:
    """Run the factorization pipeline on ``volume`` and certify its identities.

    ``backend="auto"`` uses dense matrices up to 10 sites and charge blocks
    beyond (which requires a charge-conserving Phi).  With blocks, probes that
    break the charge cannot be stored, so the residuals are the probe-uniform
    bounds ``2 ||Y - cI||`` (valid for every norm-one probe); the dense
    backend evaluates every probe exactly.  ``psi_mode="terms"`` builds the
    transformed interaction term by term (dense only) instead of conjugating
    the summed Hamiltonian; both give the same generator up to rounding.
    """
    t_start = time.perf_counter()
    cfg = cfg or EvolveConfig(tol=1e-9)
    if psi_mode not in ("total", "terms"):
        raise DomainError("psi_mode must be 'total' or 'terms'")
    if backend == "auto":
        backend = "dense" if len(volume) <= 10 else "block"
    if backend == "block" and psi_mode == "terms":
        raise DomainError("psi_mode='terms' needs the dense backend")
    tol = {"residual": 1e-6, "unitarity": 10 * cfg.tol, "beta_support": 1e-6}
    tol.update(tolerances or {})
    sample_times = tuple(sorted({0.0, *map(float, sample_times)}))

    def stage(name, fn):
        try:
            return fn()
        except StageError:
            raise
        except Exception as exc:  # tag and re-raise
            raise StageError(name, exc) from exc

    # -- geometry and decoupling
    zr = stage("geometry", lambda: sandwich.validate(volume))
    S = zr["gamma2p"] - zr["gamma1p"]
    phi_v = phi.restricted(lambda X: X.issubset(volume))
    phi0, phi1 = stage("decouple", lambda: decouple(phi_v, zr["gamma1"], zr["gamma2"]))
    space = stage("backend", lambda: make_space(volume, phi.d, backend, charges))
    native = None if space.kind == "dense" else space

    H_phi = stage("assemble", lambda: HamiltonianAssembler(phi_v, volume, native))
    H_0 = stage("assemble", lambda: HamiltonianAssembler(phi0, volume, native))
    H_1 = stage("assemble", lambda: HamiltonianAssembler(phi1, volume, native))
    static = phi_v.time_independent
    bps = tuple(sorted(set(phi_v.breakpoints)))

    # -- base propagators (exact for time-independent Phi)
    if static:
        eig_phi = stage("propagator", lambda: space.eigh(H_phi(1.0)))
        eig_0 = stage("propagator", lambda: space.eigh(H_0(1.0)))
        U_phi_at = _TimeCache(lambda r: space.expm_from_eigh(eig_phi, r - 1.0))
        U_0_at = _TimeCache(lambda r: space.expm_from_eigh(eig_0, r - 1.0))

    psi_obj = None
    if psi_mode == "terms":
        psi_obj = TransformedInteraction(phi_v, phi1, 1.0, volume, cfg)

    def generators(r, U_phi):
        """``(H_Psi(r), H_Psi~(r))`` from the base propagator ``U_phi = U_Phi(r; 1)``."""
        if psi_mode == "total":
            H_psi = _herm(space, _hconj(U_phi, H_1(r)))
            H_tilde = _herm(space, space.cond_expect(H_psi, S))
            return H_psi, H_tilde
        from .algebra import cond_expect_matrix, fixed_order_sum
        terms = psi_obj.terms_from(U_phi, r)
        if not terms:
            return space.zeros(), space.zeros()
        H_psi = fixed_order_sum(list(terms.values()))
        H_tilde = fixed_order_sum([cond_expect_matrix(M, volume, S, phi.d)
                                   for M in terms.values()])
        return _herm(space, H_psi), _herm(space, H_tilde)

    if static:
        gen_cache = _TimeCache(lambda r: generators(r, U_phi_at(r)))

    def rhs(r, ys):
        if static:
            U_psi, U_tilde, W = ys
            H_psi, H_tilde = gen_cache(r)
            extra = ()
        else:
            U_psi, U_tilde, W, U_phi, U_0 = ys
            H_psi, H_tilde = generators(r, U_phi)
            extra = (-1j * (H_phi(r) @ U_phi), -1j * (H_0(r) @ U_0))
        V = H_psi - H_tilde
        return (-1j * (H_psi @ U_psi), -1j * (H_tilde @ U_tilde),
                -1j * (_hconj(U_tilde, V) @ W)) + extra

    def polar(ys):
        return tuple(space.polar(y) for y in ys)

    n_state = 3 if static else 5
    y0 = tuple(space.eye() for _ in range(n_state))
    ys, stats = stage("sweep", lambda: integrate(rhs, y0, 1.0, 0.0, cfg, t_eval=sample_times,
                                                 breakpoints=bps, polar=polar))

    def at(r):
        st = stats.checkpoints[r]
        if static:
            return st[0], st[1], st[2], U_phi_at(r), U_0_at(r)
        return st

    # -- composite unitaries that equal the identity in exact arithmetic
    composites = {"ata": [], "www": []}
    for r in sample_times:
        U_psi, U_tilde, W, U_phi, U_0 = at(r)
        composites["ata"].append((r, dag(U_0) @ U_phi @ U_psi))
        composites["www"].append((r, U_tilde @ W @ dag(U_psi)))
    U_psi01, U_tilde01, W0, U_phi01, U_001 = at(0.0)
    U_phi10, U_010 = dag(U_phi01), dag(U_001)
    u = dag(U_010) @ dag(W0) @ U_010
    composites["ttt"] = [(0.0, U_psi01 @ U_010 @ dag(U_phi10))]
    composites["quasifactor"] = [(0.0, U_tilde01 @ U_010 @ dag(u) @ dag(U_phi10))]

    zones = sandwich.zones(volume)
    probes = make_probes(zones, probe_seed, probes_per_zone, phi.d)
    outside = volume - S
    if outside:
        probes_out = make_probes({"outside_strip": outside}, probe_seed + 1, probes_per_zone, phi.d)
    else:
        probes_out = []
    notes = []

    defects = {k: [(r, _phase_defect(space, Y)) for r, Y in v] for k, v in composites.items()}
    if space.kind == "dense":
        residual_mode = "exact-probes"

        def probe_residual(Y):
            worst = 0.0
            for _, sup, M in probes:
                A = space.embed(M, sup)
                worst = max(worst, spectral_norm(Y @ A @ dag(Y) - A, True))
            return worst

        residuals = {k: max(probe_residual(Y) for _, Y in v) for k, v in composites.items()}
        beta_vals, iso_vals = [], []
        for _, sup, M in probes_out:
            A = space.embed(M, sup)
            bA = dag(U_tilde01) @ A @ U_tilde01
            beta_vals.append(spectral_norm(bA - A, True))
        for _, sup, M in probes:
            A = space.embed(M, sup)
            bA = dag(U_tilde01) @ A @ U_tilde01
            iso_vals.append(abs(spectral_norm(bA, True) - spectral_norm(A, True)))
        beta_support = max(beta_vals, default=0.0)
        beta_iso = max(iso_vals, default=0.0)
    else:
        residual_mode = "uniform-bound"
        residuals = {k: 2 * max(d for _, d in v) for k, v in defects.items()}
        # any operator supported off S commutes with Pi_S(U)
        beta_support = 2 * space.norm(U_tilde01 - space.cond_expect(U_tilde01, S)) if outside else 0.0
        beta_iso = None
        notes.append("block backend: residuals are probe-uniform bounds 2||Y - cI|| for "
                     "norm-one probes; beta isometry is exact for unitary conjugation")
    if not outside:
        notes.append("strip covers the volume: no probe lies outside it")

    chain_slack = 10.0
    ata0 = dict(defects["ata"])[0.0]
    www0 = dict(defects["www"])[0.0]
    floor = 1e-13
    chain = {
        "ttt_bound": 2 * ata0,
        "quasifactor_bound": 2 * (ata0 + www0),
        "slack_factor": chain_slack,
    }
    chain["satisfied"] = bool(
        residuals["ttt"] <= chain_slack * chain["ttt_bound"] + floor
        and residuals["quasifactor"] <= chain_slack * chain["quasifactor_bound"] + floor)

    cert = FactorizationCertificate(
        residual_ata=residuals["ata"], residual_www=residuals["www"],
        residual_ttt=residuals["ttt"], residual_quasifactor=residuals["quasifactor"],
        u_norm_defect=space.unitarity_defect(u),
        beta_support_defect=beta_support,
        u_identity_defect=_phase_defect(space, u),
        beta_identity_defect=2 * _phase_defect(space, U_tilde01),
        beta_isometry_defect=beta_iso,
        chain_bounds=chain, tolerances=tol, residual_mode=residual_mode,
        backend=space.kind, psi_mode=psi_mode, integrator_tol=cfg.tol, steps=stats.accepted,
        sample_times=sample_times, probe_seed=probe_seed, n_probes=len(probes),
        geometry={"volume": volume.to_json(), "sandwich": sandwich.to_json(),
                  "strip": S.to_json(), "zones": {k: v.to_json() for k, v in zones.items()},
                  "crossing_terms": len(phi1.terms)},
        runtime_s=time.perf_counter() - t_start, notes=notes,
    )
    cert._data = {"space": space, "u": u, "U_0_10": U_010, "U_phi_10": U_phi10,
                  "U_tilde_01": U_tilde01, "W0": W0, "phi0": phi0, "phi1": phi1,
                  "volume": volume, "strip": S}
    return cert


def split_shape_check(cert: FactorizationCertificate, sandwich: ConeSandwich, probes=None,
                      seed: int = 0, per_zone: int = 20) -> dict:
    """Zone invariance of ``tau^{Phi0}_{1,0}``: ``||Pi_zone(tau(A)) - tau(A)||`` per zone.

    Probes are ``(zone_name, support, local_matrix)`` triples (default: the
    certificate's probe recipe).  Probes straddling two zones are skipped with
    a flag; on the block backend probes are reduced to their charge-conserving
    part and the ones with nothing left are skipped.
    """
    data = cert._data
    if not data:
        raise DomainError("certificate carries no operator data")
    space, U = data["space"], data["U_0_10"]
    volume = data["volume"]
    zones = sandwich.zones(volume)
    if probes is None:
        probes = make_probes(zones, seed, per_zone, space.d)
    report = {name: {"max_defect": 0.0, "checked": 0} for name in zones}
    skipped = []
    for name, sup, M in probes:
        homes = [z for z, reg in zones.items() if sup.issubset(reg)]
        if len(homes) != 1:
            skipped.append({"support": sup.to_json(), "reason": "straddles a zone boundary"})
            continue
        zone = homes[0]
        if space.kind == "block":
            M = _charge_projected(space, M, sup)
            if not np.any(M):
                skipped.append({"support": sup.to_json(), "reason": "no charge-conserving part"})
                continue
        try:
            A = space.embed(M, sup)
        except BlockStructureError:
            skipped.append({"support": sup.to_json(), "reason": "breaks the charge sectors"})
            continue
        tA = dag(U) @ A @ U
        defect = space.norm(space.cond_expect(tA, zones[zone]) - tA)
        row = report[zone]
        row["max_defect"] = max(row["max_defect"], defect)
        row["checked"] += 1
    return {"zones": report, "skipped": skipped,
            "max_defect": max((r["max_defect"] for r in report.values()), default=0.0),
            "note": "checks the algebraic shape only"}


__all__ = ["ConeSandwich", "FactorizationCertificate", "boundary_potential",
           "interpolating_unitary", "factorize", "split_shape_check", "make_probes"]

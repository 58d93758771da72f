"""Finite, time-dependent interactions and the quantities built from them.

An interaction is a finite list of terms ``(region, O, p)`` meaning
``p(t) O`` on ``region``, with ``O`` Hermitian and ``p`` a real, continuous,
piecewise-polynomial profile on [0, 1].  Terms sharing a region add up to the
value ``Phi(X; t)``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import quad

from .algebra import LocalOperator, embed_matrix, fixed_order_sum, pauli_string, random_hermitian, spectral_norm
from .errors import DomainError
from .ffunc import FFunction, cf_bounds
from .lattice import Cone, Region, as_site, distance

# ------------------------------------------------------------------ profiles


@dataclass(frozen=True)
class TimeProfile:
    """Continuous piecewise polynomial on [0, 1]; ``coeffs[k]`` is ascending on piece k."""

    breaks: tuple = (0.0, 1.0)
    coeffs: tuple = ((1.0,),)

    def __post_init__(self):
        b = tuple(float(x) for x in self.breaks)
        c = tuple(tuple(float(v) for v in row) for row in self.coeffs)
        if len(b) < 2 or b[0] != 0.0 or b[-1] != 1.0 or any(x >= y for x, y in zip(b, b[1:])):
            raise DomainError("breaks must increase from 0 to 1")
        if len(c) != len(b) - 1:
            raise DomainError("one coefficient row per piece is required")
        for k in range(1, len(c)):
            left = P.polyval(b[k], c[k - 1])
            right = P.polyval(b[k], c[k])
            if abs(left - right) > 1e-12 * max(1.0, abs(left)):
                raise DomainError(f"profile is discontinuous at t = {b[k]}")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, c: float = 1.0) -> "TimeProfile":
        return cls((0.0, 1.0), ((float(c),),))

    @classmethod
    def linear(cls, a: float, b: float) -> "TimeProfile":
        """``a + b t``."""
        return cls((0.0, 1.0), ((float(a), float(b)),))

    @property
    def is_constant(self) -> bool:
        return len(self.coeffs) == 1 and all(v == 0 for v in self.coeffs[0][1:])

    def piece(self, t: float) -> int:
        if not -1e-12 <= t <= 1 + 1e-12:
            raise DomainError(f"time {t} outside [0, 1]")
        k = int(np.searchsorted(self.breaks, t, side="right")) - 1
        return min(max(k, 0), len(self.coeffs) - 1)

    def __call__(self, t: float) -> float:
        return float(P.polyval(t, self.coeffs[self.piece(t)]))

    def sup_abs(self) -> float:
        """Exact ``sup_{[0,1]} |p|`` from endpoint and critical-point values."""
        best = 0.0
        for (a, b), c in zip(zip(self.breaks, self.breaks[1:]), self.coeffs):
            cand = [a, b]
            if len(c) > 2:
                for r in P.polyroots(P.polyder(c)):
                    if abs(r.imag) < 1e-12 and a <= r.real <= b:
                        cand.append(r.real)
            best = max(best, max(abs(P.polyval(x, c)) for x in cand))
        return best

    def scaled(self, k: float) -> "TimeProfile":
        return TimeProfile(self.breaks, tuple(tuple(k * v for v in row) for row in self.coeffs))

    def to_json(self) -> dict:
        return {"breaks": list(self.breaks), "coeffs": [list(r) for r in self.coeffs]}

    @classmethod
    def from_json(cls, data) -> "TimeProfile":
        if data is None:
            return cls.constant(1.0)
        if isinstance(data, (int, float)):
            return cls.constant(float(data))
        return cls(tuple(data["breaks"]), tuple(tuple(r) for r in data["coeffs"]))


# ------------------------------------------------------------------ terms


@dataclass(frozen=True, eq=False)
class InteractionTerm:
    region: Region
    matrix: np.ndarray
    profile: TimeProfile = field(default_factory=TimeProfile)
    label: str | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if not self.region:
            raise DomainError("interaction terms need a non-empty region")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("term matrix must be square")
        if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
            raise DomainError(f"term on {self.region.sites} is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return int(round(self.matrix.shape[0] ** (1.0 / len(self.region))))

    def at(self, t: float) -> np.ndarray:
        return self.profile(t) * self.matrix

    @cached_property
    def op_norm(self) -> float:
        return spectral_norm(self.matrix, True)

    def sup_norm(self) -> float:
        return self.profile.sup_abs() * self.op_norm

    def scaled(self, k: float) -> "InteractionTerm":
        return InteractionTerm(self.region, self.matrix, self.profile.scaled(k), self.label)

    def to_json(self) -> dict:
        out = {"sites": self.region.to_json(), "profile": self.profile.to_json()}
        if self.label is not None and _pauli_matches(self.label, self.matrix):
            out["pauli"] = self.label
        else:
            flat = self.matrix.reshape(-1)
            out["matrix"] = [[float(z.real), float(z.imag)] for z in flat]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "InteractionTerm":
        region = Region.from_json(data["sites"])
        if "pauli" in data:
            label = data["pauli"]
            coeff = float(data.get("coeff", 1.0))
            M = coeff * pauli_string(label)
            if "coeff" in data:
                label = None
        else:
            arr = np.array(data["matrix"], dtype=float)
            dim = int(round(math.sqrt(len(arr))))
            M = (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)
            label = None
        return cls(region, M, TimeProfile.from_json(data.get("profile")), label)


def _pauli_matches(label: str, M: np.ndarray) -> bool:
    try:
        return bool(np.array_equal(pauli_string(label), M))
    except (KeyError, ValueError):
        return False


# ------------------------------------------------------------------ interaction


@dataclass(frozen=True, eq=False)
class Interaction:
    terms: tuple = ()
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if term.matrix.shape[0] != self.d ** len(term.region):
                raise DomainError("term dimension does not match the local dimension")

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @cached_property
    def groups(self) -> dict:
        """Terms grouped by region, in first-appearance order."""
        out: dict = {}
        for term in self.terms:
            out.setdefault(term.region, []).append(term)
        return out

    @property
    def regions(self) -> list:
        return list(self.groups)

    @cached_property
    def support(self) -> Region:
        sites = [s for term in self.terms for s in term.region]
        return Region(tuple(sites))

    @property
    def range(self) -> float:
        """``d_Phi``: the largest term diameter."""
        return max((r.diameter for r in self.groups), default=0.0)

    @property
    def size_cap(self) -> int:
        """``C_#``: the largest term size."""
        return max((len(r) for r in self.groups), default=0)

    @cached_property
    def uniform_bound(self) -> float:
        """``M``: an upper bound on ``sup_{X,t} ||Phi(X;t)||``."""
        return max((self.sup_norm(r) for r in self.groups), default=0.0)

    @property
    def time_independent(self) -> bool:
        return all(t.profile.is_constant for t in self.terms)

    @cached_property
    def breakpoints(self) -> tuple:
        pts = {0.0, 1.0}
        for term in self.terms:
            pts.update(term.profile.breaks)
        return tuple(sorted(pts))

    def value(self, X: Region, t: float) -> np.ndarray:
        """The local matrix ``Phi(X; t)`` on region X."""
        terms = self.groups.get(X, [])
        if not terms:
            return np.zeros((self.d ** len(X),) * 2, dtype=complex)
        return fixed_order_sum([term.at(t) for term in terms])

    def norm_at(self, X: Region, t: float) -> float:
        return spectral_norm(self.value(X, t), True)

    def sup_norm(self, X: Region) -> float:
        """``sup_t ||Phi(X;t)||``: exact for one term or constant profiles, else a sum bound."""
        terms = self.groups.get(X, [])
        if not terms:
            return 0.0
        if len(terms) == 1:
            return terms[0].sup_norm()
        if all(t.profile.is_constant for t in terms):
            return self.norm_at(X, 0.0)
        return math.fsum(t.sup_norm() for t in terms)

    def restricted(self, keep) -> "Interaction":
        """Sub-interaction with the terms whose region satisfies ``keep``."""
        return Interaction(tuple(t for t in self.terms if keep(t.region)), self.d)

    def __add__(self, other: "Interaction") -> "Interaction":
        return Interaction(self.terms + other.terms, self.d)

    def scaled(self, k: float) -> "Interaction":
        return Interaction(tuple(t.scaled(k) for t in self.terms), self.d)

    def to_json(self) -> dict:
        return {"d": self.d, "terms": [t.to_json() for t in self.terms]}

    @classmethod
    def from_json(cls, data) -> "Interaction":
        if isinstance(data, list):
            data = {"terms": data}
        validate_interaction_json(data)
        return cls(tuple(InteractionTerm.from_json(t) for t in data["terms"]),
                   int(data.get("d", 2)))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


INTERACTION_SCHEMA = {
    "type": "object",
    "required": ["terms"],
    "properties": {
        "d": {"type": "integer", "minimum": 2, "maximum": 4},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["sites"],
                "properties": {
                    "sites": {"type": "array", "minItems": 1,
                              "items": {"type": "array", "minItems": 1, "maxItems": 2,
                                        "items": {"type": "integer"}}},
                    "pauli": {"type": "string", "pattern": "^[IXYZixyz]+$"},
                    "coeff": {"type": "number"},
                    "matrix": {"type": "array",
                               "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                         "items": {"type": "number"}}},
                    "profile": {
                        "anyOf": [
                            {"type": "number"},
                            {"type": "object", "required": ["breaks", "coeffs"],
                             "properties": {
                                 "breaks": {"type": "array", "items": {"type": "number"},
                                            "minItems": 2},
                                 "coeffs": {"type": "array",
                                            "items": {"type": "array",
                                                      "items": {"type": "number"}}}}},
                        ]
                    },
                },
                "oneOf": [{"required": ["pauli"]}, {"required": ["matrix"]}],
            },
        },
    },
}


def validate_interaction_json(data):
    import jsonschema

    jsonschema.validate(data, INTERACTION_SCHEMA)


# ------------------------------------------------------------------ operations


def local_hamiltonian(phi: Interaction, volume: Region, t: float) -> LocalOperator:
    """``H_{Lambda,Phi}(t)``: the sum of the terms inside ``volume``, embedded in it."""
    mats = [embed_matrix(phi.value(X, t), X, volume, phi.d)
            for X in phi.groups if X.issubset(volume)]
    if not mats:
        return LocalOperator.zero(volume, phi.d)
    H = fixed_order_sum(mats)
    H = (H + H.conj().T) / 2
    return LocalOperator(Region(tuple(s for X in phi.groups if X.issubset(volume) for s in X)),
                         volume, H, True, phi.d)


class HamiltonianAssembler:
    """Evaluates ``t -> H_{Lambda,Phi}(t)`` quickly by caching embedded term matrices.

    On each polynomial piece of the profiles the Hamiltonian is
    ``sum_k t^k C_k``; the coefficient matrices ``C_k`` are built once per piece
    and evaluated by Horner's rule.  Output is a dense array, or the native
    format of ``space`` when given.
    """

    def __init__(self, phi: Interaction, volume: Region, space=None):
        self.phi = phi
        self.volume = volume
        self.space = space
        embed_fn = (lambda M, X: embed_matrix(M, X, volume, phi.d)) if space is None \
            else space.embed
        self.parts = []
        for X, terms in phi.groups.items():
            if X.issubset(volume):
                for term in terms:
                    self.parts.append((term.profile, embed_fn(term.matrix, X)))
        self.constant = all(p.is_constant for p, _ in self.parts)
        breaks = {0.0, 1.0}
        for p, _ in self.parts:
            breaks.update(p.breaks)
        self.breaks = np.array(sorted(breaks))
        self._pieces: dict = {}
        self._last = (None, None)

    def zeros(self):
        if self.space is None:
            dim = self.phi.d ** len(self.volume)
            return np.zeros((dim, dim), dtype=complex)
        return self.space.zeros()

    def _piece(self, k: int) -> list:
        if k not in self._pieces:
            mid = 0.5 * (self.breaks[k] + self.breaks[k + 1])
            rows = [(p.coeffs[p.piece(mid)], M) for p, M in self.parts]
            order = max((len(c) for c, _ in rows), default=1)
            coeffs = []
            for j in range(order):
                mats = [c[j] * M for c, M in rows if j < len(c) and c[j] != 0.0]
                coeffs.append(fixed_order_sum(mats) if mats else self.zeros())
            self._pieces[k] = coeffs
        return self._pieces[k]

    def __call__(self, t: float):
        if self._last[0] == t:
            return self._last[1]
        if not self.parts:
            H = self.zeros()
        elif self.constant:
            H = self._piece(0)[0]
        else:
            k = int(np.searchsorted(self.breaks, t, side="right")) - 1
            k = min(max(k, 0), len(self.breaks) - 2)
            coeffs = self._piece(k)
            H = coeffs[-1]
            for C in reversed(coeffs[:-1]):
                H = H * t + C
        self._last = (t, H)
        return H


def hamiltonian_matrix(phi: Interaction, volume: Region, t: float, space=None):
    """Local Hamiltonian in the storage format of ``space`` (dense array by default)."""
    return HamiltonianAssembler(phi, volume, space)(t)


def pair_weights(phi: Interaction, t: float) -> dict:
    """``{(x, y): sum_{Z contains x, y} ||Phi(Z;t)||}`` over ordered site pairs present."""
    acc: dict = {}
    for X in phi.groups:
        nrm = phi.norm_at(X, t)
        if nrm == 0:
            continue
        for x, y in itertools.product(X.sites, repeat=2):
            acc[(x, y)] = acc.get((x, y), 0.0) + nrm
    return acc


def interaction_norm(phi: Interaction, F: FFunction, t: float) -> float:
    """``||Phi||(t) = sup_{x,y} F(d(x,y))^{-1} sum_{Z contains x,y} ||Phi(Z;t)||``."""
    best = 0.0
    for (x, y), w in pair_weights(phi, t).items():
        best = max(best, w * math.exp(-float(F.log(distance(x, y)))))
    return best


def i_phi(phi: Interaction, F: FFunction, cf_upper: float | None = None) -> float:
    """``I(Phi) = C_F int_0^1 ||Phi||(t) dt`` with ``C_F`` replaced by its upper bound."""
    if cf_upper is None:
        cf_upper = cf_bounds(F)[1]
    if not phi.terms:
        return 0.0
    if phi.time_independent:
        return cf_upper * interaction_norm(phi, F, 0.0)
    bp = phi.breakpoints
    total = 0.0
    for a, b in zip(bp, bp[1:]):
        val, _ = quad(lambda t: interaction_norm(phi, F, t), a, b, epsabs=1e-11, epsrel=1e-11,
                      limit=200)
        total += val
    return cf_upper * total


def weight(phi: Interaction, m: float) -> Interaction:
    """``Phi_m(X;t) = |X|^m Phi(X;t)``."""
    if m == 0:
        return phi
    return Interaction(tuple(t.scaled(len(t.region) ** m) for t in phi.terms), phi.d)


# ------------------------------------------------------------------ zones


def _member(zone, site) -> bool:
    if isinstance(zone, Cone):
        return bool(zone.contains(np.array([site], dtype=float))[0])
    return as_site(site) in zone


def zone_of(site, gamma1, gamma2) -> int:
    """0 for Gamma1, 1 for Gamma2 minus Gamma1, 2 for the complement of Gamma2."""
    if _member(gamma1, site):
        return 0
    if _member(gamma2, site):
        return 1
    return 2


def decouple(phi: Interaction, gamma1, gamma2):
    """Split Phi into ``(Phi0, Phi1)`` with ``Phi1 = Phi0 - Phi``.

    ``Phi0`` keeps the terms lying in a single zone (Gamma1, Gamma2 minus
    Gamma1, or the complement of Gamma2); ``Phi1`` holds the negated others.
    Zones may be given as lattice regions or as cones.
    """
    if isinstance(gamma1, Region) and isinstance(gamma2, Region) and not gamma1.issubset(gamma2):
        raise DomainError("Gamma1 must be contained in Gamma2")
    keep, drop = [], []
    for term in phi.terms:
        zones = {zone_of(s, gamma1, gamma2) for s in term.region}
        (keep if len(zones) == 1 else drop).append(term)
    return Interaction(tuple(keep), phi.d), Interaction(tuple(t.scaled(-1.0) for t in drop), phi.d)


def lattice_distance_to_complement(contains, z, max_radius: int = 10_000) -> float:
    """Distance from lattice site z to the nearest lattice site failing ``contains``.

    Searches growing square shells until the best candidate is provably nearest.
    """
    z = np.asarray(as_site(z))
    if not contains(z):
        return 0.0
    best = math.inf
    for r in range(1, max_radius + 1):
        ax = np.arange(-r, r + 1)
        if len(z) == 1:
            ring = np.array([[-r], [r]])
        else:
            top = np.stack([ax, np.full_like(ax, r)], 1)
            bot = np.stack([ax, np.full_like(ax, -r)], 1)
            left = np.stack([np.full(2 * r - 1, -r), ax[1:-1]], 1)
            right = np.stack([np.full(2 * r - 1, r), ax[1:-1]], 1)
            ring = np.concatenate([top, bot, left, right])
        pts = ring + z
        outside = ~np.array([contains(p) for p in pts])
        if outside.any():
            best = min(best, float(np.sqrt(((pts[outside] - z) ** 2).sum(1)).min()))
        if best <= r:
            return best
    raise DomainError("complement not found within the search radius")


def sandwich_contains(gamma1p: Cone, gamma2p: Cone):
    """Membership predicate of ``Gamma2' minus Gamma1'``."""
    def contains(p):
        p = np.asarray(p, dtype=float).reshape(1, -1)
        return bool(gamma2p.contains(p)[0] and not gamma1p.contains(p)[0])
    return contains


def f_mxy(phi: Interaction, gamma1p: Cone, gamma2p: Cone, m: float, x, y) -> float:
    """``sum_{X contains x,y; d(S^c, X) <= m} |X| sup_t ||Phi(X;t)||``, S = Gamma2' - Gamma1'."""
    if m < 0:
        raise DomainError("m must be non-negative")
    x, y = as_site(x), as_site(y)
    if distance(x, y) > phi.range + 1e-12:
        return 0.0
    contains = sandwich_contains(gamma1p, gamma2p)
    total = []
    for X in phi.groups:
        if x in X and y in X:
            dist = min(lattice_distance_to_complement(contains, z) for z in X)
            if dist <= m + 1e-12:
                total.append(len(X) * phi.sup_norm(X))
    return math.fsum(total)


# ------------------------------------------------------------------ generators


def _bonds(region: Region):
    """Nearest-neighbour bonds (distance one) inside a region, in lexicographic order."""
    sites = region.sites
    out = []
    for i, a in enumerate(sites):
        for b in sites[i + 1:]:
            if abs(distance(a, b) - 1.0) < 1e-12:
                out.append(Region((a, b)))
    return out


def _as_region(sites) -> Region:
    if isinstance(sites, Region):
        return sites
    if isinstance(sites, int):
        return Region.chain(0, sites)
    if isinstance(sites, (list, tuple)) and len(sites) == 2 and all(isinstance(v, int) for v in sites):
        return Region.rectangle(*sites)
    return Region.from_json(sites)


def tfim(J: float = 1.0, h: float = 1.0, sites=6) -> Interaction:
    """Transverse-field Ising model ``-J Z Z`` on bonds and ``-h X`` on sites.

    ``sites`` is a chain length, a ``[width, height]`` grid, or a region.
    """
    region = _as_region(sites)
    terms = [InteractionTerm(b, -J * pauli_string("ZZ"), label=None) for b in _bonds(region)]
    terms += [InteractionTerm(Region((s,)), -h * pauli_string("X")) for s in region]
    return Interaction(tuple(t for t in terms if np.any(t.matrix)))


def xxz(J: float = 1.0, delta: float = 0.5, h: float = 0.0, sites=(3, 4)) -> Interaction:
    """Charge-conserving XXZ model ``J (XX + YY) + delta ZZ`` with field ``h Z``."""
    region = _as_region(sites)
    bond = J * (pauli_string("XX") + pauli_string("YY")) + delta * pauli_string("ZZ")
    terms = [InteractionTerm(b, bond) for b in _bonds(region)]
    if h:
        terms += [InteractionTerm(Region((s,)), h * pauli_string("Z")) for s in region]
    return Interaction(tuple(terms))


def random_2local(sites=6, seed: int = 0, strength: float = 1.0, field_strength: float = 0.5,
                  time_dependent: bool = True) -> Interaction:
    """Random Hermitian nearest-neighbour bonds and single-site fields.

    Time-dependent instances use linear ramps ``a + b t`` with random a, b in [-1, 1].
    """
    region = _as_region(sites)
    rng = np.random.default_rng(seed)
    terms = []

    def profile():
        if not time_dependent:
            return TimeProfile.constant(1.0)
        a, b = rng.uniform(-1, 1, 2)
        return TimeProfile.linear(a, b)

    for b in _bonds(region):
        terms.append(InteractionTerm(b, random_hermitian(rng, 4, strength), profile()))
    if field_strength:
        for s in region:
            terms.append(InteractionTerm(Region((s,)), random_hermitian(rng, 2, field_strength),
                                         profile()))
    return Interaction(tuple(terms))


GENERATORS = {
    "tfim": {
        "func": tfim,
        "description": "transverse-field Ising: -J ZZ on nearest-neighbour bonds, -h X on sites",
        "fields": {"J": "number", "h": "number", "sites": "chain length | [width, height]"},
    },
    "xxz": {
        "func": xxz,
        "description": "charge-conserving XXZ: J (XX+YY) + delta ZZ on bonds, h Z on sites",
        "fields": {"J": "number", "delta": "number", "h": "number",
                   "sites": "chain length | [width, height]"},
    },
    "random_2local": {
        "func": random_2local,
        "description": "random Hermitian nearest-neighbour bonds plus fields, linear ramps in t",
        "fields": {"sites": "chain length | [width, height]", "seed": "integer",
                   "strength": "number", "field_strength": "number",
                   "time_dependent": "boolean"},
    },
    "zone_respecting": {
        "func": None,
        "description": "any generator above with zone-crossing terms removed "
                       "(keys: base, params, gamma1, gamma2)",
        "fields": {"base": "generator name", "params": "object",
                   "gamma1": "region", "gamma2": "region"},
    },
}


def make_interaction(name: str, **params) -> Interaction:
    if name == "zone_respecting":
        base = make_interaction(params["base"], **params.get("params", {}))
        g1 = _zone_arg(params["gamma1"])
        g2 = _zone_arg(params["gamma2"])
        return decouple(base, g1, g2)[0]
    if name not in GENERATORS:
        raise DomainError(f"unknown generator {name!r}")
    return GENERATORS[name]["func"](**params)


def _zone_arg(z):
    if isinstance(z, (Region, Cone)):
        return z
    if isinstance(z, dict):
        return Cone.from_json(z)
    return Region.from_json(z)


def list_generators() -> list[dict]:
    return [{"name": k, "description": v["description"], "fields": v["fields"]}
            for k, v in sorted(GENERATORS.items())]

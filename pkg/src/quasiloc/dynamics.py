"""Time-ordered propagators and finite-volume Heisenberg dynamics.

``U(t; s)`` solves ``dU/dt = -i H(t) U`` with ``U(s; s) = I``.  The workhorse is
a classical fourth-order Runge-Kutta stepper with step-doubling error control
(and local Richardson extrapolation), acting on tuples of operators so that
coupled systems can share one step sequence.  Time-independent generators
may instead use an exact eigendecomposition (``method="auto"``/``"exact"``).

The locality checks compare measured quantities with the bounds

* ``||[tau(A), B]|| <= (2||A|| ||B|| / C_F) (e^{2I} - 1) |X| G_F(d(X, Y))``
* ``||Delta_{X(m)}(tau(A))|| <= (4||A|| / C_F) (e^{2I} - 1) |X| G_F(m)``
* ``||tau^Lambda(A) - tau(A)|| <= (2/C_F) ||A|| e^{2I} I |X| G_F(d(X, Gamma - Lambda))``

evaluated with the conservative ends of every enclosure (lower ``C_F``,
upper ``I`` and ``G_F``), in logarithms to avoid overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import LocalOperator, cond_expect, delta_m, embed, op_norm, spectral_norm
from .backend import DenseSpace, dag, err_norm
from .errors import DomainError, IntegrationError
from .ffunc import FFunction, cf_bounds, g_f
from .interaction import HamiltonianAssembler, Interaction, i_phi
from .lattice import Region, set_distance


@dataclass(frozen=True)
class EvolveConfig:
    """Integrator settings; ``tol`` bounds the estimated local error of each step."""

    tol: float = 1e-10
    reunitarize: bool = True
    reunitarize_every: int = 64
    method: str = "auto"
    max_steps: int = 200_000
    h_min_rel: float = 1e-13

    def __post_init__(self):
        if not 1e-12 <= self.tol <= 1e-4:
            raise DomainError("tolerance must lie in [1e-12, 1e-4]")
        if self.method not in ("auto", "rk4", "exact"):
            raise DomainError(f"unknown method {self.method!r}")


@dataclass
class Propagator:
    volume: Region
    interval: tuple
    matrix: object
    tolerance: float
    steps: int = 0
    method: str = "rk4"

    def unitarity_defect(self, space=None) -> float:
        if space is None:
            return spectral_norm(self.matrix.conj().T @ self.matrix - np.eye(self.matrix.shape[0]),
                                 True)
        return space.unitarity_defect(self.matrix)


# ------------------------------------------------------------------ RK4 core


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    max_error: float = 0.0
    checkpoints: dict = field(default_factory=dict)


def _axpy(ys, ks, h):
    return tuple(y + h * k for y, k in zip(ys, ks))


def _rk4_step(rhs, t, ys, h, k1=None):
    if k1 is None:
        k1 = rhs(t, ys)
    k2 = rhs(t + h / 2, _axpy(ys, k1, h / 2))
    k3 = rhs(t + h / 2, _axpy(ys, k2, h / 2))
    k4 = rhs(t + h, _axpy(ys, k3, h))
    return tuple(y + (h / 6) * (a + 2 * b + 2 * c + d)
                 for y, a, b, c, d in zip(ys, k1, k2, k3, k4))


def integrate(rhs, y0: tuple, t0: float, t1: float, cfg: EvolveConfig, *, t_eval=(),
              breakpoints=(), polar=None, stats: StepStats | None = None):
    """Integrate ``y' = rhs(t, y)`` from t0 to t1 (either direction).

    Steps never straddle ``breakpoints`` (where the right-hand side may only be
    continuous) and land exactly on every ``t_eval`` point, whose states are
    stored in ``stats.checkpoints``.  ``polar`` (a callable mapping a state
    tuple to a re-unitarised tuple) is applied every ``reunitarize_every``
    accepted steps when enabled.
    """
    stats = stats if stats is not None else StepStats()
    ys = tuple(y0)
    T = t1 - t0
    if T == 0:
        for te in t_eval:
            stats.checkpoints[float(te)] = ys
        return ys, stats
    sign = 1.0 if T > 0 else -1.0
    lo, hi = min(t0, t1), max(t0, t1)
    stops = sorted({float(p) for p in tuple(breakpoints) + tuple(t_eval) if lo < p < hi},
                   reverse=sign < 0)
    stops.append(float(t1))
    for te in t_eval:
        if te == t0:
            stats.checkpoints[float(te)] = ys
    wanted = {float(te) for te in t_eval}
    counted = [0]

    def f(t, y):
        counted[0] += 1
        return rhs(t, y)

    k0 = f(t0, ys)
    scale = max(max(err_norm(k) for k in k0) / max(max(err_norm(y) for y in ys), 1e-300), 1e-8)
    h = sign * min(abs(T), 0.5 * cfg.tol**0.2 / scale)
    h_min = cfg.h_min_rel * max(abs(T), 1.0)
    t = t0
    for stop in stops:
        while sign * (stop - t) > 1e-15:
            h = sign * min(abs(h), abs(stop - t))
            if abs(h) < h_min:
                raise IntegrationError("step size underflow", t=t, step=h, error=stats.max_error)
            if stats.accepted + stats.rejected >= cfg.max_steps:
                raise IntegrationError("maximum number of steps exceeded", t=t, step=h)
            full = _rk4_step(f, t, ys, h, k0)
            half = _rk4_step(f, t, ys, h / 2, k0)
            half = _rk4_step(f, t + h / 2, half, h / 2)
            err = max(err_norm(a - b) for a, b in zip(half, full)) / 15.0
            if err <= cfg.tol:
                ys = tuple(a + (a - b) / 15.0 for a, b in zip(half, full))
                last = abs(stop - (t + h)) < 1e-14 * max(1.0, abs(stop))
                t = stop if last else t + h
                stats.accepted += 1
                stats.max_error = max(stats.max_error, err)
                if polar is not None and cfg.reunitarize and \
                        stats.accepted % cfg.reunitarize_every == 0:
                    ys = polar(ys)
                k0 = f(t, ys)
                fac = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (cfg.tol / err) ** 0.2))
            else:
                stats.rejected += 1
                fac = max(0.1, 0.9 * (cfg.tol / err) ** 0.2)
            h = h * fac
        if stop in wanted:
            stats.checkpoints[stop] = ys
    stats.rhs_evals += counted[0]
    return ys, stats


# ------------------------------------------------------------------ propagators


def _space_for(volume: Region, d: int, space):
    return DenseSpace(volume, d) if space is None else space


def evolve_unitary(H_of_t, space, t: float, s: float, cfg: EvolveConfig, *,
                   time_independent: bool = False, breakpoints=(), t_eval=()):
    """``U(t; s)`` for a generator given as a callable ``r -> H(r)`` in ``space`` format."""
    method = cfg.method
    if method == "exact" and not time_independent:
        raise DomainError("exact propagation needs a time-independent generator")
    if method == "auto":
        method = "exact" if time_independent else "rk4"
    if method == "exact":
        eig = space.eigh(H_of_t(s))
        U = space.expm_from_eigh(eig, t - s)
        ck = {float(te): (space.expm_from_eigh(eig, te - s),) for te in t_eval}
        return U, StepStats(checkpoints=ck), "exact"

    def rhs(r, ys):
        return (-1j * (H_of_t(r) @ ys[0]),)

    def polar(ys):
        return (space.polar(ys[0]),)

    ys, stats = integrate(rhs, (space.eye(),), s, t, cfg, breakpoints=breakpoints,
                          t_eval=t_eval, polar=polar)
    return ys[0], stats, "rk4"


def propagator(phi: Interaction, volume: Region, t: float, s: float,
               cfg: EvolveConfig | None = None, space=None) -> Propagator:
    """Solve ``dU/dt = -i H_{Lambda,Phi}(t) U`` from s to t."""
    cfg = cfg or EvolveConfig()
    for v in (t, s):
        if not 0.0 <= v <= 1.0:
            raise DomainError("times must lie in [0, 1]")
    space = _space_for(volume, phi.d, space)
    if not any(X.issubset(volume) for X in phi.groups):
        return Propagator(volume, (s, t), space.eye(), cfg.tol, 0, "trivial")

    H = HamiltonianAssembler(phi, volume, None if space.kind == "dense" else space)

    U, stats, method = evolve_unitary(H, space, t, s, cfg, time_independent=phi.time_independent,
                                      breakpoints=phi.breakpoints)
    return Propagator(volume, (s, t), U, cfg.tol, stats.accepted, method)


def heisenberg(phi: Interaction, volume: Region, t: float, s: float, A: LocalOperator,
               direction: str = "tau", cfg: EvolveConfig | None = None,
               U: Propagator | None = None) -> LocalOperator:
    """``tau_{t,s}(A) = U* A U`` or ``tau_hat_{t,s}(A) = U A U*`` with ``U = U(t; s)``."""
    if not A.ambient.issubset(volume):
        raise DomainError("operator must live inside the volume")
    A = embed(A, volume)
    if t == s:
        return A
    if U is None:
        U = propagator(phi, volume, t, s, cfg)
    M = U.matrix
    if direction == "tau":
        out = M.conj().T @ A.matrix @ M
    elif direction == "tau_hat":
        out = M @ A.matrix @ M.conj().T
    else:
        raise DomainError("direction must be 'tau' or 'tau_hat'")
    if A.hermitian:
        out = (out + out.conj().T) / 2
    return LocalOperator(volume, volume, out, A.hermitian, A.d)


def cocycle_residual(phi: Interaction, volume: Region, t: float, s: float, u: float,
                     A: LocalOperator, cfg: EvolveConfig | None = None) -> float:
    """``||tau_{s,u}(tau_{t,s}(A)) - tau_{t,u}(A)||``.

    With ``tau_{t,s}(A) = U(t;s)* A U(t;s)`` the composition that closes is
    ``tau_{s,u} o tau_{t,s} = tau_{t,u}``; the argument order here follows that
    composition so the residual measures integrator error only.
    """
    inner = heisenberg(phi, volume, t, s, A, "tau", cfg)
    lhs = heisenberg(phi, volume, s, u, inner, "tau", cfg)
    rhs = heisenberg(phi, volume, t, u, A, "tau", cfg)
    return op_norm(lhs - rhs)


# ------------------------------------------------------------------ bounds


def _log_prefactor(I: float) -> float:
    """log of ``e^{2I} - 1``."""
    if I <= 0:
        return -math.inf
    return 2 * I + math.log1p(-math.exp(-2 * I)) if I > 1e-3 else math.log(math.expm1(2 * I))


def _log_g(F: FFunction, dist: float) -> float:
    if math.isinf(dist):
        return -math.inf
    return g_f(F, dist).log_upper


def _safe_log(x: float) -> float:
    return -math.inf if x <= 0 else math.log(x)


def _row(measured: float, log_bound: float, **params) -> dict:
    bound = math.exp(log_bound) if log_bound < 700 else math.inf
    sat = measured == 0.0 or _safe_log(measured) <= log_bound
    return {**params, "measured": measured, "bound": bound, "log_bound": log_bound,
            "margin": bound - measured, "satisfied": bool(sat)}


@dataclass(frozen=True)
class BoundConstants:
    cf_lower: float
    cf_upper: float
    I: float

    @classmethod
    def of(cls, phi: Interaction, F: FFunction) -> "BoundConstants":
        lo, hi = cf_bounds(F)
        return cls(lo, hi, i_phi(phi, F, hi))


def lr_check(phi: Interaction, F: FFunction, volume: Region, A: LocalOperator, B: LocalOperator,
             t: float, s: float, cfg: EvolveConfig | None = None, U: Propagator | None = None,
             consts: BoundConstants | None = None) -> dict:
    """Measured ``||[tau_{t,s}(A), B]||`` against the propagation bound."""
    X, Y = A.support, B.support
    if not X or not Y:
        raise DomainError("A and B need non-empty supports")
    if not X.isdisjoint(Y):
        raise DomainError("supports of A and B must be disjoint")
    if not (X.issubset(volume) and Y.issubset(volume)):
        raise DomainError("supports must lie in the volume")
    consts = consts or BoundConstants.of(phi, F)
    tA = heisenberg(phi, volume, t, s, A, "tau", cfg, U)
    Bv = embed(B, volume)
    C = tA.matrix @ Bv.matrix - Bv.matrix @ tA.matrix
    # the commutator of two Hermitian operators is anti-Hermitian
    both = tA.hermitian and Bv.hermitian
    measured = spectral_norm(1j * C if both else C, True if both else False)
    dist = set_distance(X, Y)
    log_bound = (_safe_log(2 * op_norm(A) * op_norm(B)) - math.log(consts.cf_lower)
                 + _log_prefactor(consts.I) + math.log(len(X)) + _log_g(F, dist))
    return _row(measured, log_bound, t=t, s=s, distance=dist, I=consts.I)


def delta_decay_check(phi: Interaction, F: FFunction, volume: Region, A: LocalOperator,
                      X: Region, t: float, s: float, m_range, cfg: EvolveConfig | None = None,
                      U: Propagator | None = None, consts: BoundConstants | None = None) -> list:
    """Per-m table of ``||Delta_{X(m)}(tau(A))||`` against its bound."""
    if not A.support.issubset(X):
        raise DomainError("A must be supported in X")
    consts = consts or BoundConstants.of(phi, F)
    tA = heisenberg(phi, volume, t, s, A, "tau", cfg, U)
    rows = []
    for m in m_range:
        D = delta_m(tA, X, m)
        measured = op_norm(D)
        log_bound = (_safe_log(4 * op_norm(A)) - math.log(consts.cf_lower)
                     + _log_prefactor(consts.I) + math.log(len(X)) + _log_g(F, float(m)))
        rows.append(_row(measured, log_bound, m=m, t=t, s=s))
    return rows


def volume_convergence_check(phi: Interaction, F: FFunction, X: Region, A: LocalOperator,
                             volumes, t: float, s: float, cfg: EvolveConfig | None = None,
                             consts: BoundConstants | None = None) -> list:
    """Differences between nested finite volumes; the largest volume stands in for Gamma."""
    volumes = list(volumes)
    for a, b in zip(volumes, volumes[1:]):
        if not a < b:
            raise DomainError("volumes must be strictly nested")
    if not X.issubset(volumes[0]):
        raise DomainError("X must lie in the smallest volume")
    consts = consts or BoundConstants.of(phi, F)
    big = volumes[-1]
    ref = heisenberg(phi, big, t, s, embed(A, big) if A.ambient != big else A, "tau", cfg)
    rows = []
    for vol in volumes:
        Av = LocalOperator.from_local(A.local_matrix(), A.support, vol, A.d, A.hermitian)
        local = heisenberg(phi, vol, t, s, Av, "tau", cfg)
        diff = op_norm(embed(local, big) - ref)
        rest = big - vol
        dist = set_distance(X, rest) if rest else math.inf
        log_bound = (_safe_log(2 * op_norm(A)) - math.log(consts.cf_lower) + 2 * consts.I
                     + _safe_log(consts.I) + math.log(len(X)) + _log_g(F, dist))
        rows.append(_row(diff, log_bound, volume_size=len(vol), distance=dist, t=t, s=s,
                         surrogate="largest volume stands in for the full lattice"))
    return rows


__all__ = [
    "EvolveConfig", "Propagator", "integrate", "evolve_unitary", "propagator", "heisenberg",
    "cocycle_residual", "lr_check", "delta_decay_check", "volume_convergence_check",
    "BoundConstants", "StepStats", "cond_expect", "dag",
]

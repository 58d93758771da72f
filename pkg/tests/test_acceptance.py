"""Acceptance criteria 1 to 9.  Each test prints one ``CRITERION n: PASS/FAIL`` line."""
import json
import math
import time

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import ACCEPTANCE_LINES
from quasiloc.algebra import (LocalOperator, cond_expect, delta_m, op_norm, pauli_string,
                              random_local)
from quasiloc.cli import main
from quasiloc.dynamics import EvolveConfig, cocycle_residual, propagator
from quasiloc.factorize import ConeSandwich, factorize
from quasiloc.ffunc import FFunction, DECAY_CONSTANT, g_f, gf_decay_check, decay_log_rhs
from quasiloc.interaction import (Interaction, InteractionTerm, decouple, local_hamiltonian,
                                  random_2local)
from quasiloc.lattice import Region, fatten_within
from quasiloc.summability import (ConePairConfig, certify_anan, d_gamma1, default_offsets,
                                  doubling_check, lattice_cone_distance, lattice_d_gamma1)
from quasiloc.errors import GeometryInfeasibleError
from quasiloc.lattice import LatticeConfig


def record(n: int, ok: bool, elapsed: float, limit: float, detail: str):
    within = elapsed < limit
    verdict = "PASS" if ok and within else "FAIL"
    line = f"CRITERION {n}: {verdict} ({detail}; {elapsed:.1f} s of {limit:.0f} s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line
    assert within, line


def csv_body(path):
    return "\n".join(path.read_text().splitlines()[1:])


def test_criterion_1_telescoping():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_tel, worst_ratio = 0.0, 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        amb = Region.chain(0, n)
        A = random_local(rng, amb, amb, hermitian=bool(rng.integers(2)))
        k = int(rng.integers(1, n + 1))
        X = Region.of((int(i),) for i in rng.choice(n, k, replace=False))
        nA = op_norm(A)
        acc = np.zeros_like(A.matrix)
        for M in range(n):
            D = delta_m(A, X, M)
            acc = acc + D.matrix
            ref = cond_expect(A, fatten_within(X, M, amb)).matrix
            worst_tel = max(worst_tel, float(np.abs(acc - ref).max()))
            if M > 0:
                worst_ratio = max(worst_ratio, op_norm(D) / nA)
    ok = worst_tel <= 1e-12 and worst_ratio <= 2 + 1e-12
    record(1, ok, time.perf_counter() - t0, 10,
           f"max telescoping error {worst_tel:.1e}, max ||Delta||/||A|| {worst_ratio:.3f}")


def test_criterion_2_propagator():
    t0 = time.perf_counter()
    cfg = EvolveConfig(tol=1e-10, method="rk4")
    # commuting ZZ chain against the exponential
    vol = Region.chain(0, 6)
    zz = Interaction(tuple(InteractionTerm(Region.chain(i, i + 2), 0.9 * pauli_string("ZZ"))
                           for i in range(5)))
    H = local_hamiltonian(zz, vol, 0.0).matrix
    err_zz = float(np.abs(propagator(zz, vol, 0.9, 0.15, cfg).matrix - expm(-0.75j * H)).max())
    # single qubit rotation
    h = 1.3
    qb = Interaction((InteractionTerm(Region.chain(0, 1), h * pauli_string("X")),))
    U = propagator(qb, Region.chain(0, 1), 0.2, 0.95, cfg).matrix
    th = (0.2 - 0.95) * h
    err_q = float(np.abs(U - (math.cos(th) * np.eye(2) - 1j * math.sin(th) * pauli_string("X"))).max())
    # cocycle on a time-dependent 6-site chain
    rng = np.random.default_rng(7)
    phi = random_2local(sites=6, seed=12)
    worst = 0.0
    for _ in range(20):
        t, s, u = (float(x) for x in rng.uniform(0, 1, 3))
        A = random_local(rng, Region.of([(int(rng.integers(6)),)]), vol)
        worst = max(worst, cocycle_residual(phi, vol, t, s, u, A, EvolveConfig(tol=1e-10)))
    ok = err_zz <= 1e-10 and err_q <= 1e-10 and worst <= 1e-8
    record(2, ok, time.perf_counter() - t0, 60,
           f"ZZ error {err_zz:.1e}, qubit error {err_q:.1e}, max cocycle residual {worst:.1e}")


def test_criterion_3_propagation_bounds(tmp_path):
    t0 = time.perf_counter()
    code = main(["lr-check", "--config", "builtin:lr-tfim10", "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "lr-check.json").read_text())
    summ = rep["summary"]
    kinds = {}
    for line in csv_body(tmp_path / "lr-check.csv").splitlines()[1:]:
        kinds[line.split(",")[0]] = kinds.get(line.split(",")[0], 0) + 1
    ok = (code == 0 and summ["violations"] == 0 and kinds.get("commutator", 0) >= 100
          and kinds.get("delta", 0) > 0 and kinds.get("volume", 0) > 0)
    record(3, ok, time.perf_counter() - t0, 600,
           f"{summ['samples']} rows {kinds}, violations {summ['violations']}, I = {summ['I']:.1f}")


def test_criterion_4_transform_identity(tmp_path):
    t0 = time.perf_counter()
    code = main(["transform-check", "--config", "builtin:transform-6", "--out", str(tmp_path)])
    rows = csv_body(tmp_path / "transform-check.csv").splitlines()
    header = rows[0].split(",")
    col = header.index("residual")
    res = [float(r.split(",")[col]) for r in rows[1:]]
    ok = code == 0 and len(res) == 10 and max(res) <= 1e-8
    record(4, ok, time.perf_counter() - t0, 300,
           f"{len(res)} draws, max residual {max(res):.1e}")


def _cert(path):
    return json.loads(path.read_text())["certificate"]


def test_criterion_5_factorization(tmp_path):
    t0 = time.perf_counter()
    keys = ("residual_ata", "residual_www", "residual_ttt", "residual_quasifactor",
            "beta_support_defect")
    details, ok = [], True
    for name in ("factorize-chain8", "factorize-strip"):
        out = tmp_path / name
        code = main(["factorize", "--config", f"builtin:{name}", "--out", str(out)])
        c = _cert(out / "factorize.json")
        worst = max(c[k] for k in keys)
        ok &= code == 0 and worst <= 1e-6 and c["u_norm_defect"] <= 1e-8
        ok &= c["u_identity_defect"] > 1e-6  # the crossing term acts
        details.append(f"{name}: worst residual {worst:.1e}, u defect {c['u_norm_defect']:.1e}")
    # zone-respecting interaction on the chain: u and beta reduce to the identity
    R = Region.chain
    sw = ConeSandwich(R(6, 8), R(5, 8), R(3, 8), R(2, 8))
    phi0, _ = decouple(random_2local(8, seed=4), R(5, 8), R(3, 8))
    triv = factorize(phi0, sw, R(0, 8), EvolveConfig(tol=1e-9))
    ok &= triv.u_identity_defect <= 1e-8 and triv.beta_identity_defect <= 1e-8 and triv.valid
    details.append(f"zone-respecting: u-I {triv.u_identity_defect:.1e}, "
                   f"beta-id {triv.beta_identity_defect:.1e}")
    record(5, ok, time.perf_counter() - t0, 900, "; ".join(details))


def test_criterion_6_decay_estimate():
    t0 = time.perf_counter()
    F = FFunction(3.0, True, 2)
    rows = gf_decay_check(F, 2, 200)
    # independent right-hand side from the closed form
    ok = len(rows) == 199 and all(r["satisfied"] for r in rows)
    for r in rows:
        m = r["m"]
        rhs = (math.log(4 * math.pi) + math.sqrt(2) - 3 * math.log1p(m - math.sqrt(2))
               + math.log(m) - m)
        ok &= abs(rhs - r["log_rhs"]) < 1e-9
    assert DECAY_CONSTANT == pytest.approx(4 * math.pi * math.exp(math.sqrt(2)))
    worst = min(r["log_margin"] for r in rows)
    record(6, ok, time.perf_counter() - t0, 30, f"m = 2..200, smallest log margin {worst:.3f}")


def test_criterion_7_tail_sum():
    t0 = time.perf_counter()
    F = FFunction(3.0, True, 2)
    C = 4 * math.pi * math.exp(math.sqrt(2))
    e = math.e
    G = {m: g_f(F, m).upper for m in range(2, 401)}
    ok, worst = True, -math.inf
    for k in range(2, 51):
        direct = math.fsum(G[m] for m in range(k, 401))
        log_bound = (math.log(C) - k + 1 + math.log((e - 1) * k + 1) - 2 * math.log(e - 1))
        ok &= math.log(direct) <= log_bound
        worst = max(worst, math.log(direct) - log_bound)
    record(7, ok, time.perf_counter() - t0, 60,
           f"k = 2..50, largest log(direct/bound) {worst:.3f}")


def test_criterion_8_summability(tmp_path):
    t0 = time.perf_counter()
    deg = math.pi / 180
    a, b, eps = 30 * deg, 15 * deg, 5 * deg
    d1, d2p = default_offsets(a, b, eps, 1.0)
    cfg = ConePairConfig(a, b, eps, 20.0, d1, d2p, 1.0, 2, 1.0)
    from quasiloc.interaction import tfim
    phi = tfim(1.0, 1.0, (3, 3))
    lat = LatticeConfig(2, 600)
    F = FFunction(3.0, True, 2)
    dbl = doubling_check(phi, cfg, lat, F, shells=16)
    cert = certify_anan(phi, cfg, lat, F, shells=16)
    ok = cert.converged and math.isfinite(cert.total_upper) and dbl["within_tail"]
    rejected = main(["summability", "--config", "builtin:summability-parallel",
                     "--out", str(tmp_path)]) == 1
    try:
        ConePairConfig(a, a, eps, 20.0, d1, d2p)
        rejected = False
    except GeometryInfeasibleError:
        pass
    sep_err = abs(lattice_cone_distance(cfg, 100) - 20.0 * math.sin(a))
    dg_err = max(abs(lattice_d_gamma1(cfg, n) - d_gamma1(cfg, n)) for n in (25, 40, 60, 90, 120))
    ok = ok and rejected and sep_err <= math.sqrt(2) and dg_err <= math.sqrt(2)
    record(8, ok, time.perf_counter() - t0, 120,
           f"total {cert.total_upper:.3f}, doubling change {dbl['change']:.3f} vs tail "
           f"{dbl['tail_K']:.3f}, alpha = beta rejected {rejected}, geometry errors "
           f"{sep_err:.2f} / {dg_err:.2f}")


def test_criterion_9_reproducibility(tmp_path):
    t0 = time.perf_counter()
    same = True
    for sub, conf in (("transform-check", "builtin:transform-6"), ("gf-suite", "builtin:gf-suite"),
                      ("summability", "builtin:summability-nn"),
                      ("geometry", "builtin:geometry-nn")):
        bodies = []
        for run in ("a", "b"):
            out = tmp_path / f"{sub}-{run}"
            assert main([sub, "--config", conf, "--out", str(out), "--seed", "5"]) == 0
            bodies.append((out / f"{sub}.csv").read_bytes().split(b"\n", 1)[1])
        same &= bodies[0] == bodies[1]
    record(9, same, time.perf_counter() - t0, 600,
           "byte-identical CSV bodies for transform-check, gf-suite, summability, geometry")

import math

import numpy as np
import pytest

from quasiloc.algebra import embed_matrix, pauli_string, spectral_norm
from quasiloc.errors import DomainError
from quasiloc.ffunc import FFunction, cf_bounds
from quasiloc.interaction import (Interaction, InteractionTerm, TimeProfile, decouple, f_mxy,
                                  i_phi, interaction_norm, list_generators, local_hamiltonian,
                                  make_interaction, random_2local, tfim, weight, xxz)
from quasiloc.lattice import Cone, Region, distance

F = FFunction(3.0, True, 2)


def kron_chain(ops):
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def test_time_profile_basics():
    p = TimeProfile.linear(1.0, -3.0)
    assert p(0.5) == pytest.approx(-0.5)
    assert p.sup_abs() == pytest.approx(2.0)
    q = TimeProfile((0.0, 0.5, 1.0), ((0.0, 2.0), (2.0, -2.0)))  # hat function
    assert q(0.5) == pytest.approx(1.0) and q(1.0) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        TimeProfile((0.0, 0.5, 1.0), ((0.0,), (1.0,)))
    with pytest.raises(DomainError):
        p(1.5)
    quad = TimeProfile((0.0, 1.0), ((0.0, 1.0, -1.0),))  # t - t^2
    assert quad.sup_abs() == pytest.approx(0.25)


def test_term_rejects_non_hermitian():
    with pytest.raises(DomainError):
        InteractionTerm(Region.chain(0, 1), np.array([[0, 1], [0, 0]]))


def test_empty_and_single_term_hamiltonian():
    vol = Region.chain(0, 3)
    H = local_hamiltonian(Interaction(), vol, 0.0)
    assert not np.any(H.matrix)
    X = Region.chain(1, 3)
    phi = Interaction((InteractionTerm(X, pauli_string("ZZ")),))
    H = local_hamiltonian(phi, vol, 0.3)
    assert np.allclose(H.matrix, embed_matrix(pauli_string("ZZ"), X, vol))


def test_tfim_matches_kronecker_assembly():
    n, J, h = 6, 0.8, 1.3
    I, X, Z = np.eye(2), pauli_string("X"), pauli_string("Z")
    ref = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n - 1):
        ops = [I] * n
        ops[i] = ops[i + 1] = Z
        ref -= J * kron_chain(ops)
    for i in range(n):
        ops = [I] * n
        ops[i] = X
        ref -= h * kron_chain(ops)
    H = local_hamiltonian(tfim(J, h, n), Region.chain(0, n), 0.0)
    assert np.allclose(H.matrix, ref, atol=1e-13)


def test_interaction_norm_single_term_and_empty():
    assert interaction_norm(Interaction(), F, 0.0) == 0.0
    h = 0.7
    phi = Interaction((InteractionTerm(Region.chain(0, 2), h * pauli_string("XX")),))
    # pairs (x, x) at distance 0 give h / F(0) = h; the pair at distance 1 dominates
    assert interaction_norm(phi, F, 0.0) == pytest.approx(h / float(F(1.0)))


def test_interaction_norm_matches_pair_scan():
    phi = random_2local(sites=(3, 3), seed=11, time_dependent=False)
    t = 0.0
    best = 0.0
    sites = sorted({s for term in phi for s in term.region})
    for x in sites:
        for y in sites:
            w = sum(spectral_norm(phi.value(X, t), True) for X in phi.groups if x in X and y in X)
            best = max(best, w / float(F(distance(x, y))))
    assert interaction_norm(phi, F, t) == pytest.approx(best, rel=1e-12)


def test_i_phi_constant_and_ramp():
    cf = cf_bounds(F)[1]
    phi = tfim(1.0, 0.5, 4)
    assert i_phi(phi, F) == pytest.approx(cf * interaction_norm(phi, F, 0.0))
    ramp = Interaction(tuple(InteractionTerm(t.region, t.matrix, TimeProfile.linear(0.0, 1.0))
                             for t in phi))
    assert i_phi(ramp, F) == pytest.approx(0.5 * i_phi(phi, F), rel=1e-9)


def test_i_phi_piecewise_matches_trapezoid():
    prof = TimeProfile((0.0, 0.3, 1.0), ((1.0, -2.0), (0.58, -0.6)))
    phi = Interaction((InteractionTerm(Region.chain(0, 2), pauli_string("ZZ"), prof),
                       InteractionTerm(Region.chain(1, 2), pauli_string("X"))))
    ts = np.linspace(0, 1, 100_001)
    vals = np.array([interaction_norm(phi, F, t) for t in ts[::100]])
    # the integrand is piecewise linear between kinks, so a coarse grid through
    # the breakpoints is already exact; compare with a fine trapezoid anyway
    fine = np.interp(ts, ts[::100], vals)
    ref = cf_bounds(F)[1] * np.trapezoid(fine, ts)
    assert i_phi(phi, F) == pytest.approx(ref, rel=1e-6)


def test_weight():
    phi = Interaction((InteractionTerm(Region.chain(0, 2), pauli_string("XX")),))
    assert weight(phi, 0) is phi
    assert np.allclose(weight(phi, 1).terms[0].at(0.4), 2 * pauli_string("XX"))
    rnd = random_2local(sites=6, seed=3, time_dependent=False)
    for t in (0.0, 0.5):
        assert interaction_norm(weight(rnd, 1), F, t) <= rnd.size_cap * interaction_norm(rnd, F, t) + 1e-12


def test_metadata():
    phi = xxz(1.0, 0.5, 0.0, (3, 3))
    assert phi.range == pytest.approx(1.0) and phi.size_cap == 2
    assert phi.uniform_bound == pytest.approx(spectral_norm(
        pauli_string("XX") + pauli_string("YY") + 0.5 * pauli_string("ZZ"), True))


def test_decouple_regions():
    vol = Region.chain(0, 8)
    g1, g2 = Region.chain(0, 3), Region.chain(0, 6)
    phi = random_2local(sites=8, seed=5)
    phi0, phi1 = decouple(phi, g1, g2)
    for term in phi0:
        assert (term.region.issubset(g1) or term.region.issubset(g2 - g1)
                or term.region.isdisjoint(g2))
    assert len(phi1) == 2  # bonds 2-3 and 5-6 cross
    for t in (0.0, 0.37, 1.0):
        diff = (local_hamiltonian(phi0, vol, t).matrix - local_hamiltonian(phi1, vol, t).matrix
                - local_hamiltonian(phi, vol, t).matrix)
        assert np.abs(diff).max() < 1e-12
    inside = Interaction(tuple(t for t in phi if t.region.issubset(g1)))
    assert len(decouple(inside, g1, g2)[1]) == 0
    with pytest.raises(DomainError):
        decouple(phi, g2, g1)


def test_decouple_with_cones():
    g1 = Cone((0.5, 0.0), 0.0, math.pi / 4)
    g2 = Cone((-0.5, 0.0), 0.0, math.pi / 3)
    phi = tfim(1.0, 1.0, (4, 3))
    phi0, phi1 = decouple(phi, g1, g2)
    assert len(phi0) + len(phi1) == len(phi) and len(phi1) > 0


def test_f_mxy():
    g1p = Cone((20.0, 0.0), 0.0, math.radians(10))
    g2p = Cone((-20.0, 0.0), 0.0, math.radians(60))
    phi = tfim(1.0, 1.0, Region.rectangle(3, 1, origin=(0, 0)))
    # sites too far apart
    assert f_mxy(phi, g1p, g2p, 100, (0, 0), (2, 0)) == 0.0
    # deep inside the sandwich: the complement is several sites away
    assert f_mxy(phi, g1p, g2p, 0, (0, 0), (1, 0)) == 0.0
    val = f_mxy(phi, g1p, g2p, 1000, (0, 0), (1, 0))
    assert val == pytest.approx(2.0)
    bound = phi.size_cap * phi.uniform_bound * 2 ** 5  # |b_0(1)| = 5 on Z^2
    assert val <= bound
    with pytest.raises(DomainError):
        f_mxy(phi, g1p, g2p, -1, (0, 0), (1, 0))


def test_json_round_trip_and_generators():
    phi = random_2local(sites=4, seed=2)
    back = Interaction.from_json(json_round(phi))
    assert back.dumps() == phi.dumps()
    spec = {"terms": [{"sites": [[0], [1]], "pauli": "ZZ", "coeff": -1.0},
                      {"sites": [[0]], "pauli": "X", "profile": 0.5}]}
    small = Interaction.from_json(spec)
    assert np.allclose(small.terms[0].matrix, -pauli_string("ZZ"))
    names = [g["name"] for g in list_generators()]
    assert names == sorted(names) and "tfim" in names
    assert make_interaction("tfim", J=1.0, h=0.0, sites=3).dumps() == tfim(1.0, 0.0, 3).dumps()
    with pytest.raises(DomainError):
        make_interaction("nope")


def json_round(phi):
    import json
    return json.loads(phi.dumps())

import math

import numpy as np
import pytest
from scipy.linalg import expm

from quasiloc.algebra import cond_expect_matrix, pauli_string
from quasiloc.dynamics import EvolveConfig
from quasiloc.errors import DomainError
from quasiloc.factorize import (ConeSandwich, boundary_potential, factorize,
                                interpolating_unitary, make_probes, split_shape_check)
from quasiloc.interaction import (Interaction, InteractionTerm, TimeProfile, decouple,
                                  random_2local)
from quasiloc.lattice import Cone, Region
from quasiloc.transform import TransformedInteraction

R = Region.chain
VOL = R(0, 6)
SW = ConeSandwich(R(5, 6), R(4, 6), R(2, 6), R(1, 6))
CFG = EvolveConfig(tol=1e-9)


def crossing_instance(seed=4):
    base = random_2local(6, seed=seed)
    phi0, _ = decouple(base, R(4, 6), R(2, 6))
    cross = InteractionTerm(Region.of([(3,), (4,)]), 0.7 * pauli_string("ZZ"),
                            TimeProfile.linear(0.5, 0.5))
    return phi0, phi0 + Interaction((cross,))


def test_sandwich_validation():
    with pytest.raises(DomainError):
        ConeSandwich(R(5, 6), R(4, 6), R(2, 6), Cone())
    with pytest.raises(DomainError):
        ConeSandwich(R(4, 6), R(4, 6), R(2, 6), R(1, 6)).validate(VOL)
    with pytest.raises(DomainError):
        ConeSandwich(Cone(half_angle=0.5), Cone(half_angle=0.4), Cone(half_angle=0.6),
                     Cone(half_angle=0.7))
    zones = SW.zones(VOL)
    assert zones["gamma1"] == R(4, 6) and zones["outside_gamma2"] == R(0, 2)
    assert SW.strip(VOL) == R(1, 5)
    back = ConeSandwich.from_json(SW.to_json())
    assert back.regions(VOL) == SW.regions(VOL)


def test_boundary_potential_vanishes_without_crossing_terms():
    phi0, _ = crossing_instance()
    V, contrib = boundary_potential(phi0, SW, VOL, 0.5, CFG)
    assert contrib == {} and not np.any(V)


def test_boundary_potential_matches_term_by_term():
    _, phi = crossing_instance()
    zones = SW.regions(VOL)
    _, phi1 = decouple(phi, zones["gamma1"], zones["gamma2"])
    psi = TransformedInteraction(phi, phi1, 1.0, VOL, CFG)
    t = 0.4
    V, contrib = boundary_potential(phi, SW, VOL, t, psi=psi)
    S = SW.strip(VOL)
    ref = np.zeros_like(V)
    for Z, M in psi.terms(t).items():
        piece = M - cond_expect_matrix(M, VOL, S)
        if Z.issubset(S):
            assert np.abs(piece).max() < 1e-12
        ref = ref + piece
    assert np.abs(V - ref).max() < 1e-12
    assert np.allclose(V, V.conj().T)


def test_interpolating_unitary_constant_generator():
    vol = R(0, 2)
    dim = 4
    Vc = 0.3 * pauli_string("XY") + 0.2 * pauli_string("ZI")
    zero = np.zeros((dim, dim), complex)
    W = interpolating_unitary(lambda r: zero, lambda r: Vc, 1.0, 0.2, EvolveConfig(tol=1e-11),
                              volume=vol)
    assert np.abs(W.matrix - expm(-1j * (0.2 - 1.0) * Vc)).max() < 1e-10
    W0 = interpolating_unitary(lambda r: zero, lambda r: zero, 1.0, 0.0, volume=vol)
    assert np.abs(W0.matrix - np.eye(dim)).max() < 1e-14
    with pytest.raises(DomainError):
        interpolating_unitary(lambda r: zero, lambda r: zero, 1.0, 0.0)


def test_make_probes_are_deterministic_and_local():
    zones = SW.zones(VOL)
    a = make_probes(zones, seed=3, per_zone=5)
    b = make_probes(zones, seed=3, per_zone=5)
    assert len(a) == 15
    for (na, sa, ma), (nb, sb, mb) in zip(a, b):
        assert na == nb and sa == sb and np.array_equal(ma, mb)
        assert sa.issubset(zones[na]) and len(sa) in (1, 2)


def test_zone_respecting_certificate_is_trivial():
    phi0, _ = crossing_instance()
    cert = factorize(phi0, SW, VOL, CFG, probes_per_zone=5)
    assert cert.valid
    assert cert.u_identity_defect <= 10 * CFG.tol
    assert cert.beta_identity_defect <= 10 * CFG.tol
    assert split_shape_check(cert, SW)["max_defect"] <= 10 * CFG.tol


def test_crossing_term_certificate_is_valid():
    _, phi = crossing_instance()
    cert = factorize(phi, SW, VOL, CFG, probes_per_zone=5)
    assert cert.valid, cert.checks
    for key in ("residual_ata", "residual_www", "residual_ttt", "residual_quasifactor"):
        assert getattr(cert, key) <= 1e-6
    assert cert.u_norm_defect <= 10 * CFG.tol
    assert cert.u_identity_defect > 1e-3  # the crossing term is not trivial
    again = factorize(phi, SW, VOL, CFG, probes_per_zone=5)
    assert again.residual_quasifactor == pytest.approx(cert.residual_quasifactor, abs=1e-12)
    report = split_shape_check(cert, SW)
    assert report["max_defect"] <= 1e-6


def test_psi_modes_agree():
    _, phi = crossing_instance(seed=6)
    a = factorize(phi, SW, VOL, CFG, probes_per_zone=3, psi_mode="total")
    b = factorize(phi, SW, VOL, CFG, probes_per_zone=3, psi_mode="terms")
    assert a.valid and b.valid
    assert abs(a.u_identity_defect - b.u_identity_defect) < 1e-7
    with pytest.raises(DomainError):
        factorize(phi, SW, VOL, CFG, psi_mode="bogus")


def test_cone_sandwich_on_strip_lattice():
    vol = Region.rectangle(4, 3)
    sw = ConeSandwich(Cone((3.0, 1.0), 0.0, math.radians(30)),
                      Cone((2.5, 1.0), 0.0, math.radians(80)),
                      Cone((1.5, 1.0), 0.0, math.radians(85)),
                      Cone((0.5, 1.0), 0.0, math.radians(88)))
    regions = sw.validate(vol)
    assert regions["gamma1p"] == Region.of([(3, 1)])
    assert regions["gamma1p"] < regions["gamma1"] < regions["gamma2"] < regions["gamma2p"]
    empty = ConeSandwich(Cone((9.0, 1.0), 0.0, 0.1), *(Cone((x, 1.0), 0.0, a) for x, a in
                                                        ((2.5, 1.4), (1.5, 1.48), (0.5, 1.53))))
    with pytest.raises(DomainError):
        empty.validate(vol)

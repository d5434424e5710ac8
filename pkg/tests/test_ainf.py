import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import twistcx.ainf as ainf
from twistcx.ainf import (
    AinfPrenat,
    ProbeSet,
    QuasiInverseWitness,
    build_phi,
    build_phi0,
    build_phi1,
    check_back_face_sum,
    check_face_exchange_sum,
    check_front_face_sum,
    closure_report,
    compose_ainf,
    d_infinity,
    identity_prenat,
    level1_residual,
    level2_residual,
    lift_witness,
    naturality_defect,
    phi_data,
    quasi_inverse_exists,
    random_prenat,
    sgn,
    verify_phi,
    verify_quasi_inverse,
)
from twistcx.errors import StructuralError
from twistcx.fixtures import constant_bundle, constant_homotopy, point_bundle
from twistcx.generate import generate_bundle, make_rng
from twistcx.twisted import TwistedMorphism, is_weak_equivalence, morphism_diff

seeds = st.integers(0, 2**16)


def hp(b):
    return b.homotopies["h"], b.probes["P"]


def all_zero(A, B, probe, levels=3, sign=1):
    """A == sign * B on every probe chain up to ``levels``."""
    for l in range(levels + 1):
        for ch in probe.chains(l):
            if not (A.component(ch) - B.component(ch).scale(sign)).is_zero():
                return False
    return True


def is_closed(Phi, probe, levels=3):
    return closure_report(Phi, probe, levels).ok


# ---------------------------------------------------------------------------
# d-infinity


def test_identity_prenat_is_closed(fld):
    b = generate_bundle(0, fld=fld)
    h, P = hp(b)
    assert is_closed(identity_prenat(phi_data(h).F), P)


def test_level1_of_differential_for_level0_data(fld):
    b = generate_bundle(1, fld=fld)
    h, P = hp(b)
    D = phi_data(h)
    R = random_prenat(h, P, 0, make_rng(3))
    R0 = AinfPrenat(D.F, D.G, 0, R.at, None)
    dR = d_infinity(R0)
    for u in P.morphisms:
        m = u.degree
        want = (R0.at(u.target) * D.F.mor(u)).scale(sgn(m)) + (D.G.mor(u) * R0.at(u.source)).scale(sgn(m + 1))
        assert dR.apply((u,)) == want


def test_level2_of_differential_at_degree_zero(fld):
    # d(Phi^2) - (-1)^{|u1|+|u2|} Phi^1(u2) F(u1) - (-1)^{|u2|} G(u2) Phi^1(u1)
    #   + (-1)^{|u2|} Phi^2(u2, du1) - Phi^2(du2, u1) + (-1)^{|u2|} Phi^1(u2 u1)
    b = generate_bundle(2, fld=fld)
    h, P = hp(b)
    D = phi_data(h)
    R = random_prenat(h, P, 0, make_rng(9))
    dR = d_infinity(R)
    for u2, u1 in P.chains(2):
        a, c = u2.degree, u1.degree
        du1, du2 = morphism_diff(u1, cross_check=False), morphism_diff(u2, cross_check=False)
        want = morphism_diff(R.apply((u2, u1)), cross_check=False)
        want = want - (R.apply((u2,)) * D.F.mor(u1)).scale(sgn(a + c))
        want = want - (D.G.mor(u2) * R.apply((u1,))).scale(sgn(a))
        want = want + R.apply((u2, du1)).scale(sgn(a)) - R.apply((du2, u1))
        want = want + R.apply((u2 * u1,)).scale(sgn(a))
        assert dR.apply((u2, u1)) == want


@pytest.mark.parametrize("degree", [-1, 0, 1])
def test_d_infinity_squares_to_zero(fld, degree):
    b = generate_bundle(degree + 1, fld=fld)
    h, P = hp(b)
    R = random_prenat(h, P, degree, make_rng(17 + degree))
    rep = closure_report(d_infinity(R), P, 3)
    assert rep.ok, rep.to_text()


@settings(max_examples=6)
@given(seed=seeds, degree=st.sampled_from([-1, 0, 1]))
def test_d_infinity_squares_to_zero_property(seed, degree):
    b = generate_bundle(seed % 7)
    h, P = hp(b)
    R = random_prenat(h, P, degree, make_rng(seed), max_level=2)
    assert is_closed(d_infinity(R), P, 2)


def test_differential_raises_degree():
    b = generate_bundle(0)
    h, P = hp(b)
    R = random_prenat(h, P, -1, make_rng(0))
    assert d_infinity(R).degree == 0
    assert d_infinity(d_infinity(R)).degree == 1


# ---------------------------------------------------------------------------
# composition


def test_identity_is_a_unit_for_composition(fld):
    b = generate_bundle(0, fld=fld)
    h, P = hp(b)
    D = phi_data(h)
    Phi = build_phi(h)
    assert all_zero(compose_ainf(identity_prenat(D.G), Phi), Phi, P)
    assert all_zero(compose_ainf(Phi, identity_prenat(D.F)), Phi, P)


def test_composition_level1_formula(fld):
    b = constant_bundle(1, fld)
    h, P = hp(b)
    S = random_prenat(h, P, 0, make_rng(1))
    T = random_prenat(h, P, 0, make_rng(2))
    C = compose_ainf(S, T)
    for u in P.morphisms:
        assert C.apply((u,)) == S.apply((u,)) * T.at(u.source) + S.at(u.target) * T.apply((u,))


def test_composite_of_closed_is_closed(fld):
    b = generate_bundle(3, fld=fld)
    h, P = hp(b)
    Phi = build_phi(h)
    Psi = build_phi(constant_homotopy(h.g))
    C = compose_ainf(Psi, Phi)
    assert C.degree == 0
    assert is_closed(C, P)


def test_composition_checks_functors():
    b = generate_bundle(0)
    h, _ = hp(b)
    D = phi_data(h)
    assert D.F != D.G
    Phi = build_phi(h)
    with pytest.raises(StructuralError):
        compose_ainf(Phi, Phi)


@pytest.mark.parametrize("ds,dt", [(-1, 0), (0, 1), (1, -1), (1, 1)])
def test_differential_is_a_derivation_of_composition(ds, dt):
    b = constant_bundle(2)
    h, P = hp(b)
    S = random_prenat(h, P, ds, make_rng(3 + ds), max_level=2)
    T = random_prenat(h, P, dt, make_rng(11 + dt), max_level=2)
    lhs = d_infinity(compose_ainf(S, T))
    rhs1 = compose_ainf(d_infinity(S), T)
    rhs2 = compose_ainf(S, d_infinity(T))
    for l in range(3):
        for ch in P.chains(l):
            diff = lhs.component(ch) - rhs1.component(ch) - rhs2.component(ch).scale(sgn(ds))
            assert diff.is_zero()


def test_mutated_composition_sign_is_detected(monkeypatch):
    b = constant_bundle(2)
    h, P = hp(b)
    S = random_prenat(h, P, 0, make_rng(5), max_level=2)
    T = random_prenat(h, P, 1, make_rng(6), max_level=2)

    def derivation_holds():
        lhs = d_infinity(compose_ainf(S, T))
        rhs = compose_ainf(d_infinity(S), T)
        rhs2 = compose_ainf(S, d_infinity(T))
        return all(
            (lhs.component(ch) - rhs.component(ch) - rhs2.component(ch)).is_zero()
            for l in range(3)
            for ch in P.chains(l)
        )

    assert derivation_holds()
    monkeypatch.setattr(ainf, "compose_sign", lambda n, s: 1)
    S._memo.clear(), T._memo.clear()
    assert not derivation_holds()


# ---------------------------------------------------------------------------
# the transformation induced by a homotopy


def test_point_phi0_is_identity(fld):
    b = point_bundle(fld)
    h = b.homotopies["h"]
    for X in b.twisted.values():
        p0 = build_phi0(h, X)
        assert p0 == TwistedMorphism.identity(p0.source)


def test_point_phi1_value(fld):
    b = point_bundle(fld)
    h = b.homotopies["h"]
    p1 = build_phi1(h, b.morphisms["lift"])
    assert p1.degree == -1
    blk = p1.theta.blocks[(0, -1)][0]
    assert blk[0, 1] == fld.coerce(-3)
    assert p1.theta.pieces() == [(0, -1)]


def test_phi1_of_zero_is_zero(fld):
    b = point_bundle(fld)
    assert build_phi1(b.homotopies["h"], b.morphisms["zero"]).is_zero()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_constant_homotopy_phi1_expansion(fld, seed):
    """Phi_1(u)^{k, q} at x equals (-1)^{m-1} sum_i (-1)^i u^{k+1, q}(s_i x)."""
    b = constant_bundle(seed, fld)
    h, P = hp(b)
    V = h.f.target
    for u in P.morphisms:
        got = build_phi1(h, u).theta
        m = u.degree
        for k in range(h.max_level + 1):
            for q in {q for (p, q) in u.theta.blocks if p == k + 1} | {q for (p, q) in got.blocks if p == k}:
                src = u.theta.blocks.get((k + 1, q), {})
                have = got.blocks.get((k, q), {})
                for x in range(V.size(k)):
                    acc = fld.zeros(*got.shape_at(k, x))
                    for i in range(k + 1):
                        y = int(V.degeneracy(k, i)[x])
                        if y in src:
                            acc = fld.madd(acc, fld.mscale(fld.coerce(sgn(i + m - 1)), src[y]))
                    cur = have.get(x, fld.zeros(*got.shape_at(k, x)))
                    assert fld.is_zero(fld.msub(acc, cur))


@pytest.mark.parametrize("seed", range(4))
def test_generated_phi_passes_everything(fld, seed):
    b = generate_bundle(seed, fld=fld)
    h, P = hp(b)
    rep = verify_phi(h, P, 3)
    assert rep.ok, rep.to_text()
    for X in P.objects:
        assert is_weak_equivalence(build_phi0(h, X))


def test_residuals_vanish_on_point(fld):
    b = point_bundle(fld)
    h, P = hp(b)
    for u in P.morphisms:
        assert level1_residual(h, u).is_zero()
    for u2, u1 in P.chains(2):
        assert level2_residual(h, u2, u1).is_zero()
    assert verify_phi(h, P, 3).ok


def test_single_object_probe(fld):
    b = point_bundle(fld)
    h = b.homotopies["h"]
    E = b.twisted["E"]
    P = ProbeSet([E], [b.morphisms["twice"], b.morphisms["zero"]], name="single")
    assert verify_phi(h, P, 3).ok


def test_probe_rejects_foreign_morphism(fld):
    b = point_bundle(fld)
    with pytest.raises(StructuralError):
        ProbeSet([b.twisted["E"]], [b.morphisms["lift"]])


def test_naturality_defect_witness_exists():
    found = 0
    for seed in range(4):
        b = generate_bundle(seed)
        h, P = hp(b)
        name = b.meta.get("naturality_defect_witness")
        if name is None:
            continue
        assert not naturality_defect(h, b.morphisms[name]).is_zero()
        assert verify_phi(h, P, 3).ok
        found += 1
    assert found >= 1


@pytest.mark.parametrize("seed", [0, 2])
def test_reindexing_identities(fld, seed):
    b = generate_bundle(seed, fld=fld)
    h, P = hp(b)
    assert check_face_exchange_sum(h).ok
    for u2, u1 in P.chains(2):
        assert check_front_face_sum(h, u2, u1).ok
        assert check_back_face_sum(h, u2, u1).ok


def test_mutated_phi1_sign_is_detected(monkeypatch):
    b = generate_bundle(0)
    h, P = hp(b)
    assert verify_phi(h, P, 2, reindexing=False).ok
    monkeypatch.setattr(ainf, "phi1_sign", lambda m: sgn(m))
    rep = verify_phi(h, P, 2, reindexing=False)
    assert not rep.ok
    assert "first-order identity for Phi_1" in [c.name for c in rep.failed()]


# ---------------------------------------------------------------------------
# quasi-inverses


def test_point_quasi_inverse_witness(fld):
    b = point_bundle(fld)
    h, P = hp(b)
    Phi = build_phi(h)
    ok, certs = quasi_inverse_exists(Phi, P)
    assert ok and set(certs) == {"E", "F"}
    W = lift_witness(Phi, P, certs)
    rep = verify_quasi_inverse(Phi, W, P, max_level=0)
    assert rep.ok, rep.to_text()


def test_corrupted_omega_is_located(fld):
    b = point_bundle(fld)
    h, P = hp(b)
    Phi = build_phi(h)
    _, certs = quasi_inverse_exists(Phi, P)
    W = lift_witness(Phi, P, certs)
    D = phi_data(h)
    Fobj = b.twisted["F"]
    extra = D.G.mor(b.morphisms["contraction"])
    assert not morphism_diff(extra, cross_check=False).is_zero()
    bad = AinfPrenat(
        D.G, D.G, -1, lambda X: W.omega.at(X) + extra if X is Fobj else W.omega.at(X), None, name="omega"
    )
    rep = verify_quasi_inverse(Phi, QuasiInverseWitness(W.Psi, W.eta, bad), P, max_level=0)
    assert [c.name for c in rep.failed()] == ["Phi.Psi - id = d omega at level 0"]
    assert rep.failed()[0].details[0]["input"] == "F"


def test_quasi_inverse_exists_on_generated(fld):
    b = generate_bundle(1, fld=fld)
    h, P = hp(b)
    Phi = build_phi(h)
    ok, certs = quasi_inverse_exists(Phi, P)
    assert ok
    rep = verify_quasi_inverse(Phi, lift_witness(Phi, P, certs), P, max_level=1, required_levels=0)
    assert rep.ok


def test_zero_transformation_has_no_quasi_inverse(fld):
    b = point_bundle(fld)
    h, P = hp(b)
    D = phi_data(h)
    Z = AinfPrenat(D.F, D.G, 0, lambda X: None, None, name="zero")
    assert is_closed(Z, P)
    ok, certs = quasi_inverse_exists(Z, P)
    assert not ok
    assert certs["E"] is None
    assert certs["F"] is not None  # F is acyclic, so zero is a homotopy equivalence

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import twistcx.twisted as tw
from twistcx.cech import CechElement, GradedSheaf
from twistcx.errors import ConventionError, InvariantViolation, StructuralError, TruncationError
from twistcx.exact_linalg import GradedModule
from twistcx.generate import (
    SizeParams,
    make_rng,
    pullback_type_complex,
    random_cover,
    random_homotopy,
    random_morphism,
    random_twisted,
)
from twistcx.simplicial import SimplicialMap, nerve, nerve_map, point_space
from twistcx.twisted import (
    TwistedComplex,
    TwistedMorphism,
    check_nondegenerate,
    ho_invert,
    ho_invert_window,
    is_weak_equivalence,
    mc_residual,
    mc_residual_explicit,
    morphism_diff,
    morphism_diff_explicit,
    pullback_morphism,
    pullback_twisted,
    validate_twisted,
)

seeds = st.integers(0, 2**32 - 1)


def point_complex(fld, ranks, arrows, a10=True, N=3):
    P = point_space(N)
    mod = GradedModule.of(ranks)
    E = GradedSheaf(fld, P, [mod], name="E")
    d = fld.zeros(mod.total, mod.total)
    for i, j in arrows:
        d[i, j] = fld.one
    blocks = {(0, 1): {0: d}}
    if a10:
        blocks[(1, 0)] = {0: fld.eye(mod.total)}
    return TwistedComplex(E, CechElement(E, E, blocks), name="E")


def instance(fld, seed, objects=2, homology=True):
    rng = make_rng(seed)
    V = nerve(random_cover(rng, 3, 4), 3, name="V")
    objs = [random_twisted(fld, V, rng, SizeParams(), name=f"E{i}", homology=homology) for i in range(objects)]
    return V, objs, rng


def rmor(s, t, deg, rng):
    return random_morphism(s, t, deg, rng)


# ---------------------------------------------------------------------------
# Maurer-Cartan


def test_point_mc_examples(fld):
    T = point_complex(fld, {0: 1, 1: 1}, [(1, 0)])
    assert mc_residual(T).is_zero()
    assert validate_twisted(T).ok
    bad = point_complex(fld, {0: 1, 1: 1, 2: 1}, [(1, 0), (2, 1)])
    res = mc_residual(bad)
    assert res.pieces() == [(0, 2)]
    assert not validate_twisted(bad).ok


def test_a10_zero_fails_nondegeneracy(fld):
    T = point_complex(fld, {0: 1}, [], a10=False)
    assert mc_residual(T).is_zero()
    rep = check_nondegenerate(T)
    assert not rep.ok
    assert check_nondegenerate(point_complex(fld, {0: 1}, [])).ok


@pytest.mark.parametrize("seed", range(6))
def test_generated_complexes_are_valid(fld, seed):
    V, objs, rng = instance(fld, seed)
    for T in objs:
        rep = validate_twisted(T)
        assert rep.ok, rep.to_text()
        assert mc_residual_explicit(T).is_zero()
        base, _ = T._cache["gauge"]
        assert check_nondegenerate(base).ok


def test_window_requirement():
    from twistcx.exact_linalg import QQ

    T = point_complex(QQ, {0: 1, 1: 1, 2: 1}, [(1, 0)], N=3)
    assert T.sheaf.amplitude() == 2
    assert not validate_twisted(T).ok
    assert validate_twisted(T, require_window=False).ok


def test_bad_degrees_rejected(fld):
    T = point_complex(fld, {0: 1}, [])
    with pytest.raises(StructuralError):
        TwistedComplex(T.sheaf, CechElement.identity(T.sheaf))
    with pytest.raises(StructuralError):
        TwistedMorphism(T, T, CechElement.identity(T.sheaf), 1)


# ---------------------------------------------------------------------------
# the morphism differential


def test_identity_is_closed(fld):
    V, objs, _ = instance(fld, 3)
    for T in objs:
        assert morphism_diff(TwistedMorphism.identity(T)).is_zero()


@given(seeds)
def test_d_squared_zero(fld, seed):
    V, (E, F), rng = instance(fld, seed % 40)
    rng = make_rng(seed)
    for deg in (-1, 0, 1):
        th = rmor(E, F, deg, rng)
        d1 = morphism_diff(th)
        assert d1.degree == deg + 1
        assert morphism_diff(d1).is_zero()
        assert morphism_diff_explicit(th) == d1.theta


@given(seeds)
def test_graded_leibniz(fld, seed):
    V, (E, F), _ = instance(fld, seed % 40)
    rng = make_rng(seed)
    a, b = int(rng.integers(-1, 2)), int(rng.integers(-1, 2))
    phi, psi = rmor(F, E, a, rng), rmor(E, F, b, rng)
    lhs = morphism_diff(phi * psi)
    sign = -1 if a % 2 else 1
    rhs = morphism_diff(phi) * psi + (phi * morphism_diff(psi)).scale(sign)
    assert lhs == rhs


def test_closed_composites_and_weak_equivalences(fld):
    V, (E, F), rng = instance(fld, 7)
    th = rmor(E, E, -1, rng)
    w1 = TwistedMorphism.identity(E) + morphism_diff(th)
    th2 = rmor(E, E, -1, rng)
    w2 = TwistedMorphism.identity(E) + morphism_diff(th2)
    c = w1 * w2
    assert morphism_diff(c).is_zero()
    assert is_weak_equivalence(w1) and is_weak_equivalence(w2) and is_weak_equivalence(c)


def test_non_mc_endpoint_is_refused(fld):
    bad = point_complex(fld, {0: 1, 1: 1, 2: 1}, [(1, 0), (2, 1)])
    with pytest.raises(InvariantViolation):
        morphism_diff(TwistedMorphism.identity(bad))


def test_corrupted_morphism_sign_is_detected(fld, monkeypatch):
    V, (E, F), rng = instance(fld, 2)
    thetas = [rmor(E, F, d, rng) for d in (-1, 0, 1)]
    monkeypatch.setattr(tw, "morphism_sign", lambda m: 1)
    detected = False
    for th in thetas:
        try:
            d1 = morphism_diff(th)
            if not morphism_diff(d1).is_zero():
                detected = True
        except ConventionError:
            detected = True
    assert detected


# ---------------------------------------------------------------------------
# pullback


@pytest.mark.parametrize("seed", range(5))
def test_pullback_functor_laws(fld, seed):
    rng = make_rng(seed)
    inst = random_homotopy(rng, SizeParams(truncation=3))
    U, V, f = inst["U"], inst["V"], inst["f"]
    E = random_twisted(fld, V, rng, SizeParams(), name="E")
    F = random_twisted(fld, V, rng, SizeParams(), name="F")
    ident = SimplicialMap.identity(V)
    assert pullback_twisted(ident, E).a == E.a
    fE = pullback_twisted(f, E)
    assert mc_residual(fE).is_zero()
    j = int(V.vertex_tuples[0][0, 0])
    c = nerve_map(V, V, lambda n, t: np.full_like(t, j), name="c")
    assert pullback_twisted(f.then(c), E).a == pullback_twisted(f, pullback_twisted(c, E)).a
    th = rmor(E, F, 0, rng)
    ps = rmor(F, E, 1, rng)
    assert pullback_morphism(f, morphism_diff(th)) == morphism_diff(pullback_morphism(f, th))
    assert pullback_morphism(f, th * ps) == pullback_morphism(f, th) * pullback_morphism(f, ps)
    assert pullback_morphism(f, TwistedMorphism.identity(E)) == TwistedMorphism.identity(fE)


# ---------------------------------------------------------------------------
# weak equivalences and homotopy inverses


def _check_witness(phi, res):
    E, F = phi.source, phi.target
    assert res.psi.degree == 0 and res.eta.degree == -1 and res.omega.degree == -1
    assert morphism_diff(res.psi).is_zero()
    assert res.psi * phi - TwistedMorphism.identity(E) == morphism_diff(res.eta)
    assert phi * res.psi - TwistedMorphism.identity(F) == morphism_diff(res.omega)


def test_identity_inverse(fld):
    V, (E, _), _ = instance(fld, 1)
    ident = TwistedMorphism.identity(E)
    assert is_weak_equivalence(ident)
    res = ho_invert(ident)
    assert res is not None
    _check_witness(ident, res)
    # the canonical witness is accepted by the same equations
    zero = TwistedMorphism.zero(E, E, -1)
    assert ident * ident - ident == morphism_diff(zero)


def test_zero_map_with_homology_is_not_invertible(fld):
    V, (E, _), _ = instance(fld, 1)
    z = TwistedMorphism.zero(E, E, 0)
    assert not is_weak_equivalence(z)
    assert ho_invert(z) is None


@pytest.mark.parametrize("seed", range(8))
def test_weak_equivalence_iff_homotopy_invertible(fld, seed):
    V, objs, rng = instance(fld, seed, objects=2, homology=bool(seed % 2))
    E, F = objs
    cands = [
        TwistedMorphism.identity(E) + morphism_diff(rmor(E, E, -1, rng)),
        morphism_diff(rmor(E, F, -1, rng)),
        TwistedMorphism.zero(E, F, 0),
    ]
    for phi in cands:
        res = ho_invert(phi)
        assert (res is not None) == is_weak_equivalence(phi)
        if res is not None:
            _check_witness(phi, res)


def test_ho_invert_preconditions(fld):
    V, (E, F), rng = instance(fld, 5)
    with pytest.raises(StructuralError):
        ho_invert(rmor(E, F, 1, rng))
    open_map = rmor(E, F, 0, rng)
    if not morphism_diff(open_map).is_zero():
        with pytest.raises(InvariantViolation):
            ho_invert(open_map)
    need = ho_invert_window(E.sheaf, F.sheaf)
    short = TwistedMorphism.identity(E).restrict(need - 1)
    with pytest.raises(TruncationError):
        ho_invert(short)

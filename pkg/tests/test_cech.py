import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import twistcx.cech as cech
from twistcx.cech import (
    CechElement,
    CechSection,
    GradedSheaf,
    act,
    compose,
    delta_hom,
    delta_section,
    gauge_transform,
    invert_graded,
    pullback_element,
    pullback_section,
    random_element,
    random_section,
    random_sheaf,
)
from twistcx.errors import ConventionError, StructuralError, TruncationError
from twistcx.exact_linalg import GradedModule
from twistcx.generate import SizeParams, make_rng, pullback_type_complex, random_cover, random_gauge, random_homotopy
from twistcx.simplicial import SimplicialMap, nerve, nerve_map, point_space

seeds = st.integers(0, 2**32 - 1)


def space(seed, N=3, sets=3, points=4):
    return nerve(random_cover(make_rng(seed), sets, points), N, name="V")


def homogeneous(source, target, deg, rng, N):
    return random_element(source, target, [(p, deg - p) for p in range(N + 1)], rng)


def triple(fld, seed, N=3):
    rng = make_rng(seed)
    S = space(seed, N)
    E, F, G, H = (random_sheaf(fld, S, rng, degrees=(-1, 0, 1), name=n) for n in "EFGH")
    w = homogeneous(E, F, int(rng.integers(-1, 2)), rng, N)
    v = homogeneous(F, G, int(rng.integers(-1, 2)), rng, N)
    u = homogeneous(G, H, int(rng.integers(-1, 2)), rng, N)
    return S, (E, F, G, H), (u, v, w), rng


def tdeg(u):
    return u.degree if u.degree is not None else 0


# ---------------------------------------------------------------------------
# an independent expansion on vertex tuples


def oracle_compose(u, v):
    """Products via tuple prefixes/suffixes, without the library's face tables."""
    S = u.space
    T = [{tuple(t): i for i, t in enumerate(S.vertex_tuples[n].tolist())} for n in range(S.N + 1)]
    fld = u.field
    out = {}
    for (p, q), ub in u.blocks.items():
        for (r, s), vb in v.blocks.items():
            if p + r > S.N:
                continue
            sign = -1 if (q * r) % 2 else 1
            for x, t in enumerate(S.vertex_tuples[p + r].tolist()):
                xu, xv = T[p][tuple(t[: p + 1])], T[r][tuple(t[p:])]
                if xu in ub and xv in vb:
                    m = fld.matmul(ub[xu], vb[xv])
                    m = m if sign > 0 else fld.mneg(m)
                    comp = out.setdefault((p + r, q + s), {})
                    comp[x] = fld.madd(comp[x], m) if x in comp else m
    return CechElement(v.source, u.target, out)


def oracle_delta(u, section=False):
    S = u.space
    T = [{tuple(t): i for i, t in enumerate(S.vertex_tuples[n].tolist())} for n in range(S.N + 1)]
    fld = u.field
    out = {}
    for (p, q), comp in u.blocks.items():
        if p + 1 > S.N:
            continue
        top = p + 1 if section else p
        for x, t in enumerate(S.vertex_tuples[p + 1].tolist()):
            for k in range(1, top + 1):
                y = T[p][tuple(t[:k] + t[k + 1 :])]
                if y in comp:
                    m = comp[y] if k % 2 == 0 else fld.mneg(comp[y])
                    tgt = out.setdefault((p + 1, q), {})
                    tgt[x] = fld.madd(tgt[x], m) if x in tgt else m
    if section:
        return CechSection(u.sheaf, out)
    return CechElement(u.source, u.target, out)


@given(seeds)
def test_compose_matches_tuple_oracle(fld, seed):
    _, _, (u, v, w), _ = triple(fld, seed)
    assert compose(u, v) == oracle_compose(u, v)
    assert compose(v, w) == oracle_compose(v, w)


@given(seeds)
def test_delta_matches_tuple_oracle(fld, seed):
    _, (E, *_), (u, v, w), rng = triple(fld, seed)
    assert delta_hom(u) == oracle_delta(u)
    c = random_section(E, [(p, q) for p in range(3) for q in (-1, 0, 1)], rng)
    assert delta_section(c) == oracle_delta(c, section=True)


# ---------------------------------------------------------------------------
# algebraic laws


@given(seeds)
def test_associativity_and_units(fld, seed):
    _, (E, F, G, H), (u, v, w), rng = triple(fld, seed)
    assert compose(compose(u, v), w) == compose(u, compose(v, w))
    assert compose(CechElement.identity(H), u) == u
    assert compose(u, CechElement.identity(G)) == u
    c = random_section(E, [(p, 0) for p in range(4)], rng)
    assert act(compose(v, w), c) == act(v, act(w, c))
    assert act(CechElement.identity(E), c) == c


@given(seeds)
def test_leibniz_rule(fld, seed):
    _, (E, *_), (u, v, w), rng = triple(fld, seed)
    sign = -1 if tdeg(u) % 2 else 1
    assert delta_hom(compose(u, v)) == compose(delta_hom(u), v) + compose(u, delta_hom(v)).scale(sign)
    c = random_section(E, [(p, q) for p in range(4) for q in (-1, 0, 1)], rng)
    sw = -1 if tdeg(w) % 2 else 1
    assert delta_section(act(w, c)) == act(delta_hom(w), c) + act(w, delta_section(c)).scale(sw)


@given(seeds)
def test_delta_squares_to_zero(fld, seed):
    _, (E, *_), (u, v, w), rng = triple(fld, seed)
    assert delta_hom(delta_hom(u)).is_zero()
    c = random_section(E, [(p, q) for p in range(4) for q in (-1, 0, 1)], rng)
    assert delta_section(delta_section(c)).is_zero()


@given(seeds)
def test_bidegree_bookkeeping(fld, seed):
    S, _, (u, v, w), _ = triple(fld, seed)
    uv = compose(u, v)
    for p, q in uv.pieces():
        assert p <= S.N
        assert any(p == a + c and q == b + d for a, b in u.pieces() for c, d in v.pieces())
    for p, q in delta_hom(u).pieces():
        assert (p - 1, q) in u.pieces()
    if uv.degree is not None:
        assert uv.degree == tdeg(u) + tdeg(v)


def test_strict_mode_raises_above_truncation(fld):
    rng = make_rng(1)
    S = space(1, N=2)
    E = random_sheaf(fld, S, rng, degrees=(0,), max_rank=1)
    E = GradedSheaf(fld, S, [GradedModule.of({0: 1})] * S.size(0))
    u = random_element(E, E, [(2, 0)], rng, density=1.0, simplex_density=1.0)
    assert compose(u, u).is_zero()
    with pytest.raises(TruncationError):
        compose(u, u, strict=True)


# ---------------------------------------------------------------------------
# worked point examples


def _point_sheaf(fld, N=2, degs=(0, 1)):
    P = point_space(N)
    return P, GradedSheaf(fld, P, [GradedModule.of({d: 1 for d in degs})], name="E")


def test_point_composite_sign(fld):
    P, E = _point_sheaf(fld)
    u = fld.zeros(2, 2)
    u[1, 0] = fld.coerce(2)  # degree 0 -> 1, q = 1
    v = fld.zeros(2, 2)
    v[0, 0] = fld.coerce(3)  # degree 0 -> 0 on the 1-simplex, r = 1
    U = CechElement(E, E, {(0, 1): {0: u}})
    V = CechElement(E, E, {(1, 0): {0: v}})
    uv = compose(U, V)
    assert uv.pieces() == [(1, 1)]
    assert uv.block(1, 1, 0)[1, 0] == fld.coerce(-6)


def test_point_action_sign(fld):
    P, E = _point_sheaf(fld)
    u = fld.zeros(2, 2)
    u[1, 0] = fld.one
    c = fld.zero_vector(2)
    c[0] = fld.one
    out = act(CechElement(E, E, {(0, 1): {0: u}}), CechSection(E, {(1, 0): {0: c}}))
    assert out.vector(1, 1, 0)[1] == fld.coerce(-1)


def test_delta_low_levels(fld):
    rng = make_rng(4)
    S = space(4)
    E = random_sheaf(fld, S, rng)
    u = random_element(E, E, [(0, 0), (0, 1)], rng)
    assert delta_hom(u).is_zero()
    c = random_section(E, [(0, 0), (0, 1)], rng)
    dc = delta_section(c)
    for y in range(S.size(1)):
        z = int(S.face(1, 1)[y])
        for q in (0, 1):
            want = fld.mneg(c.vector(0, q, z))
            assert list(dc.vector(1, q, y)) == list(want)


# ---------------------------------------------------------------------------
# pullbacks


def _maps(seed):
    inst = random_homotopy(make_rng(seed), SizeParams(sets=3, points=4, truncation=3))
    V = inst["V"]
    j = int(V.vertex_tuples[0][0, 0])
    const = nerve_map(V, V, lambda n, t: np.full_like(t, j), name="c")
    return inst["f"], const, V


@given(seeds)
def test_pullback_is_a_dg_algebra_map(fld, seed):
    f, const, V = _maps(seed % 50)
    rng = make_rng(seed)
    E, F, G = (random_sheaf(fld, V, rng, degrees=(0, 1), name=n) for n in "EFG")
    u = homogeneous(F, G, 0, rng, V.N)
    v = homogeneous(E, F, 1, rng, V.N)
    assert pullback_element(f, delta_hom(u)) == delta_hom(pullback_element(f, u))
    assert pullback_element(f, compose(u, v)) == compose(pullback_element(f, u), pullback_element(f, v))
    assert pullback_element(f, CechElement.identity(E)) == CechElement.identity(cech.pullback_sheaf(f, E))
    ident = SimplicialMap.identity(V)
    assert pullback_element(ident, u).blocks.keys() == u.blocks.keys()
    gf = f.then(const)
    assert pullback_element(gf, u) == pullback_element(f, pullback_element(const, u))
    c = random_section(E, [(p, 0) for p in range(3)], rng)
    assert pullback_section(f, delta_section(c)) == delta_section(pullback_section(f, c))


# ---------------------------------------------------------------------------
# inversion and gauge


@given(seeds)
def test_invert_graded(fld, seed):
    rng = make_rng(seed)
    S = space(seed % 100)
    E = random_sheaf(fld, S, rng, degrees=(0, 1))
    ident = CechElement.identity(E)
    assert invert_graded(ident) == ident
    n = random_element(E, E, [(k, -k) for k in range(1, S.N + 1)], rng)
    u = ident + n
    inv = invert_graded(u)
    assert compose(u, inv) == ident and compose(inv, u) == ident


def test_invert_graded_singular(fld):
    S = space(2)
    E = GradedSheaf(fld, S, [GradedModule.of({0: 1})] * S.size(0))
    with pytest.raises(ConventionError):
        invert_graded(CechElement.zero(E, E))
    with pytest.raises(StructuralError):
        invert_graded(random_element(E, E, [(1, 0)], make_rng(0), density=1.0, simplex_density=1.0))


@pytest.mark.parametrize("seed", range(6))
def test_gauge_transform(fld, seed):
    rng = make_rng(seed)
    V = space(seed, N=3)
    T = pullback_type_complex(fld, V, rng, SizeParams())
    a = T.a
    assert gauge_transform(CechElement.identity(T.sheaf), a) == a
    u = random_gauge(T, rng)
    a2 = gauge_transform(u, a)
    assert (delta_hom(a2) + compose(a2, a2)).is_zero()
    assert gauge_transform(invert_graded(u), a2) == a


def test_gauge_creates_higher_components(fld):
    found = 0
    for seed in range(6):
        rng = make_rng(seed)
        T = pullback_type_complex(fld, space(seed, N=3), rng, SizeParams())
        assert all(p <= 1 for p, _ in T.a.pieces())
        a2 = gauge_transform(random_gauge(T, rng), T.a)
        found += any(p >= 2 and p + q == 1 for p, q in a2.pieces())
    assert found >= 1


# ---------------------------------------------------------------------------
# mutation: a corrupted sign is caught


def _laws_hold(fld):
    for seed in range(6):
        _, (E, *_), (u, v, w), _ = triple(fld, seed)
        if compose(compose(u, v), w) != compose(u, compose(v, w)):
            return False
        if compose(u, v) != oracle_compose(u, v):
            return False
        sign = -1 if tdeg(u) % 2 else 1
        if delta_hom(compose(u, v)) != compose(delta_hom(u), v) + compose(u, delta_hom(v)).scale(sign):
            return False
        if not delta_hom(delta_hom(u)).is_zero() or delta_hom(u) != oracle_delta(u):
            return False
    return True


def test_laws_hold_unmutated(fld):
    assert _laws_hold(fld)


def test_corrupted_composition_sign_is_detected(fld, monkeypatch):
    monkeypatch.setattr(cech, "composition_sign", lambda q, r: 1)
    assert not _laws_hold(fld)


def test_corrupted_delta_sign_is_detected(fld, monkeypatch):
    monkeypatch.setattr(cech, "delta_sign", lambda k: 1)
    assert not _laws_hold(fld)

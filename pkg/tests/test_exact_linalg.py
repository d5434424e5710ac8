from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from sympy.polys.domains import GF as SymGF
from sympy.polys.domains import QQ as SymQQ
from sympy.polys.matrices import DomainMatrix

from twistcx.errors import InvariantViolation, StructuralError
from twistcx.exact_linalg import (
    GF,
    QQ,
    ChainComplex,
    ChainMap,
    GradedModule,
    homology_dims,
    inverse,
    is_quasi_iso,
    mapping_cone,
    parse_ring,
    rank,
    solve_affine,
    solve_sparse,
)
from twistcx.generate import make_rng, random_complex


def sympy_rank(fld, a):
    if a.size == 0:
        return 0
    if fld is QQ:
        dom = SymQQ
        rows = [[SymQQ(int(v.numerator), int(v.denominator)) for v in row] for row in a.tolist()]
    else:
        dom = SymGF(fld.p)
        rows = [[dom(int(v)) for v in row] for row in a.tolist()]
    return DomainMatrix(rows, a.shape, dom).rank()


def matrix_from(fld, rows):
    m = fld.zeros(len(rows), len(rows[0]) if rows else 0)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            m[i, j] = fld.coerce(v)
    return m


small_ints = st.integers(-3, 3)


@st.composite
def matrices(draw, max_side=8):
    r = draw(st.integers(0, max_side))
    c = draw(st.integers(0, max_side))
    return [[draw(small_ints) for _ in range(c)] for _ in range(r)], (r, c)


# ---------------------------------------------------------------------------
# scalars and rings


def test_parse_ring():
    assert parse_ring("QQ") is QQ
    assert parse_ring("GF(101)") == GF(101)
    for bad in ("GF(100)", "ZZ", "GF(x)"):
        with pytest.raises(StructuralError):
            parse_ring(bad)


def test_scalar_strings_round_trip():
    for s in ("0", "-3", "7/4", "-1/9"):
        assert QQ.to_str(QQ.from_str(s)) == s
    assert QQ.to_str(QQ.from_str(" 6/4 ")) == "3/2"
    assert GF(7).to_str(GF(7).from_str("5")) == "5"
    with pytest.raises(StructuralError):
        GF(7).from_str("9")
    with pytest.raises(StructuralError):
        QQ.from_str("1/0")


def test_rationals_are_exact():
    third = QQ.from_str("1/3")
    assert third + third + third == 1
    assert QQ.inv(QQ.coerce(Fraction(2, 7))) == QQ.from_str("7/2")


# ---------------------------------------------------------------------------
# rank and solving against sympy


@given(matrices())
def test_rank_matches_sympy_over_QQ(data):
    rows, (r, c) = data
    a = QQ.zeros(r, c) if not r or not c else matrix_from(QQ, rows)
    assert rank(QQ, a) == sympy_rank(QQ, a)


@given(matrices(), st.sampled_from([2, 3, 101]))
def test_rank_matches_sympy_over_prime_fields(data, p):
    rows, (r, c) = data
    F = GF(p)
    a = F.zeros(r, c) if not r or not c else matrix_from(F, rows)
    assert rank(F, a) == sympy_rank(F, a)


@given(matrices(), st.lists(small_ints, min_size=8, max_size=8))
def test_solve_affine_iff_rank_condition(data, bvals):
    rows, (r, c) = data
    a = QQ.zeros(r, c) if not r or not c else matrix_from(QQ, rows)
    b = np.array([QQ.coerce(v) for v in bvals[:r]], dtype=object)
    x = solve_affine(QQ, a, b)
    aug = np.concatenate([a, b.reshape(-1, 1)], axis=1) if r else a
    feasible = sympy_rank(QQ, aug) == sympy_rank(QQ, a)
    assert (x is not None) == feasible
    if x is not None:
        assert list(QQ.matmul(a, x.reshape(-1, 1)).reshape(-1)) == list(b)


def test_solve_affine_examples():
    assert list(solve_affine(QQ, QQ.eye(2), [QQ.coerce(1), QQ.coerce(2)])) == [1, 2]
    assert solve_affine(QQ, QQ.zeros(2, 2), [QQ.one, QQ.zero]) is None
    with pytest.raises(StructuralError):
        solve_affine(QQ, QQ.zeros(2, 3), [QQ.one])


def test_solve_affine_known_preimage():
    rng = make_rng(3)
    for _ in range(10):
        a = QQ.zeros(5, 7)
        for i in range(5):
            for j in range(7):
                a[i, j] = QQ.random(rng)
        x0 = np.array([QQ.random(rng) for _ in range(7)], dtype=object)
        b = QQ.matmul(a, x0.reshape(-1, 1)).reshape(-1)
        x = solve_affine(QQ, a, b)
        assert x is not None
        assert list(QQ.matmul(a, x.reshape(-1, 1)).reshape(-1)) == list(b)


def test_solve_sparse_is_deterministic_and_checks_columns():
    rows = [{0: QQ.one, 1: QQ.one}, {1: QQ.one}]
    rhs = [QQ.coerce(3), QQ.coerce(1)]
    assert list(solve_sparse(QQ, rows, rhs, 2)) == [2, 1]
    with pytest.raises(StructuralError):
        solve_sparse(QQ, [{5: QQ.one}], [QQ.one], 2)


def test_inverse_and_singular():
    a = matrix_from(QQ, [[2, 1], [1, 1]])
    assert (QQ.matmul(a, inverse(QQ, a)) == QQ.eye(2)).all()
    with pytest.raises(ZeroDivisionError):
        inverse(QQ, matrix_from(QQ, [[1, 2], [2, 4]]))
    F = GF(5)
    b = matrix_from(F, [[2, 3], [1, 3]])
    assert (F.matmul(b, inverse(F, b)) == F.eye(2)).all()


def test_empty_matrices_are_zero_maps():
    assert rank(QQ, QQ.zeros(0, 4)) == 0
    assert rank(QQ, QQ.zeros(3, 0)) == 0
    x = solve_affine(QQ, QQ.zeros(0, 3), [])
    assert x is not None and len(x) == 3


# ---------------------------------------------------------------------------
# complexes


def test_homology_examples():
    m = GradedModule.of({0: 2, 1: 3})
    assert homology_dims(ChainComplex(QQ, m, {})) == {0: 2, 1: 3}
    k = GradedModule.of({0: 1, 1: 1})
    c = ChainComplex(QQ, k, {0: QQ.eye(1)})
    assert homology_dims(c) == {0: 0, 1: 0}


def test_d_squared_nonzero_is_rejected():
    m = GradedModule.of({0: 1, 1: 1, 2: 1})
    c = ChainComplex(QQ, m, {0: QQ.eye(1), 1: QQ.eye(1)})
    assert c.check() == [0]
    with pytest.raises(InvariantViolation):
        homology_dims(c)


@pytest.mark.parametrize("seed", range(8))
def test_euler_characteristic(fld, seed):
    mod, d = random_complex(fld, make_rng(seed), -1, 2, 3)
    c = ChainComplex.from_total(fld, mod, d)
    h = homology_dims(c)
    assert sum((-1) ** n * v for n, v in h.items()) == sum((-1) ** n * mod.rank(n) for n in mod.degrees)
    for n in mod.degrees:
        r_out = sympy_rank(fld, c.d(n)) if c.d(n).size else 0
        r_in = sympy_rank(fld, c.d(n - 1)) if c.d(n - 1).size else 0
        assert h[n] == mod.rank(n) - r_out - r_in


@pytest.mark.parametrize("seed", range(6))
def test_cone_of_identity_is_acyclic(fld, seed):
    mod, d = random_complex(fld, make_rng(seed), 0, 3, 2)
    c = ChainComplex.from_total(fld, mod, d)
    ident = ChainMap.from_total(c, c, fld.eye(mod.total))
    assert all(v == 0 for v in homology_dims(mapping_cone(ident)).values())
    assert is_quasi_iso(ident)


@pytest.mark.parametrize("seed", range(6))
def test_quasi_iso_examples(fld, seed):
    rng = make_rng(100 + seed)
    mod, d = random_complex(fld, rng, 0, 2, 2, homology=True)
    c = ChainComplex.from_total(fld, mod, d)
    zero = ChainMap.from_total(c, c, fld.zeros(mod.total, mod.total))
    assert not is_quasi_iso(zero)
    # inclusion into the sum with k --id--> k
    acyc = GradedModule.of({0: 1, 1: 1})
    tot, ia, ib = mod.direct_sum(acyc)
    dd = fld.zeros(tot.total, tot.total)
    dd[np.ix_(ia, ia)] = d
    dd[ib[1], ib[0]] = fld.one
    big = ChainComplex.from_total(fld, tot, dd)
    incl = fld.zeros(tot.total, mod.total)
    incl[ia, np.arange(mod.total)] = fld.one
    assert is_quasi_iso(ChainMap.from_total(c, big, incl))


@pytest.mark.parametrize("seed", range(5))
def test_quasi_iso_invariant_under_isomorphisms(fld, seed):
    from twistcx.generate import _random_invertible

    rng = make_rng(200 + seed)
    mod, d = random_complex(fld, rng, 0, 2, 2)
    c = ChainComplex.from_total(fld, mod, d)
    P = fld.zeros(mod.total, mod.total)
    for n in mod.degrees:
        sl = mod.span(n)
        P[sl, sl] = _random_invertible(fld, mod.rank(n), rng)
    Pinv = inverse(fld, P)
    d2 = fld.matmul(fld.matmul(P, d), Pinv)
    c2 = ChainComplex.from_total(fld, mod, d2)
    iso = ChainMap.from_total(c, c2, P)
    assert is_quasi_iso(iso)
    zero = ChainMap.from_total(c, c2, fld.zeros(mod.total, mod.total))
    assert is_quasi_iso(zero) == all(v == 0 for v in homology_dims(c).values())


def test_chain_map_defect_is_reported():
    m = GradedModule.of({0: 1, 1: 1})
    c = ChainComplex(QQ, m, {0: QQ.eye(1)})
    f = ChainMap(c, c, {0: QQ.eye(1)})
    assert f.defect_degrees() == [0]
    with pytest.raises(InvariantViolation):
        is_quasi_iso(f)

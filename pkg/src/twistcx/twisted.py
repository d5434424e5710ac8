"""
Twisted complexes: a graded sheaf E with a total-degree-1 element a solving
delta a + a.a = 0, plus morphisms of every degree and their differential.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cech import (
    CechElement,
    GradedSheaf,
    compose,
    delta_hom,
    pullback_element,
    pullback_sheaf,
)
from .errors import ConventionError, InvariantViolation, StructuralError, TruncationError
from .exact_linalg import ChainComplex, ChainMap, is_quasi_iso, solve_sparse
from .report import Report
from .simplicial import SimplicialMap

__all__ = [
    "TwistedComplex",
    "TwistedMorphism",
    "HoInverse",
    "mc_residual",
    "mc_residual_explicit",
    "check_nondegenerate",
    "validate_twisted",
    "morphism_diff",
    "morphism_diff_explicit",
    "morphism_sign",
    "pullback_twisted",
    "pullback_morphism",
    "is_weak_equivalence",
    "weak_equivalence_report",
    "ho_invert",
    "ho_invert_window",
]


def morphism_sign(m: int) -> int:
    """The (-1)^m in front of theta.a in the morphism differential."""
    return -1 if m % 2 else 1


class TwistedComplex:
    def __init__(self, sheaf: GradedSheaf, a: CechElement, name: str = ""):
        if a.source != sheaf or a.target != sheaf:
            raise StructuralError(f"twisted complex {name!r}: a must be an endomorphism of its sheaf")
        if a.total_degrees() - {1}:
            raise StructuralError(f"twisted complex {name!r}: a has total degrees {sorted(a.total_degrees())}")
        self.sheaf, self.a, self.name = sheaf, a, name
        self._cache: dict = {}

    @property
    def field(self):
        return self.sheaf.field

    @property
    def space(self):
        return self.sheaf.base

    def differential_at(self, x: int) -> np.ndarray:
        return self.a.block(0, 1, x)

    def chain_complex(self, x: int) -> ChainComplex:
        return ChainComplex.from_total(self.field, self.sheaf[x], self.differential_at(x))

    def is_mc(self) -> bool:
        if "mc" not in self._cache:
            self._cache["mc"] = mc_residual(self, cross_check=False).is_zero()
        return self._cache["mc"]

    def restrict(self, M: int) -> "TwistedComplex":
        if M == self.space.N:
            return self
        key = ("restrict", M)
        if key not in self._cache:
            a = self.a.restrict(M)
            self._cache[key] = TwistedComplex(a.source, a, self.name)
        return self._cache[key]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TwistedComplex):
            return NotImplemented
        return self is other or (self.sheaf == other.sheaf and self.a == other.a)

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return f"TwistedComplex({self.name!r}, pieces={self.a.pieces()})"


class TwistedMorphism:
    """theta: (E, a) -> (F, b) of degree m, stored as one CechElement with pieces (k, m-k)."""

    def __init__(self, source: TwistedComplex, target: TwistedComplex, theta: CechElement, degree: int, name: str = ""):
        if theta.source != source.sheaf or theta.target != target.sheaf:
            raise StructuralError(f"morphism {name!r}: endpoints do not match its components")
        bad = theta.total_degrees() - {degree}
        if bad:
            raise StructuralError(f"morphism {name!r} of degree {degree} has pieces of total degree {sorted(bad)}")
        self.source, self.target, self.theta, self.degree, self.name = source, target, theta, int(degree), name

    @property
    def field(self):
        return self.theta.field

    @classmethod
    def identity(cls, T: TwistedComplex) -> "TwistedMorphism":
        return cls(T, T, CechElement.identity(T.sheaf), 0, name=f"id_{T.name}")

    @classmethod
    def zero(cls, source: TwistedComplex, target: TwistedComplex, degree: int) -> "TwistedMorphism":
        return cls(source, target, CechElement.zero(source.sheaf, target.sheaf), degree)

    def _check_same(self, other: "TwistedMorphism"):
        if other.source != self.source or other.target != self.target or other.degree != self.degree:
            raise StructuralError("morphisms differ in endpoints or degree")

    def __add__(self, other: "TwistedMorphism") -> "TwistedMorphism":
        self._check_same(other)
        return TwistedMorphism(self.source, self.target, self.theta + other.theta, self.degree)

    def __sub__(self, other: "TwistedMorphism") -> "TwistedMorphism":
        self._check_same(other)
        return TwistedMorphism(self.source, self.target, self.theta - other.theta, self.degree)

    def __neg__(self) -> "TwistedMorphism":
        return self.scale(-1)

    def scale(self, c) -> "TwistedMorphism":
        return TwistedMorphism(self.source, self.target, self.theta.scale(c), self.degree)

    def __mul__(self, other: "TwistedMorphism") -> "TwistedMorphism":
        """Composition: ``self * other`` applies other first."""
        if other.target != self.source:
            raise StructuralError(f"cannot compose {self.name!r} after {other.name!r}")
        return TwistedMorphism(other.source, self.target, compose(self.theta, other.theta), self.degree + other.degree)

    def is_zero(self) -> bool:
        return self.theta.is_zero()

    def __eq__(self, other) -> bool:
        if not isinstance(other, TwistedMorphism):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.degree == other.degree
            and self.theta == other.theta
        )

    __hash__ = None

    def component(self, k: int) -> CechElement:
        return self.theta.piece(k, self.degree - k)

    def restrict(self, M: int) -> "TwistedMorphism":
        return TwistedMorphism(self.source.restrict(M), self.target.restrict(M), self.theta.restrict(M), self.degree, self.name)

    def __repr__(self) -> str:
        return f"TwistedMorphism({self.name!r}: {self.source.name} -> {self.target.name}, degree {self.degree})"


# ---------------------------------------------------------------------------
# explicit per-simplex expansions (independent of the compose/delta code)


def _sign(e: int) -> int:
    return -1 if e % 2 else 1


def _explicit(left: CechElement, right: CechElement, ldeg: int, rdeg: int, k: int, sign_fn, acc: dict):
    """acc[x] += sum_l sign_fn(l) * left^{l, ldeg-l}(rho_{k,l} x) right^{k-l, rdeg-k+l}(tau_{k,k-l} x)."""
    S = left.space
    fld = left.field
    for lvl in range(k + 1):
        lb = left.blocks.get((lvl, ldeg - lvl))
        rb = right.blocks.get((k - lvl, rdeg - k + lvl))
        if not lb or not rb:
            continue
        rho, tau = S.front_face(k, lvl), S.back_face(k, k - lvl)
        s = sign_fn(lvl)
        for x in range(S.size(k)):
            xu, xv = int(rho[x]), int(tau[x])
            if xu in lb and xv in rb:
                m = fld.matmul(lb[xu], rb[xv])
                if s < 0:
                    m = fld.mneg(m)
                acc[x] = fld.madd(acc[x], m) if x in acc else m


def _explicit_delta(u: CechElement, deg: int, k: int, acc: dict):
    """acc[x] += sum_{j=1}^{k-1} (-1)^j u^{k-1, deg-k+1}(d_j x)."""
    S = u.space
    fld = u.field
    blk = u.blocks.get((k - 1, deg - k + 1))
    if not blk or k < 1:
        return
    for j in range(1, k):
        face = S.face(k, j)
        for x in range(S.size(k)):
            y = int(face[x])
            if y in blk:
                m = blk[y] if j % 2 == 0 else fld.mneg(blk[y])
                acc[x] = fld.madd(acc[x], m) if x in acc else m


def mc_residual_explicit(T: TwistedComplex) -> CechElement:
    """The Maurer-Cartan residual expanded level by level with its own sign bookkeeping."""
    a = T.a
    out = {}
    for k in range(T.space.N + 1):
        acc: dict = {}
        _explicit_delta(a, 1, k, acc)
        _explicit(a, a, 1, 1, k, lambda j: _sign((1 - j) * (k - j)), acc)
        out[(k, 2 - k)] = acc
    return CechElement(T.sheaf, T.sheaf, out, check=False)


def mc_residual(T: TwistedComplex, cross_check: bool = True) -> CechElement:
    """delta a + a.a, optionally compared against the explicit expansion."""
    res = delta_hom(T.a) + compose(T.a, T.a)
    if cross_check:
        other = mc_residual_explicit(T)
        if res != other:
            raise ConventionError(
                f"compact and explicit Maurer-Cartan residuals disagree at {(res - other).located_entries()[:3]}"
            )
    return res


def morphism_diff_explicit(theta: TwistedMorphism) -> CechElement:
    """(d theta)^{k,m+1-k}: interior faces, b-side sum, then the a-side sum with factor -(-1)^m."""
    m = theta.degree
    a, b, t = theta.source.a, theta.target.a, theta.theta
    out = {}
    for k in range(t.space.N + 1):
        acc: dict = {}
        _explicit_delta(t, m, k, acc)
        _explicit(b, t, 1, m, k, lambda l: _sign((1 - l) * (k - l)), acc)
        _explicit(t, a, m, 1, k, lambda l: -_sign(m) * _sign((m - l) * (k - l)), acc)
        out[(k, m + 1 - k)] = acc
    return CechElement(t.source, t.target, out, check=False)


def morphism_diff(theta: TwistedMorphism, cross_check: bool = True, check_endpoints: bool = True) -> TwistedMorphism:
    """d theta = delta theta + b.theta - (-1)^m theta.a."""
    if check_endpoints:
        for end in (theta.source, theta.target):
            if not end.is_mc():
                raise InvariantViolation(f"endpoint {end.name!r} does not satisfy the Maurer-Cartan equation")
    m = theta.degree
    t = theta.theta
    res = delta_hom(t) + compose(theta.target.a, t)
    right = compose(t, theta.source.a)
    res = res - right if morphism_sign(m) > 0 else res + right
    if cross_check:
        other = morphism_diff_explicit(theta)
        if res != other:
            raise ConventionError(
                f"compact and explicit morphism differentials disagree at {(res - other).located_entries()[:3]}"
            )
    return TwistedMorphism(theta.source, theta.target, res, m + 1)


# ---------------------------------------------------------------------------
# validation


def _a10_chain_map(T: TwistedComplex, y: int) -> ChainMap:
    S = T.space
    src, tgt = int(S.last_vertex(1)[y]), int(S.first_vertex(1)[y])
    return ChainMap.from_total(T.chain_complex(src), T.chain_complex(tgt), T.a.block(1, 0, y))


def check_nondegenerate(T: TwistedComplex) -> Report:
    """a^{1,0} must be a quasi-isomorphism on degenerate 1-simplices; other 1-simplices are reported only."""
    if not T.is_mc():
        raise InvariantViolation(f"{T.name!r} does not satisfy the Maurer-Cartan equation")
    rep = Report(f"non-degeneracy of {T.name}")
    S = T.space
    if S.N < 1:
        rep.add("a^{1,0} quasi-isomorphism at degenerate 1-simplices", skip=True, note="truncation 0")
        return rep
    ids = S.ids(1)
    degen = set(S.degenerate_one_simplices().tolist())
    req, info = [], []
    for y in range(S.size(1)):
        if not is_quasi_iso(_a10_chain_map(T, y)):
            (req if y in degen else info).append({"simplex": ids[y]})
    rep.add("a^{1,0} quasi-isomorphism at degenerate 1-simplices", req)
    others = S.size(1) - len(degen)
    rep.add(
        "a^{1,0} quasi-isomorphism at non-degenerate 1-simplices",
        info,
        skip=True,
        note=f"informative: {len(info)} of {others} fail",
    )
    return rep


def validate_twisted(T: TwistedComplex, require_window: bool = True) -> Report:
    rep = Report(f"twisted complex {T.name}")
    S = T.space
    amp = T.sheaf.amplitude()
    if require_window:
        fails = [] if S.N >= amp + 2 else [{"N": S.N, "amplitude": amp, "needed": amp + 2}]
        rep.add("truncation covers all Maurer-Cartan components", fails)
    bad_d = []
    for x in range(S.size(0)):
        if T.chain_complex(x).check():
            bad_d.append({"vertex": S.ids(0)[x]})
    rep.add("a^{0,1} squares to zero at each vertex", bad_d)
    try:
        res = mc_residual(T)
        rep.add("Maurer-Cartan residual delta a + a.a = 0", res.located_entries())
        rep.add("compact and explicit Maurer-Cartan expansions agree")
    except ConventionError as exc:
        rep.add("compact and explicit Maurer-Cartan expansions agree", [{"error": str(exc)}])
        return rep
    if res.is_zero():
        rep.extend(check_nondegenerate(T))
    else:
        rep.add("a^{1,0} quasi-isomorphism at degenerate 1-simplices", skip=True, note="Maurer-Cartan fails")
    return rep


# ---------------------------------------------------------------------------
# pullback


def pullback_twisted(f: SimplicialMap, T: TwistedComplex) -> TwistedComplex:
    cache = f._cache.setdefault("twisted", {})
    if id(T) not in cache:
        sheaf = pullback_sheaf(f, T.sheaf)
        a = pullback_element(f, T.a)
        cache[id(T)] = (T, TwistedComplex(sheaf, a, name=f"{f.name}*{T.name}"))
    return cache[id(T)][1]


def pullback_morphism(f: SimplicialMap, theta: TwistedMorphism) -> TwistedMorphism:
    return TwistedMorphism(
        pullback_twisted(f, theta.source),
        pullback_twisted(f, theta.target),
        pullback_element(f, theta.theta),
        theta.degree,
        name=f"{f.name}*{theta.name}",
    )


# ---------------------------------------------------------------------------
# weak equivalences and homotopy inverses


def weak_equivalence_report(phi: TwistedMorphism) -> Report:
    rep = Report(f"weak equivalence {phi.name}")
    rep.add("degree 0", [] if phi.degree == 0 else [{"degree": phi.degree}])
    if phi.degree != 0:
        return rep
    d = morphism_diff(phi, cross_check=False)
    rep.add("closed", d.theta.located_entries())
    S = phi.source.space
    bad = []
    for x in range(S.size(0)):
        cm = ChainMap.from_total(phi.source.chain_complex(x), phi.target.chain_complex(x), phi.theta.block(0, 0, x))
        try:
            ok = is_quasi_iso(cm)
        except InvariantViolation:
            ok = False
        if not ok:
            bad.append({"vertex": S.ids(0)[x]})
    rep.add("(0,0) component is a quasi-isomorphism at every vertex", bad)
    return rep


def is_weak_equivalence(phi: TwistedMorphism) -> bool:
    return weak_equivalence_report(phi).ok


@dataclass
class HoInverse:
    """psi: F -> E closed of degree 0, eta on E and omega on F of degree -1."""

    psi: TwistedMorphism
    eta: TwistedMorphism
    omega: TwistedMorphism
    unknowns: int = 0
    equations: int = 0


def _degree_range(sheaf: GradedSheaf):
    degs = sheaf.degrees()
    return (degs[0], degs[-1]) if degs else (0, 0)


def ho_invert_window(E: GradedSheaf, F: GradedSheaf) -> int:
    """Smallest truncation at which the inversion system is the untruncated one."""
    minE, maxE = _degree_range(E)
    minF, maxF = _degree_range(F)
    return max(1 + maxF - minE, maxE - minE, maxF - minF, 0)


class _Basis:
    """Single-entry basis of Hom pieces of a fixed total degree."""

    def __init__(self, source: GradedSheaf, target: GradedSheaf, degree: int):
        self.source, self.target, self.degree = source, target, degree
        S = source.base
        probe = CechElement.zero(source, target)
        self.entries = []
        for k in range(S.N + 1):
            q = degree - k
            for x in range(S.size(k)):
                rows, cols = np.nonzero(probe.mask_at(k, q, x))
                for i, j in zip(rows.tolist(), cols.tolist()):
                    self.entries.append((k, q, x, i, j))

    def __len__(self):
        return len(self.entries)

    def element(self, n: int, value=None) -> CechElement:
        k, q, x, i, j = self.entries[n]
        fld = self.source.field
        probe = CechElement.zero(self.source, self.target)
        m = fld.zeros(*probe.shape_at(k, x))
        m[i, j] = fld.one if value is None else value
        return CechElement(self.source, self.target, {(k, q): {x: m}}, check=False)

    def assemble(self, values) -> CechElement:
        fld = self.source.field
        probe = CechElement.zero(self.source, self.target)
        blocks: dict = {}
        for (k, q, x, i, j), v in zip(self.entries, values):
            if v == 0:
                continue
            comp = blocks.setdefault((k, q), {})
            if x not in comp:
                comp[x] = fld.zeros(*probe.shape_at(k, x))
            comp[x][i, j] = v
        return CechElement(self.source, self.target, blocks, check=False)


def _flatten(tag: str, el: CechElement, rows: dict, col: int, coeff, out: dict):
    fld = el.field
    for (k, q), comp in el.blocks.items():
        for x, m in comp.items():
            for i, j in zip(*np.nonzero(m != 0)):
                key = (tag, k, q, x, int(i), int(j))
                r = rows.setdefault(key, len(rows))
                v = m[i, j] if coeff == 1 else fld.mul(coeff, m[i, j])
                out.setdefault(r, {})
                prev = out[r].get(col, fld.zero)
                out[r][col] = fld.add(prev, v)


def ho_invert(phi: TwistedMorphism) -> Optional[HoInverse]:
    """Solve d psi = 0, psi.phi - d eta = id, phi.psi - d omega = id exactly, or return None."""
    if phi.degree != 0:
        raise StructuralError("ho_invert needs a degree-0 morphism")
    E, F = phi.source, phi.target
    S = E.space
    need = ho_invert_window(E.sheaf, F.sheaf)
    if S.N < need:
        raise TruncationError(f"truncation {S.N} is below the level {need} needed to close the inversion system")
    if not morphism_diff(phi, cross_check=False).is_zero():
        raise InvariantViolation(f"morphism {phi.name!r} is not closed")
    fld = phi.field
    bpsi = _Basis(F.sheaf, E.sheaf, 0)
    beta = _Basis(E.sheaf, E.sheaf, -1)
    bomg = _Basis(F.sheaf, F.sheaf, -1)
    rows: dict = {}
    cols: dict = {}  # row -> {col: value}
    ncols = len(bpsi) + len(beta) + len(bomg)
    col = 0
    for n in range(len(bpsi)):
        psi = TwistedMorphism(F, E, bpsi.element(n), 0)
        _flatten("dpsi", morphism_diff(psi, cross_check=False, check_endpoints=False).theta, rows, col, 1, cols)
        _flatten("E", compose(psi.theta, phi.theta), rows, col, 1, cols)
        _flatten("F", compose(phi.theta, psi.theta), rows, col, 1, cols)
        col += 1
    for n in range(len(beta)):
        eta = TwistedMorphism(E, E, beta.element(n), -1)
        _flatten("E", morphism_diff(eta, cross_check=False, check_endpoints=False).theta, rows, col, -1, cols)
        col += 1
    for n in range(len(bomg)):
        omg = TwistedMorphism(F, F, bomg.element(n), -1)
        _flatten("F", morphism_diff(omg, cross_check=False, check_endpoints=False).theta, rows, col, -1, cols)
        col += 1
    rhs_of: dict = {}
    for tag, T in (("E", E), ("F", F)):
        ident = CechElement.identity(T.sheaf)
        for (k, q), comp in ident.blocks.items():
            for x, m in comp.items():
                for i in range(m.shape[0]):
                    key = (tag, k, q, x, i, i)
                    r = rows.setdefault(key, len(rows))
                    rhs_of[r] = fld.one
    order = sorted(rows.items(), key=lambda kv: kv[1])
    row_dicts = [cols.get(r, {}) for _, r in order]
    rhs = [rhs_of.get(r, fld.zero) for _, r in order]
    sol = solve_sparse(fld, row_dicts, rhs, ncols)
    if sol is None:
        return None
    a, b = len(bpsi), len(bpsi) + len(beta)
    psi = TwistedMorphism(F, E, bpsi.assemble(sol[:a]), 0, name=f"psi[{phi.name}]")
    eta = TwistedMorphism(E, E, beta.assemble(sol[a:b]), -1, name=f"eta[{phi.name}]")
    omega = TwistedMorphism(F, F, bomg.assemble(sol[b:]), -1, name=f"omega[{phi.name}]")
    ok = (
        morphism_diff(psi, cross_check=False).is_zero()
        and (psi * phi - morphism_diff(eta, cross_check=False)) == TwistedMorphism.identity(E)
        and (phi * psi - morphism_diff(omega, cross_check=False)) == TwistedMorphism.identity(F)
    )
    if not ok:
        raise ConventionError("solver returned a homotopy inverse that fails the exact residual check")
    return HoInverse(psi, eta, omega, unknowns=ncols, equations=len(rows))

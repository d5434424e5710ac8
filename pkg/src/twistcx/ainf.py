"""
A-infinity prenatural transformations between pullback functors.

Higher components are evaluated lazily on tuples of morphisms written in
tensor order ``(u_l, ..., u_1)``: u_1 is applied first, so u_1 starts at
X_0 and u_l ends at X_l.  Identities quantifying over all morphisms are
checked on a finite ``ProbeSet``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .cech import CechElement, reindex_element
from .errors import StructuralError, TruncationError
from .report import Report
from .simplicial import SimplicialHomotopy, SimplicialMap
from .twisted import (
    HoInverse,
    TwistedComplex,
    TwistedMorphism,
    ho_invert,
    morphism_diff,
    pullback_morphism,
    pullback_twisted,
    weak_equivalence_report,
)

__all__ = [
    "PullbackFunctor",
    "AinfPrenat",
    "ProbeSet",
    "QuasiInverseWitness",
    "PhiData",
    "sgn",
    "phi1_sign",
    "compose_sign",
    "d_infinity",
    "compose_ainf",
    "identity_prenat",
    "homotopy_sum",
    "build_phi0",
    "build_phi1",
    "build_phi",
    "level1_residual",
    "level2_residual",
    "naturality_defect",
    "check_face_exchange_sum",
    "check_front_face_sum",
    "check_back_face_sum",
    "verify_phi",
    "verify_quasi_inverse",
    "quasi_inverse_exists",
    "lift_witness",
    "random_prenat",
    "closure_report",
]


def sgn(e: int) -> int:
    return -1 if e % 2 else 1


def compose_sign(n: int, shifted: int) -> int:
    """Sign of Psi^{l-k} Phi^k when Phi has degree n and the Psi inputs have shifted degree ``shifted``."""
    return sgn(n * shifted)


def phi1_sign(m: int) -> int:
    """Prefactor (-1)^{m-1} in the first higher component."""
    return sgn(m - 1)


class PullbackFunctor:
    """The dg-functor f^* restricted to the window where the homotopy lives."""

    def __init__(self, f: SimplicialMap, name: str = ""):
        self.map = f
        self.name = name or f"{f.name}*"

    def obj(self, X: TwistedComplex) -> TwistedComplex:
        return pullback_twisted(self.map, X)

    def mor(self, u: TwistedMorphism) -> TwistedMorphism:
        return pullback_morphism(self.map, u)

    def __eq__(self, other) -> bool:
        return isinstance(other, PullbackFunctor) and other.map is self.map

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return f"PullbackFunctor({self.name})"


def _chain_degree(us: Sequence[TwistedMorphism]) -> int:
    return sum(u.degree for u in us)


class AinfPrenat:
    """Components Phi^0_X (``level0``) and Phi^l(u_l, ..., u_1) (``higher``; None means zero)."""

    def __init__(
        self,
        F: PullbackFunctor,
        G: PullbackFunctor,
        degree: int,
        level0: Callable[[TwistedComplex], Optional[TwistedMorphism]],
        higher: Optional[Callable[[tuple], Optional[TwistedMorphism]]] = None,
        name: str = "",
    ):
        self.F, self.G, self.degree, self.name = F, G, int(degree), name
        self._level0, self._higher = level0, higher
        self._memo: dict = {}

    def at(self, X: TwistedComplex) -> TwistedMorphism:
        key = ("obj", id(X))
        if key not in self._memo:
            got = self._level0(X)
            if got is None:
                got = TwistedMorphism.zero(self.F.obj(X), self.G.obj(X), self.degree)
            self._check(got, self.F.obj(X), self.G.obj(X), self.degree, "level 0")
            self._memo[key] = (X, got)
        return self._memo[key][1]

    def apply(self, us: tuple) -> TwistedMorphism:
        if not us:
            raise StructuralError("use .at(X) for level 0")
        for later, earlier in zip(us[:-1], us[1:]):
            if later.source != earlier.target:
                raise StructuralError("tuple is not composable")
        key = ("mor",) + tuple(id(u) for u in us)
        if key not in self._memo:
            src, tgt = self.F.obj(us[-1].source), self.G.obj(us[0].target)
            deg = self.degree - len(us) + _chain_degree(us)
            got = self._higher(us) if self._higher is not None else None
            if got is None:
                got = TwistedMorphism.zero(src, tgt, deg)
            self._check(got, src, tgt, deg, f"level {len(us)}")
            self._memo[key] = (us, got)
        return self._memo[key][1]

    def component(self, arg) -> TwistedMorphism:
        return self.at(arg) if isinstance(arg, TwistedComplex) else self.apply(tuple(arg))

    def _check(self, m: TwistedMorphism, src, tgt, deg, where):
        if m.degree != deg or m.source != src or m.target != tgt:
            raise StructuralError(
                f"{self.name or 'prenat'} {where}: component has degree {m.degree}, expected {deg}, or wrong endpoints"
            )

    def __repr__(self) -> str:
        return f"AinfPrenat({self.name!r}: {self.F.name} => {self.G.name}, degree {self.degree})"


@dataclass
class ProbeSet:
    """Finite window of objects and morphisms on which identities are evaluated."""

    objects: list
    morphisms: list = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        for u in self.morphisms:
            if not any(u.source is X for X in self.objects) or not any(u.target is X for X in self.objects):
                raise StructuralError(f"probe {self.name!r}: morphism {u.name!r} has endpoints outside the probe")

    def chains(self, l: int) -> list:
        """All composable tuples (u_l, ..., u_1) of probe morphisms."""
        if l == 0:
            return list(self.objects)
        out = [(u,) for u in self.morphisms]
        for _ in range(l - 1):
            out = [(v,) + t for t in out for v in self.morphisms if v.source is t[0].target]
        return out


def _label(arg) -> str:
    if isinstance(arg, TwistedComplex):
        return arg.name
    return " (x) ".join(u.name or "?" for u in arg)


# ---------------------------------------------------------------------------
# d-infinity and composition


def d_infinity(Phi: AinfPrenat) -> AinfPrenat:
    """The differential of a prenatural transformation, evaluated term by term.

    For Phi of degree n and u_l, ..., u_1 with s = |u_1| + ... + |u_l|:

        d(Phi^l(u)) + (-1)^{(n+1)(|u_l|+1)} G(u_l) Phi^{l-1}(u_{l-1}..u_1)
        + (-1)^{n+s+l-1} Phi^{l-1}(u_l..u_2) F(u_1)
        + sum_i (-1)^{n+|u_l|+..+|u_{i+1}|+l-i+1} Phi^l(..du_i..)
        + sum_i (-1)^{n+|u_l|+..+|u_{i+1}|+l-i+1} Phi^{l-1}(..u_{i+1}u_i..)

    At n = 0 these are the usual closure equations; the n-dependence is what
    makes d o d vanish on prenats of every degree.
    """
    F, G, n = Phi.F, Phi.G, Phi.degree

    def level0(X):
        return morphism_diff(Phi.at(X), cross_check=False)

    def higher(us):
        l = len(us)
        degs = [u.degree for u in us]  # degs[0] = |u_l|, degs[-1] = |u_1|
        total = morphism_diff(Phi.apply(us), cross_check=False)
        rest = us[1:]
        prev = Phi.apply(rest) if rest else Phi.at(us[-1].source)
        total = total + (G.mor(us[0]) * prev).scale(sgn((n + 1) * (degs[0] + 1)))
        head = us[:-1]
        prev = Phi.apply(head) if head else Phi.at(us[0].target)
        total = total + (prev * F.mor(us[-1])).scale(sgn(n + sum(degs) + l - 1))
        # u_i sits at position l - i of the tuple
        for i in range(1, l + 1):
            pos = l - i
            above = sum(degs[:pos])
            s = sgn(n + above + l - i + 1)
            du = morphism_diff(us[pos], cross_check=False)
            du.name = f"d{us[pos].name}"
            total = total + Phi.apply(us[:pos] + (du,) + us[pos + 1 :]).scale(s)
        for i in range(1, l):
            pos = l - i  # u_i; u_{i+1} at pos - 1
            above = sum(degs[:pos])
            s = sgn(n + above + l - i + 1)
            prod = us[pos - 1] * us[pos]
            prod.name = f"{us[pos - 1].name}.{us[pos].name}"
            total = total + Phi.apply(us[: pos - 1] + (prod,) + us[pos + 1 :]).scale(s)
        return total

    return AinfPrenat(F, G, n + 1, level0, higher, name=f"d({Phi.name})")


def identity_prenat(F: PullbackFunctor) -> AinfPrenat:
    return AinfPrenat(F, F, 0, lambda X: TwistedMorphism.identity(F.obj(X)), None, name=f"id_{F.name}")


def compose_ainf(Psi: AinfPrenat, Phi: AinfPrenat) -> AinfPrenat:
    """(Psi o Phi): level 0 is Psi^0 Phi^0; level l sums Psi^{l-k} Phi^k over k = 0..l.

    A term is signed by (-1)^{|Phi| * (|u_l|-1 + ... + |u_{k+1}|-1)}, which is
    trivial when Phi has degree 0.
    """
    if Psi.F != Phi.G:
        raise StructuralError(f"cannot compose: {Psi.F.name} is not {Phi.G.name}")
    n = Phi.degree

    def level0(X):
        return Psi.at(X) * Phi.at(X)

    def higher(us):
        l = len(us)
        shifted = [u.degree - 1 for u in us]
        total = Psi.at(us[0].target) * Phi.apply(us)
        total = total + (Psi.apply(us) * Phi.at(us[-1].source)).scale(compose_sign(n, sum(shifted)))
        for k in range(1, l):
            term = Psi.apply(us[: l - k]) * Phi.apply(us[l - k :])
            total = total + term.scale(compose_sign(n, sum(shifted[: l - k])))
        return total

    return AinfPrenat(Phi.F, Psi.G, Psi.degree + n, level0, higher, name=f"{Psi.name}o{Phi.name}")


def _difference(A: AinfPrenat, B: AinfPrenat) -> AinfPrenat:
    return AinfPrenat(
        A.F, A.G, A.degree, lambda X: A.at(X) - B.at(X), lambda us: A.apply(us) - B.apply(us), name=f"{A.name}-{B.name}"
    )


def closure_report(Phi: AinfPrenat, probe: ProbeSet, max_level: int = 3, title: str = "") -> Report:
    """Evaluate d^infinity Phi on every probe chain of length 0..max_level."""
    rep = Report(title or f"d-infinity closure of {Phi.name}")
    D = d_infinity(Phi)
    for l in range(max_level + 1):
        fails = []
        for ch in probe.chains(l):
            val = D.component(ch)
            if not val.is_zero():
                fails.append({"level": l, "input": _label(ch), "at": val.theta.located_entries()[:3]})
        rep.add(f"d-infinity vanishes at level {l}", fails)
    return rep


# ---------------------------------------------------------------------------
# the transformation induced by a homotopy


def homotopy_sum(h: SimplicialHomotopy, u: CechElement, source, target) -> CechElement:
    """Piece (k, q) of the result is sum_{i<=k} (-1)^i u^{k+1,q}(h_i x)."""
    total = CechElement.zero(source, target)
    M = h.max_level
    for i in range(M + 1):
        index = {k: h.h(k, i) for k in range(i, M + 1)}
        term = reindex_element(u, source, target, index, shift=1)
        total = total + (term if i % 2 == 0 else -term)
    return total


@dataclass
class PhiData:
    """Everything needed to evaluate the transformation induced by a homotopy."""

    h: SimplicialHomotopy
    f: SimplicialMap
    g: SimplicialMap
    F: PullbackFunctor
    G: PullbackFunctor
    window: int


def phi_data(h: SimplicialHomotopy) -> PhiData:
    cache = h.__dict__.setdefault("_phi_cache", {})
    if "data" not in cache:
        M = h.max_level
        if M < 0:
            raise TruncationError("homotopy has no components")
        f, g = h.f.restrict(M), h.g.restrict(M)
        cache["data"] = PhiData(h, f, g, PullbackFunctor(f, "f*"), PullbackFunctor(g, "g*"), M)
    return cache["data"]


def build_phi0(h: SimplicialHomotopy, T: TwistedComplex) -> TwistedMorphism:
    """Phi_0(E)^{k,-k} = sum_i (-1)^i h_i^* a^{k+1,-k}, a morphism f^*E -> g^*E on the window."""
    D = phi_data(h)
    cache = h.__dict__["_phi_cache"].setdefault("phi0", {})
    if id(T) not in cache:
        src, tgt = D.F.obj(T), D.G.obj(T)
        el = homotopy_sum(h, T.a, src.sheaf, tgt.sheaf)
        cache[id(T)] = (T, TwistedMorphism(src, tgt, el, 0, name=f"Phi0[{T.name}]"))
    return cache[id(T)][1]


def build_phi1(h: SimplicialHomotopy, phi: TwistedMorphism) -> TwistedMorphism:
    """Phi_1(phi)^{k,m-k-1} = (-1)^{m-1} sum_i (-1)^i h_i^* phi^{k+1,m-k-1}."""
    D = phi_data(h)
    src, tgt = D.F.obj(phi.source), D.G.obj(phi.target)
    el = homotopy_sum(h, phi.theta, src.sheaf, tgt.sheaf)
    if phi1_sign(phi.degree) < 0:
        el = -el
    return TwistedMorphism(src, tgt, el, phi.degree - 1, name=f"Phi1[{phi.name}]")


def build_phi(h: SimplicialHomotopy) -> AinfPrenat:
    """The transformation {Phi_0, Phi_1, 0, 0, ...} from f^* to g^*."""
    D = phi_data(h)

    def higher(us):
        return build_phi1(h, us[0]) if len(us) == 1 else None

    return AinfPrenat(D.F, D.G, 0, lambda X: build_phi0(h, X), higher, name="Phi")


def level1_residual(h: SimplicialHomotopy, phi: TwistedMorphism) -> TwistedMorphism:
    """d[Phi_1 phi] - Phi_1(d phi) + (-1)^{m-1} g^*phi Phi_0(E) + (-1)^m Phi_0(F) f^*phi."""
    D = phi_data(h)
    m = phi.degree
    p1 = build_phi1(h, phi)
    out = morphism_diff(p1, cross_check=False) - build_phi1(h, morphism_diff(phi, cross_check=False))
    out = out + (D.G.mor(phi) * build_phi0(h, phi.source)).scale(sgn(m - 1))
    out = out + (build_phi0(h, phi.target) * D.F.mor(phi)).scale(sgn(m))
    return out


def level2_residual(h: SimplicialHomotopy, phi: TwistedMorphism, psi: TwistedMorphism) -> TwistedMorphism:
    """(-1)^{m-1} g^*phi Phi_1(psi) + (-1)^{-m-n+1} Phi_1(phi) f^*psi + (-1)^m Phi_1(phi psi)."""
    D = phi_data(h)
    m, n = phi.degree, psi.degree
    out = (D.G.mor(phi) * build_phi1(h, psi)).scale(sgn(m - 1))
    out = out + (build_phi1(h, phi) * D.F.mor(psi)).scale(sgn(-m - n + 1))
    out = out + build_phi1(h, phi * psi).scale(sgn(m))
    return out


def naturality_defect(h: SimplicialHomotopy, phi: TwistedMorphism) -> TwistedMorphism:
    """g^*phi Phi_0(E) - (-1)^{|phi|} Phi_0(F) f^*phi; nonzero means Phi_0 alone is not dg-natural."""
    D = phi_data(h)
    left = D.G.mor(phi) * build_phi0(h, phi.source)
    right = build_phi0(h, phi.target) * D.F.mor(phi)
    return left - right.scale(sgn(phi.degree))


# ---------------------------------------------------------------------------
# the three re-indexing identities, expanded simplex by simplex


def check_face_exchange_sum(h: SimplicialHomotopy) -> Report:
    """sum_{i=1}^{k-1} sum_{j<k} (-1)^{i+j} d_i^* h_j^* = sum_{i=1}^{k} sum_{j<=k} (-1)^{i+j-1} h_j^* d_i^*.

    Both sides are compared as signed formal sums of k-simplices of the
    target, for every k-simplex of the source.
    """
    rep = Report("interior faces past homotopy components")
    U, V, M = h.source, h.target, h.max_level
    fails = []
    for k in range(M + 1):
        if k + 1 > V.N:
            break
        for x in range(U.size(k)):
            acc: dict = {}
            for i in range(1, k):
                y = int(U.face(k, i)[x])
                for j in range(k):
                    z = int(h.h(k - 1, j)[y])
                    acc[z] = acc.get(z, 0) + sgn(i + j)
            for i in range(1, k + 1):
                for j in range(k + 1):
                    z = int(V.face(k + 1, i)[h.h(k, j)[x]])
                    acc[z] = acc.get(z, 0) - sgn(i + j - 1)
            bad = {V.ids(k)[z]: c for z, c in acc.items() if c}
            if bad:
                fails.append({"level": k, "simplex": U.ids(k)[x], "excess": bad})
    rep.add("sum of d_i h_j equals sum of h_j d_i", fails)
    return rep


def _eval_pair(fld, left, right):
    if left is None or right is None:
        return None
    return fld.matmul(left, right)


def _acc(fld, acc, x, m, s):
    if m is None:
        return
    if s < 0:
        m = fld.mneg(m)
    acc[x] = fld.madd(acc[x], m) if x in acc else m


def _block(el: CechElement, p: int, q: int, x: int):
    return el.blocks.get((p, q), {}).get(x)


def check_front_face_sum(h: SimplicialHomotopy, phi: TwistedMorphism, psi: TwistedMorphism) -> Report:
    """Front-face re-indexing: g-pullback of phi against h-pullbacks of psi, versus h-pullback of the product."""
    D = phi_data(h)
    U, V, M = h.source, h.target, h.max_level
    fld = phi.field
    m, n = phi.degree, psi.degree
    P, Q = phi.theta, psi.theta
    fails = []
    for k in range(M + 1):
        lhs, rhs = {}, {}
        for x in range(U.size(k)):
            for i in range(k + 1):
                xr = int(U.front_face(k, i)[x])
                xt = int(U.back_face(k, k - i)[x])
                left = _block(P, i, m - i, int(D.g[i][xr]))
                for j in range(k - i + 1):
                    right = _block(Q, k - i + 1, n - 1 + i - k, int(h.h(k - i, j)[xt]))
                    _acc(fld, lhs, x, _eval_pair(fld, left, right), sgn((m - i) * (k - i) + j))
            for j in range(k + 1):
                y = int(h.h(k, j)[x])
                for i in range(j + 1):
                    left = _block(P, i, m - i, int(V.front_face(k + 1, i)[y]))
                    right = _block(Q, k - i + 1, n - 1 + i - k, int(V.back_face(k + 1, k - i + 1)[y]))
                    _acc(fld, rhs, x, _eval_pair(fld, left, right), sgn(j + m) * sgn((m - i) * (k - i + 1)))
        for x in set(lhs) | set(rhs):
            a = lhs.get(x)
            b = rhs.get(x)
            diff = a if b is None else (fld.mneg(b) if a is None else fld.msub(a, b))
            if not fld.is_zero(diff):
                fails.append({"level": k, "simplex": U.ids(k)[x]})
    rep = Report("front-face re-indexing through g and h")
    rep.add(f"front-face sum identity for ({phi.name}, {psi.name})", fails)
    return rep


def check_back_face_sum(h: SimplicialHomotopy, phi: TwistedMorphism, psi: TwistedMorphism) -> Report:
    """Back-face re-indexing: h-pullbacks of phi against f-pullback of psi, versus h-pullback of the product."""
    D = phi_data(h)
    U, V, M = h.source, h.target, h.max_level
    fld = phi.field
    m, n = phi.degree, psi.degree
    P, Q = phi.theta, psi.theta
    fails = []
    for k in range(M + 1):
        lhs, rhs = {}, {}
        for x in range(U.size(k)):
            for i in range(k + 1):
                xr = int(U.front_face(k, i)[x])
                xt = int(U.back_face(k, k - i)[x])
                right = _block(Q, k - i, n + i - k, int(D.f[k - i][xt]))
                for j in range(i + 1):
                    left = _block(P, i + 1, m - i - 1, int(h.h(i, j)[xr]))
                    _acc(fld, lhs, x, _eval_pair(fld, left, right), sgn((m - i - 1) * (k - i) + j))
            for j in range(k + 1):
                y = int(h.h(k, j)[x])
                for i in range(j + 1, k + 2):
                    left = _block(P, i, m - i, int(V.front_face(k + 1, i)[y]))
                    right = _block(Q, k - i + 1, n - 1 + i - k, int(V.back_face(k + 1, k - i + 1)[y]))
                    _acc(fld, rhs, x, _eval_pair(fld, left, right), sgn(j) * sgn((m - i) * (k - i + 1)))
        for x in set(lhs) | set(rhs):
            a = lhs.get(x)
            b = rhs.get(x)
            diff = a if b is None else (fld.mneg(b) if a is None else fld.msub(a, b))
            if not fld.is_zero(diff):
                fails.append({"level": k, "simplex": U.ids(k)[x]})
    rep = Report("back-face re-indexing through f and h")
    rep.add(f"back-face sum identity for ({phi.name}, {psi.name})", fails)
    return rep


# ---------------------------------------------------------------------------
# full verification of the induced transformation


def verify_phi(h: SimplicialHomotopy, probe: ProbeSet, max_level: int = 3, reindexing: bool = True) -> Report:
    D = phi_data(h)
    rep = Report("transformation induced by a homotopy")
    rep.meta.update({"window": D.window, "orientation": getattr(h, "orientation", "given")})
    Phi = build_phi(h)
    closed, weq = [], []
    for X in probe.objects:
        p0 = build_phi0(h, X)
        d = morphism_diff(p0, cross_check=False)
        if not d.is_zero():
            closed.append({"object": X.name, "at": d.theta.located_entries()[:3]})
        w = weak_equivalence_report(p0)
        if not w.ok:
            weq.append({"object": X.name, "failed": [c.name for c in w.failed()]})
    rep.add("Phi_0(E) is closed", closed)
    rep.add("Phi_0(E) is a weak equivalence", weq)
    l1 = []
    for u in probe.morphisms:
        r = level1_residual(h, u)
        if not r.is_zero():
            l1.append({"morphism": u.name, "at": r.theta.located_entries()[:3]})
    rep.add("first-order identity for Phi_1", l1)
    l2 = []
    for u2, u1 in probe.chains(2):
        r = level2_residual(h, u2, u1)
        if not r.is_zero():
            l2.append({"pair": _label((u2, u1)), "at": r.theta.located_entries()[:3]})
    rep.add("second-order identity for Phi_1", l2)
    rep.extend(closure_report(Phi, probe, max_level))
    defects = []
    for u in probe.morphisms:
        if not naturality_defect(h, u).is_zero():
            defects.append({"morphism": u.name})
    rep.add("strict naturality of Phi_0", defects, skip=True, note=f"informative: {len(defects)} defect witnesses")
    rep.meta["naturality_defects"] = len(defects)
    if reindexing:
        rep.extend(check_face_exchange_sum(h))
        pairs = probe.chains(2)
        fr, bk = [], []
        for u2, u1 in pairs:
            fr += check_front_face_sum(h, u2, u1).checks[0].details
            bk += check_back_face_sum(h, u2, u1).checks[0].details
        rep.add("front-face re-indexing sums", fr)
        rep.add("back-face re-indexing sums", bk)
    return rep


# ---------------------------------------------------------------------------
# quasi-inverses


@dataclass
class QuasiInverseWitness:
    Psi: AinfPrenat
    eta: AinfPrenat
    omega: AinfPrenat
    certificates: dict = field(default_factory=dict)


def verify_quasi_inverse(
    Phi: AinfPrenat, W: QuasiInverseWitness, probe: ProbeSet, max_level: int = 2, required_levels: int = None
) -> Report:
    """Evaluate Psi.Phi - id = d eta and Phi.Psi - id = d omega level by level.

    Levels above ``required_levels`` are reported as informative.
    """
    rep = Report("quasi-inverse witness")
    required = max_level if required_levels is None else required_levels
    idF, idG = identity_prenat(Phi.F), identity_prenat(Phi.G)
    eqs = (
        ("Psi.Phi - id = d eta", _difference(compose_ainf(W.Psi, Phi), idF), d_infinity(W.eta)),
        ("Phi.Psi - id = d omega", _difference(compose_ainf(Phi, W.Psi), idG), d_infinity(W.omega)),
    )
    for label, lhs, rhs in eqs:
        for l in range(max_level + 1):
            fails = []
            for ch in probe.chains(l):
                diff = lhs.component(ch) - rhs.component(ch)
                if not diff.is_zero():
                    fails.append({"level": l, "input": _label(ch), "at": diff.theta.located_entries()[:3]})
            if l <= required:
                rep.add(f"{label} at level {l}", fails)
            else:
                rep.add(f"{label} at level {l}", fails, skip=True, note=f"informative: {len(fails)} residuals")
    return rep


def quasi_inverse_exists(Phi: AinfPrenat, probe: ProbeSet):
    """Objectwise homotopy inverses of Phi^0; returns (all_found, {object name: HoInverse or None})."""
    certs = {}
    for X in probe.objects:
        certs[X.name] = ho_invert(Phi.at(X))
    return all(c is not None for c in certs.values()), certs


def lift_witness(Phi: AinfPrenat, probe: ProbeSet, certs: dict) -> QuasiInverseWitness:
    """Level-0 witness from objectwise certificates; higher components are zero."""
    by_id = {id(X): certs[X.name] for X in probe.objects}

    def get(X, attr):
        c = by_id.get(id(X))
        if c is None:
            raise StructuralError(f"no certificate for object {X.name!r}")
        return getattr(c, attr)

    Psi = AinfPrenat(Phi.G, Phi.F, 0, lambda X: get(X, "psi"), None, name="Psi")
    eta = AinfPrenat(Phi.F, Phi.F, -1, lambda X: get(X, "eta"), None, name="eta")
    omega = AinfPrenat(Phi.G, Phi.G, -1, lambda X: get(X, "omega"), None, name="omega")
    return QuasiInverseWitness(Psi, eta, omega, certificates=certs)


# ---------------------------------------------------------------------------
# random transformations (for testing the differential)


def random_prenat(
    h: SimplicialHomotopy, probe: ProbeSet, degree: int, rng: np.random.Generator, max_level: int = 3, name: str = "R"
) -> AinfPrenat:
    """A multilinear prenat F => G built from random endpoint data.

    Phi^0_X = alpha0_X,
    Phi^l(u_l..u_1) = alpha_l[X_l] F(u_l..u_1) + G(u_l) beta_l[X_{l-1}] F(u_{l-1}..u_1)
                      + gamma_l[X_l] H(u_l..u_1),
    where H is the homotopy pullback sum (a map f^*X_0 -> g^*X_l).
    All alpha, beta, gamma are random morphisms of the degree that makes the
    total degree come out right.
    """
    from .generate import random_morphism  # local import: generate depends on this module

    D = phi_data(h)
    F, G = D.F, D.G
    table: dict = {}

    def data(kind, l, X):
        key = (kind, l, id(X))
        if key not in table:
            if kind == "gamma":
                src, tgt, deg = G.obj(X), G.obj(X), degree - l + 1
            else:
                src, tgt, deg = F.obj(X), G.obj(X), degree - l
            table[key] = random_morphism(src, tgt, deg, rng, name=f"{kind}{l}")
        return table[key]

    for X in probe.objects:
        data("alpha", 0, X)
        for l in range(1, max_level + 1):
            for kind in ("alpha", "beta", "gamma"):
                data(kind, l, X)

    def product(us):
        out = us[0]
        for u in us[1:]:
            out = out * u
        return out

    def higher(us):
        l = len(us)
        if l > max_level:
            return None
        whole = product(us)
        total = data("alpha", l, us[0].target) * F.mor(whole)
        if l == 1:
            total = total + G.mor(us[0]) * data("beta", l, us[0].source)
        else:
            total = total + G.mor(us[0]) * data("beta", l, us[0].source) * F.mor(product(us[1:]))
        Hs = homotopy_sum(h, whole.theta, F.obj(whole.source).sheaf, G.obj(whole.target).sheaf)
        Hm = TwistedMorphism(F.obj(whole.source), G.obj(whole.target), Hs, whole.degree - 1)
        return total + data("gamma", l, us[0].target) * Hm

    return AinfPrenat(F, G, degree, lambda X: data("alpha", 0, X), higher, name=name)

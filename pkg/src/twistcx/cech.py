"""
Bigraded cochains with values in graded modules over a simplicial space.

A Hom-type element u of bidegree (p, q) assigns to each p-simplex x a
matrix from E(last vertex of x) to F(first vertex of x) raising internal
degree by q.  Matrices are stored in "total" form: rows and columns run
over all degrees of the stalk, ordered by degree, and only the degree-q
block is allowed to be nonzero.  That way composition is plain matrix
multiplication and sums of pieces of different bidegree can share storage
per bidegree.

Sections (module-type elements) store a vector in E(first vertex of x).
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConventionError, StructuralError, TruncationError
from .exact_linalg import Field, GradedModule, hom_mask, inverse
from .simplicial import SimplicialMap, SimplicialSpace

__all__ = [
    "GradedSheaf",
    "CechElement",
    "CechSection",
    "composition_sign",
    "delta_sign",
    "compose",
    "act",
    "delta_hom",
    "delta_section",
    "pullback_sheaf",
    "pullback_element",
    "pullback_section",
    "reindex_element",
    "invert_graded",
    "gauge_transform",
    "random_sheaf",
    "random_element",
    "random_section",
    "same_space",
]


def composition_sign(q: int, r: int) -> int:
    """Sign picked up when a degree-q map passes an r-simplex."""
    return -1 if (q * r) % 2 else 1


def delta_sign(k: int) -> int:
    return -1 if k % 2 else 1


def root_space(S: SimplicialSpace) -> SimplicialSpace:
    while getattr(S, "parent", None) is not None:
        S = S.parent
    return S


def same_space(S: SimplicialSpace, T: SimplicialSpace) -> bool:
    return S is T or root_space(S) is root_space(T)


class GradedSheaf:
    """A bounded graded free module at each vertex of ``base``."""

    def __init__(self, field: Field, base: SimplicialSpace, modules: Sequence[GradedModule], name: str = ""):
        modules = tuple(m if isinstance(m, GradedModule) else GradedModule.of(m) for m in modules)
        if len(modules) != base.size(0):
            raise StructuralError(f"sheaf {name!r}: {len(modules)} stalks for {base.size(0)} vertices")
        self.field, self.base, self.modules, self.name = field, base, modules, name
        self._cache: dict = {}

    def __getitem__(self, x: int) -> GradedModule:
        return self.modules[x]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedSheaf):
            return NotImplemented
        return self.modules == other.modules and same_space(self.base, other.base) and self.field == other.field

    def __hash__(self) -> int:
        return hash(self.modules)

    @property
    def totals(self) -> np.ndarray:
        if "totals" not in self._cache:
            self._cache["totals"] = np.array([m.total for m in self.modules], dtype=np.int64)
        return self._cache["totals"]

    def degrees(self) -> list:
        return sorted({n for m in self.modules for n in m.degrees})

    def amplitude(self) -> int:
        degs = self.degrees()
        return degs[-1] - degs[0] if degs else 0

    def on(self, space: SimplicialSpace) -> "GradedSheaf":
        """The same stalks viewed over a truncation of the base."""
        if space is self.base:
            return self
        if not same_space(space, self.base) or space.size(0) != self.base.size(0):
            raise StructuralError("sheaf moved to an unrelated space")
        key = ("on", id(space))
        if key not in self._cache:
            self._cache[key] = GradedSheaf(self.field, space, self.modules, self.name)
        return self._cache[key]

    def mask(self, target: "GradedSheaf", s: int, t: int, q: int) -> np.ndarray:
        key = ("mask", id(target), s, t, q)
        if key not in self._cache:
            self._cache[key] = hom_mask(self.modules[s], target.modules[t], q)
        return self._cache[key]

    def to_json(self) -> list:
        return [m.to_json() for m in self.modules]

    def __repr__(self) -> str:
        return f"GradedSheaf({self.name!r} over {self.base.name!r})"


def _clean(field: Field, blocks: dict) -> dict:
    out = {}
    for key, comp in blocks.items():
        kept = {x: m for x, m in comp.items() if not field.is_zero(m)}
        if kept:
            out[key] = kept
    return out


class CechElement:
    """Finite sum of homogeneous pieces u^{p,q}; ``blocks[(p, q)][x]`` is a total matrix."""

    def __init__(self, source: GradedSheaf, target: GradedSheaf, blocks: Optional[dict] = None, check: bool = True):
        if not same_space(source.base, target.base):
            raise StructuralError("source and target sheaves live on different spaces")
        if source.base.N < target.base.N:
            target = target.on(source.base)
        elif target.base.N < source.base.N:
            source = source.on(target.base)
        self.source, self.target = source, target
        self.field = source.field
        self.blocks = _clean(self.field, dict(blocks or {}))
        if check:
            self.validate()

    @property
    def space(self) -> SimplicialSpace:
        return self.source.base

    def shape_at(self, p: int, x: int) -> tuple:
        S = self.space
        return (
            int(self.target.totals[S.first_vertex(p)[x]]),
            int(self.source.totals[S.last_vertex(p)[x]]),
        )

    def mask_at(self, p: int, q: int, x: int) -> np.ndarray:
        S = self.space
        return self.source.mask(self.target, int(S.last_vertex(p)[x]), int(S.first_vertex(p)[x]), q)

    def validate(self) -> None:
        S = self.space
        for (p, q), comp in self.blocks.items():
            if p > S.N or p < 0:
                raise TruncationError(f"piece ({p},{q}) outside levels 0..{S.N}")
            for x, m in comp.items():
                if not 0 <= x < S.size(p):
                    raise StructuralError(f"piece ({p},{q}): simplex {x} out of range")
                if m.shape != self.shape_at(p, x):
                    raise StructuralError(
                        f"piece ({p},{q}) at {S.ids(p)[x]}: shape {m.shape}, expected {self.shape_at(p, x)}"
                    )
                if not self.field.is_zero(np.where(self.mask_at(p, q, x), 0, m)):
                    raise StructuralError(f"piece ({p},{q}) at {S.ids(p)[x]} has entries outside degree {q}")

    # -- basic algebra ---------------------------------------------------

    def block(self, p: int, q: int, x: int) -> np.ndarray:
        got = self.blocks.get((p, q), {}).get(x)
        if got is None:
            return self.field.zeros(*self.shape_at(p, x))
        return got

    def piece(self, p: int, q: int) -> "CechElement":
        return CechElement(self.source, self.target, {(p, q): self.blocks.get((p, q), {})}, check=False)

    def pieces(self) -> list:
        return sorted(self.blocks)

    def total_degrees(self) -> set:
        return {p + q for p, q in self.blocks}

    @property
    def degree(self) -> Optional[int]:
        """Total degree if homogeneous (None for zero or mixed)."""
        degs = self.total_degrees()
        return degs.pop() if len(degs) == 1 else None

    def is_zero(self) -> bool:
        return not self.blocks

    def _combine(self, other: "CechElement", sign: int) -> "CechElement":
        if self.source != other.source or self.target != other.target:
            raise StructuralError("adding elements with different endpoints")
        fld = self.field
        out = {k: dict(v) for k, v in self.blocks.items()}
        for key, comp in other.blocks.items():
            tgt = out.setdefault(key, {})
            for x, m in comp.items():
                mm = m if sign > 0 else fld.mneg(m)
                tgt[x] = fld.madd(tgt[x], mm) if x in tgt else mm
        return CechElement(self.source, self.target, out, check=False)

    def __add__(self, other: "CechElement") -> "CechElement":
        return self._combine(other, 1)

    def __sub__(self, other: "CechElement") -> "CechElement":
        return self._combine(other, -1)

    def __neg__(self) -> "CechElement":
        return self.scale(-1)

    def scale(self, c) -> "CechElement":
        fld = self.field
        return CechElement(
            self.source,
            self.target,
            {k: {x: fld.mscale(c, m) for x, m in v.items()} for k, v in self.blocks.items()},
            check=False,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, CechElement):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __mul__(self, other):
        if isinstance(other, CechElement):
            return compose(self, other)
        if isinstance(other, CechSection):
            return act(self, other)
        return NotImplemented

    def restrict(self, M: int) -> "CechElement":
        """Drop pieces above level M and move to the truncated space."""
        S = self.space.truncated(M)
        return CechElement(
            self.source.on(S), self.target.on(S), {k: v for k, v in self.blocks.items() if k[0] <= M}, check=False
        )

    def located_entries(self) -> list:
        """Nonzero (bidegree, simplex id) locations, for reports."""
        out = []
        for (p, q), comp in sorted(self.blocks.items()):
            for x in sorted(comp):
                out.append({"bidegree": [p, q], "simplex": self.space.ids(p)[x]})
        return out

    @classmethod
    def zero(cls, source: GradedSheaf, target: GradedSheaf) -> "CechElement":
        return cls(source, target, {}, check=False)

    @classmethod
    def identity(cls, E: GradedSheaf) -> "CechElement":
        fld = E.field
        ident = {x: fld.eye(m.total) for x, m in enumerate(E.modules) if m.total}
        return cls(E, E, {(0, 0): ident}, check=False)

    def __repr__(self) -> str:
        return f"CechElement({self.source.name}->{self.target.name}, pieces={self.pieces()})"


class CechSection:
    """Module-type cochain; ``blocks[(p, q)][x]`` is a vector in E(first vertex of x)."""

    def __init__(self, sheaf: GradedSheaf, blocks: Optional[dict] = None, check: bool = True):
        self.sheaf = sheaf
        self.field = sheaf.field
        self.blocks = _clean(self.field, dict(blocks or {}))
        if check:
            self.validate()

    @property
    def space(self) -> SimplicialSpace:
        return self.sheaf.base

    def length_at(self, p: int, x: int) -> int:
        return int(self.sheaf.totals[self.space.first_vertex(p)[x]])

    def validate(self) -> None:
        S = self.space
        for (p, q), comp in self.blocks.items():
            if not 0 <= p <= S.N:
                raise TruncationError(f"section piece ({p},{q}) outside levels 0..{S.N}")
            for x, v in comp.items():
                if v.shape != (self.length_at(p, x),):
                    raise StructuralError(f"section piece ({p},{q}) at {S.ids(p)[x]}: bad length {v.shape}")
                mod = self.sheaf[int(S.first_vertex(p)[x])]
                if not self.field.is_zero(np.where(mod.degree_of_index == q, 0, v)):
                    raise StructuralError(f"section piece ({p},{q}) at {S.ids(p)[x]} has entries outside degree {q}")

    def vector(self, p: int, q: int, x: int) -> np.ndarray:
        got = self.blocks.get((p, q), {}).get(x)
        return self.field.zero_vector(self.length_at(p, x)) if got is None else got

    def is_zero(self) -> bool:
        return not self.blocks

    def _combine(self, other: "CechSection", sign: int) -> "CechSection":
        if self.sheaf != other.sheaf:
            raise StructuralError("adding sections of different sheaves")
        fld = self.field
        out = {k: dict(v) for k, v in self.blocks.items()}
        for key, comp in other.blocks.items():
            tgt = out.setdefault(key, {})
            for x, v in comp.items():
                vv = v if sign > 0 else fld.mneg(v)
                tgt[x] = fld.madd(tgt[x], vv) if x in tgt else vv
        return CechSection(self.sheaf, out, check=False)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, c) -> "CechSection":
        fld = self.field
        return CechSection(self.sheaf, {k: {x: fld.mscale(c, v) for x, v in comp.items()} for k, comp in self.blocks.items()}, False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CechSection):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    @property
    def degree(self) -> Optional[int]:
        degs = {p + q for p, q in self.blocks}
        return degs.pop() if len(degs) == 1 else None


# ---------------------------------------------------------------------------
# products


def _product_support(S: SimplicialSpace, p: int, r: int, left: dict, right: dict):
    """Simplices x of level p+r whose front p-face is in ``left`` and back r-face in ``right``."""
    k = p + r
    tau = S.back_face(k, r)
    pre = S.preimages("rho", k, p)
    for xu in sorted(left):
        cand = pre.get(xu)
        if cand is None:
            continue
        for x in cand.tolist():
            xv = int(tau[x])
            if xv in right:
                yield x, xu, xv


def compose(u: CechElement, v: CechElement, strict: bool = False) -> CechElement:
    """(u.v)^{p+r,q+s}(x) = sign(q,r) u(front p-face of x) v(back r-face of x).

    Results above the truncation level are dropped (the truncated complex
    is a quotient); ``strict=True`` raises instead.
    """
    if v.target != u.source:
        raise StructuralError(f"cannot compose: {v.target.name!r} is not {u.source.name!r}")
    S = u.space if u.space.N <= v.space.N else v.space
    fld = u.field
    out: dict = {}
    for (p, q), ub in u.blocks.items():
        for (r, s), vb in v.blocks.items():
            if p + r > S.N:
                if strict:
                    raise TruncationError(f"composite of ({p},{q}) and ({r},{s}) lands above level {S.N}")
                continue
            sgn = composition_sign(q, r)
            tgt = out.setdefault((p + r, q + s), {})
            for x, xu, xv in _product_support(S, p, r, ub, vb):
                m = fld.matmul(ub[xu], vb[xv])
                if sgn < 0:
                    m = fld.mneg(m)
                tgt[x] = fld.madd(tgt[x], m) if x in tgt else m
    return CechElement(v.source.on(S), u.target.on(S), out, check=False)


def act(u: CechElement, c: CechSection, strict: bool = False) -> CechSection:
    """Left action of Hom-type cochains on sections, same sign rule as ``compose``."""
    if c.sheaf != u.source:
        raise StructuralError("section does not live in the source of the element")
    S = u.space if u.space.N <= c.space.N else c.space
    fld = u.field
    out: dict = {}
    for (p, q), ub in u.blocks.items():
        for (r, s), cb in c.blocks.items():
            if p + r > S.N:
                if strict:
                    raise TruncationError(f"action of ({p},{q}) on ({r},{s}) lands above level {S.N}")
                continue
            sgn = composition_sign(q, r)
            tgt = out.setdefault((p + r, q + s), {})
            for x, xu, xv in _product_support(S, p, r, ub, cb):
                w = fld.matmul(ub[xu], cb[xv])
                if sgn < 0:
                    w = fld.mneg(w)
                tgt[x] = fld.madd(tgt[x], w) if x in tgt else w
    return CechSection(u.target.on(S), out, check=False)


def _delta(S: SimplicialSpace, fld: Field, blocks: dict, top_face, strict: bool) -> dict:
    out: dict = {}
    for (p, q), comp in blocks.items():
        if p + 1 > S.N:
            if strict and comp:
                raise TruncationError(f"differential of a level-{p} piece needs level {p + 1} > {S.N}")
            continue
        keys = np.fromiter(comp.keys(), dtype=np.int64, count=len(comp))
        tgt = out.setdefault((p + 1, q), {})
        for k in range(1, top_face(p) + 1):
            face = S.face(p + 1, k)
            hits = np.flatnonzero(np.isin(face, keys))
            sgn = delta_sign(k)
            for x in hits.tolist():
                m = comp[int(face[x])]
                if sgn < 0:
                    m = fld.mneg(m)
                tgt[x] = fld.madd(tgt[x], m) if x in tgt else m
    return out


def delta_hom(u: CechElement, strict: bool = False) -> CechElement:
    """Interior-face differential: sum over k = 1..p of sign(k) u(d_k x)."""
    return CechElement(u.source, u.target, _delta(u.space, u.field, u.blocks, lambda p: p, strict), check=False)


def delta_section(c: CechSection, strict: bool = False) -> CechSection:
    """Differential on sections: sum over k = 1..p+1 (only the 0th face is excluded)."""
    return CechSection(c.sheaf, _delta(c.space, c.field, c.blocks, lambda p: p + 1, strict), check=False)


# ---------------------------------------------------------------------------
# pullbacks


def pullback_sheaf(f: SimplicialMap, E: GradedSheaf) -> GradedSheaf:
    if not same_space(E.base, f.target):
        raise StructuralError(f"sheaf {E.name!r} does not live on the target of {f.name!r}")
    cache = f._cache.setdefault("sheaves", {})
    key = id(E)
    if key not in cache:
        mods = [E.modules[int(y)] for y in f[0]]
        cache[key] = (E, GradedSheaf(E.field, f.source, mods, name=f"{f.name}*{E.name}"))
    return cache[key][1]


def reindex_element(
    u: CechElement, source: GradedSheaf, target: GradedSheaf, index: dict, shift: int = 0
) -> CechElement:
    """Pull u back along level-wise index arrays.

    ``index[p]`` maps U_p into V_{p+shift}; the piece (p + shift, q) of u
    becomes the piece (p, q) of the result.  The caller guarantees that the
    endpoint stalks match (simplicial maps and homotopy components do).
    """
    out: dict = {}
    for p, arr in index.items():
        for (pp, q), comp in u.blocks.items():
            if pp != p + shift or not comp:
                continue
            keys = np.fromiter(comp.keys(), dtype=np.int64, count=len(comp))
            hits = np.flatnonzero(np.isin(arr, keys))
            if hits.size:
                out[(p, q)] = {x: comp[int(arr[x])] for x in hits.tolist()}
    return CechElement(source, target, out, check=False)


def pullback_element(f: SimplicialMap, u: CechElement) -> CechElement:
    """(f^*u)(x) = u(f(x)) with stalks re-indexed by f_0."""
    src, tgt = pullback_sheaf(f, u.source), pullback_sheaf(f, u.target)
    return reindex_element(u, src, tgt, {p: f[p] for p in range(f.source.N + 1)})


def pullback_section(f: SimplicialMap, c: CechSection) -> CechSection:
    sheaf = pullback_sheaf(f, c.sheaf)
    out = {}
    for (p, q), comp in c.blocks.items():
        if p > f.source.N:
            continue
        arr = f[p]
        keys = np.fromiter(comp.keys(), dtype=np.int64, count=len(comp))
        hits = np.flatnonzero(np.isin(arr, keys))
        if hits.size:
            out[(p, q)] = {x: comp[int(arr[x])] for x in hits.tolist()}
    return CechSection(sheaf, out, check=False)


# ---------------------------------------------------------------------------
# inversion and gauge


def invert_graded(u: CechElement) -> CechElement:
    """Inverse of a total-degree-0 endomorphism with invertible level-0 blocks.

    Write u = u0 + n with n concentrated in levels >= 1; then
    u^{-1} = sum_k (-u0^{-1} n)^k u0^{-1}, which terminates by truncation.
    """
    E = u.source
    if u.target != E:
        raise StructuralError("invert_graded needs an endomorphism")
    if any(p + q != 0 for p, q in u.blocks):
        raise StructuralError("invert_graded needs total degree 0")
    fld = u.field
    S = u.space
    inv0 = {}
    for x, mod in enumerate(E.modules):
        if not mod.total:
            continue
        try:
            inv0[x] = inverse(fld, u.block(0, 0, x))
        except ZeroDivisionError:
            raise ConventionError(f"level-0 block at vertex {S.ids(0)[x]!r} is not invertible") from None
    u0inv = CechElement(E, E, {(0, 0): inv0}, check=False)
    n = CechElement(E, E, {k: v for k, v in u.blocks.items() if k[0] >= 1}, check=False)
    step = -compose(u0inv, n)
    term, total = u0inv, u0inv
    for _ in range(S.N):
        term = compose(step, term)
        if term.is_zero():
            break
        total = total + term
    return total


def gauge_transform(u: CechElement, a: CechElement) -> CechElement:
    """a' = u a u^{-1} - (delta u) u^{-1}; the Maurer-Cartan equation for a' is re-checked."""
    uinv = invert_graded(u)
    new = compose(compose(u, a), uinv) - compose(delta_hom(u), uinv)
    residual = delta_hom(new) + compose(new, new)
    if not residual.is_zero():
        raise ConventionError(
            f"gauge transform broke the Maurer-Cartan equation at {residual.located_entries()[:3]}"
        )
    return new


# ---------------------------------------------------------------------------
# random data


def random_sheaf(
    field: Field, base: SimplicialSpace, rng: np.random.Generator, degrees: Iterable[int] = (0, 1), max_rank: int = 2,
    name: str = "E",
) -> GradedSheaf:
    degrees = list(degrees)
    mods = []
    for _ in range(base.size(0)):
        mods.append(GradedModule.of({n: int(rng.integers(0, max_rank + 1)) for n in degrees}))
    return GradedSheaf(field, base, mods, name=name)


def _random_masked(field: Field, mask: np.ndarray, rng: np.random.Generator, density: float) -> np.ndarray:
    m = field.zeros(*mask.shape)
    for idx in zip(*np.nonzero(mask)):
        if rng.random() < density:
            m[idx] = field.random_nonzero(rng)
    return m


def random_element(
    source: GradedSheaf,
    target: GradedSheaf,
    bidegrees: Iterable[tuple],
    rng: np.random.Generator,
    density: float = 0.6,
    simplex_density: float = 0.8,
) -> CechElement:
    S = source.base
    fld = source.field
    blocks = {}
    probe = CechElement.zero(source, target)
    for p, q in bidegrees:
        if p > S.N:
            continue
        comp = {}
        for x in range(S.size(p)):
            if rng.random() >= simplex_density:
                continue
            m = _random_masked(fld, probe.mask_at(p, q, x), rng, density)
            comp[x] = m
        blocks[(p, q)] = comp
    return CechElement(source, target, blocks)


def random_section(
    sheaf: GradedSheaf, bidegrees: Iterable[tuple], rng: np.random.Generator, density: float = 0.7
) -> CechSection:
    S = sheaf.base
    fld = sheaf.field
    blocks = {}
    for p, q in bidegrees:
        if p > S.N:
            continue
        comp = {}
        fv = S.first_vertex(p)
        for x in range(S.size(p)):
            mod = sheaf[int(fv[x])]
            v = fld.zero_vector(mod.total)
            for i in np.flatnonzero(mod.degree_of_index == q).tolist():
                if rng.random() < density:
                    v[i] = fld.random_nonzero(rng)
            comp[x] = v
        blocks[(p, q)] = comp
    return CechSection(sheaf, blocks)

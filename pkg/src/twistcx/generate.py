"""
Seeded random instances: covers, homotopic nerve maps, gauge-twisted complexes.

Every instance is self-checked before it is returned; a failed self-check
is an internal error, never a silently emitted bad instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cech import CechElement, GradedSheaf, gauge_transform, random_element
from .errors import ConventionError, StructuralError
from .exact_linalg import Field, GradedModule, QQ, inverse
from .simplicial import (
    CoverSpec,
    SimplicialHomotopy,
    SimplicialMap,
    SimplicialSpace,
    cylinder,
    homotopy_from_cylinder,
    nerve,
    nerve_map,
)
from .twisted import TwistedComplex, TwistedMorphism, morphism_diff, validate_twisted

__all__ = [
    "SizeParams",
    "InstanceBundle",
    "make_rng",
    "random_cover",
    "random_homotopy",
    "random_complex",
    "pullback_type_complex",
    "random_gauge",
    "random_twisted",
    "random_morphism",
    "generate_bundle",
    "SIZE_LIMITS",
]

SIZE_LIMITS = {"sets": 6, "truncation": 5, "rank": 4, "amplitude": 3}


def make_rng(seed: int) -> np.random.Generator:
    """All randomness goes through PCG64 seeded with the user's 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))


@dataclass
class SizeParams:
    sets: int = 3
    points: int = 5
    truncation: int = 3
    rank: int = 2
    amplitude: int = 1
    objects: int = 2
    morphisms: int = 3

    def check(self) -> None:
        lim = SIZE_LIMITS
        if not 1 <= self.sets <= lim["sets"]:
            raise StructuralError(f"sets must be in 1..{lim['sets']}")
        if not 1 <= self.truncation <= lim["truncation"]:
            raise StructuralError(f"truncation must be in 1..{lim['truncation']}")
        if not 1 <= self.rank <= lim["rank"]:
            raise StructuralError(f"rank must be in 1..{lim['rank']}")
        if not 0 <= self.amplitude <= lim["amplitude"]:
            raise StructuralError(f"amplitude must be in 0..{lim['amplitude']}")
        if self.points < 1 or self.objects < 1 or self.morphisms < 0:
            raise StructuralError("points and objects must be positive")


@dataclass
class InstanceBundle:
    field: Field
    spaces: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    homotopies: dict = field(default_factory=dict)
    twisted: dict = field(default_factory=dict)
    morphisms: dict = field(default_factory=dict)
    probes: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# spaces and homotopies


def random_cover(rng: np.random.Generator, n_sets: int, n_points: int, prefix: str = "U") -> CoverSpec:
    points = list(range(n_points))
    sets = {}
    for i in range(n_sets):
        size = int(rng.integers(1, n_points + 1))
        sets[f"{prefix}{i}"] = sorted(rng.choice(n_points, size=size, replace=False).tolist())
    covered = set().union(*map(set, sets.values()))
    for p in points:
        if p not in covered:
            name = f"{prefix}{int(rng.integers(0, n_sets))}"
            sets[name] = sorted(set(sets[name]) | {p})
    return CoverSpec.of(points, sets)


def random_homotopy(rng: np.random.Generator, params: SizeParams):
    """Target nerve V, source nerve U, and a homotopy between two nerve maps U -> V.

    Each source set U_i sits inside V_{phi0(i)} and V_{phi1(i)}; the cylinder
    map sends a vertex labelled 0 through phi0 and a vertex labelled 1
    through phi1.
    """
    V_cover = random_cover(rng, params.sets, params.points, prefix="V")
    vsets = [set(s) for _, s in V_cover.sets]
    m = len(vsets)
    n_src = max(1, params.sets - 1)
    phi0, phi1, usets = [], [], {}
    for i in range(n_src):
        for _ in range(50):
            a, b = int(rng.integers(0, m)), int(rng.integers(0, m))
            common = sorted(vsets[a] & vsets[b])
            if common:
                break
        else:
            a = b = int(rng.integers(0, m))
            common = sorted(vsets[a])
        size = int(rng.integers(1, len(common) + 1))
        usets[f"A{i}"] = sorted(rng.choice(common, size=size, replace=False).tolist())
        phi0.append(a)
        phi1.append(b)
    pts = sorted(set().union(*map(set, usets.values())))
    U_cover = CoverSpec.of(pts, usets)
    N = params.truncation
    V = nerve(V_cover, N, name="V")
    U = nerve(U_cover, N, name="U")
    phi0, phi1 = np.array(phi0), np.array(phi1)
    f = nerve_map(U, V, lambda n, t: phi0[t], name="f")
    g = nerve_map(U, V, lambda n, t: phi1[t], name="g")
    C, _, _ = cylinder(U)
    comps = []
    for n in range(N + 1):
        t = U.vertex_tuples[n]
        j = np.arange(n + 2)
        k = np.arange(n + 1)
        # label of vertex k in step j is 0 when k < j
        zero = k[None, :] < j[:, None]
        rows = np.where(zero[None, :, :], phi0[t][:, None, :], phi1[t][:, None, :]).reshape(-1, n + 1)
        comps.append(rows)
    H = _tuples_to_map(C, V, comps, "H")
    h = homotopy_from_cylinder(H)
    # the extracted homotopy runs from h.f to h.g; make sure they are the nerve maps
    ends = {"natural": (f, g), "mirrored": (g, f)}
    start, end = ends[h.orientation]
    if not all(np.array_equal(h.f[n], start[n]) for n in range(U.N + 1)):
        raise ConventionError("cylinder ends do not match the nerve maps")
    h = SimplicialHomotopy(start, end, h.components, name="h")
    h.orientation = homotopy_orientation = "mirrored" if start is g else "natural"
    return {"U": U, "V": V, "f": f, "g": g, "h": h, "orientation": homotopy_orientation}


def _tuples_to_map(C: SimplicialSpace, V: SimplicialSpace, rows_per_level, name) -> SimplicialMap:
    m = len(V.cover.sets)
    comps = []
    for n, rows in enumerate(rows_per_level):
        tt = V.vertex_tuples[n]
        weights = m ** np.arange(n, -1, -1, dtype=np.int64)
        codes_t = tt @ weights
        codes_s = np.asarray(rows, dtype=np.int64) @ weights
        pos = np.searchsorted(codes_t, codes_s)
        if np.any(pos >= len(codes_t)) or np.any(codes_t[np.minimum(pos, len(codes_t) - 1)] != codes_s):
            raise ConventionError(f"{name}: image tuple with empty intersection on level {n}")
        comps.append(pos)
    return SimplicialMap(C, V, comps, name=name)


# ---------------------------------------------------------------------------
# complexes


def _random_invertible(fld: Field, n: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        m = fld.zeros(n, n)
        for i in range(n):
            for j in range(n):
                m[i, j] = fld.random(rng)
        try:
            inverse(fld, m)
            return m
        except ZeroDivisionError:
            continue


def random_complex(fld: Field, rng: np.random.Generator, lo: int, hi: int, max_rank: int, homology: bool = True):
    """A bounded complex in degrees lo..hi with a conjugated differential.

    Built as homology summands plus contractible pairs, then the basis in
    each degree is changed at random.  Returns (module, total differential).
    """
    ranks, arrows = {n: 0 for n in range(lo, hi + 1)}, []
    for n in range(lo, hi + 1):
        h = int(rng.integers(0, 2))
        ranks[n] += h
    if homology and not any(ranks.values()):
        ranks[int(rng.integers(lo, hi + 1))] += 1
    for n in range(lo, hi):
        for _ in range(int(rng.integers(0, 2))):
            if ranks[n] < max_rank and ranks[n + 1] < max_rank:
                arrows.append((n, ranks[n], ranks[n + 1]))
                ranks[n] += 1
                ranks[n + 1] += 1
    mod = GradedModule.of(ranks)
    d = fld.zeros(mod.total, mod.total)
    for n, i, j in arrows:
        d[mod.span(n + 1).start + j, mod.span(n).start + i] = fld.one
    P = fld.zeros(mod.total, mod.total)
    for n in mod.degrees:
        sl = mod.span(n)
        P[sl, sl] = _random_invertible(fld, mod.rank(n), rng)
    Pinv = inverse(fld, P)
    return mod, fld.matmul(fld.matmul(P, d), Pinv)


def _contractible(fld: Field, rng: np.random.Generator, lo: int, hi: int, max_pairs: int):
    ranks, arrows = {}, []
    if hi > lo:
        for _ in range(int(rng.integers(0, max_pairs + 1))):
            n = int(rng.integers(lo, hi))
            arrows.append((n, ranks.get(n, 0), ranks.get(n + 1, 0)))
            ranks[n] = ranks.get(n, 0) + 1
            ranks[n + 1] = ranks.get(n + 1, 0) + 1
    mod = GradedModule.of(ranks)
    d = fld.zeros(mod.total, mod.total)
    for n, i, j in arrows:
        d[mod.span(n + 1).start + j, mod.span(n).start + i] = fld.one
    return mod, d


def pullback_type_complex(
    fld: Field, V: SimplicialSpace, rng: np.random.Generator, params: SizeParams, name: str = "E", junk: bool = True,
    homology: bool = True,
) -> TwistedComplex:
    """E_i = C + J_i with C a fixed complex, J_i contractible; a^{1,0} = id_C + 0."""
    lo, hi = 0, params.amplitude
    Cmod, dC = random_complex(fld, rng, lo, hi, params.rank, homology=homology)
    mods, diffs, incl = [], [], []
    for _ in range(V.size(0)):
        Jmod, dJ = _contractible(fld, rng, lo, hi, 1 if junk else 0)
        tot, ia, ib = Cmod.direct_sum(Jmod)
        d = fld.zeros(tot.total, tot.total)
        d[np.ix_(ia, ia)] = dC
        d[np.ix_(ib, ib)] = dJ
        mods.append(tot)
        diffs.append(d)
        incl.append(ia)
    sheaf = GradedSheaf(fld, V, mods, name=name)
    a01 = {x: diffs[x] for x in range(V.size(0))}
    a10 = {}
    first, last = V.first_vertex(1), V.last_vertex(1)
    for y in range(V.size(1)):
        s, t = int(last[y]), int(first[y])
        m = fld.zeros(mods[t].total, mods[s].total)
        m[np.ix_(incl[t], incl[s])] = fld.eye(Cmod.total)
        a10[y] = m
    a = CechElement(sheaf, sheaf, {(0, 1): a01, (1, 0): a10})
    return TwistedComplex(sheaf, a, name=name)


def random_gauge(T: TwistedComplex, rng: np.random.Generator, density: float = 0.5) -> CechElement:
    """u = u0 + u^{1,-1} + u^{2,-2} + ... with u0 invertible and degree-preserving at each vertex."""
    E = T.sheaf
    fld = T.field
    u0 = {}
    for x, mod in enumerate(E.modules):
        m = fld.zeros(mod.total, mod.total)
        for n in mod.degrees:
            sl = mod.span(n)
            m[sl, sl] = _random_invertible(fld, mod.rank(n), rng)
        u0[x] = m
    higher = random_element(E, E, [(k, -k) for k in range(1, E.base.N + 1)], rng, density=density)
    return CechElement(E, E, {(0, 0): u0}) + higher


def random_twisted(fld: Field, V: SimplicialSpace, rng: np.random.Generator, params: SizeParams, name: str = "E",
                   homology: bool = True) -> TwistedComplex:
    """Pullback-type complex moved by a random gauge transformation; self-checked."""
    base = pullback_type_complex(fld, V, rng, params, name=name, homology=homology)
    u = random_gauge(base, rng)
    a = gauge_transform(u, base.a)
    T = TwistedComplex(base.sheaf, a, name=name)
    rep = validate_twisted(T, require_window=False)
    if not rep.ok:
        raise ConventionError(f"generated complex {name!r} fails validation: {[c.name for c in rep.failed()]}")
    T._cache["gauge"] = (base, u)
    return T


def random_morphism(
    source: TwistedComplex, target: TwistedComplex, degree: int, rng: np.random.Generator, density: float = 0.5,
    name: str = "",
) -> TwistedMorphism:
    S = source.space
    el = random_element(source.sheaf, target.sheaf, [(k, degree - k) for k in range(S.N + 1)], rng, density=density)
    return TwistedMorphism(source, target, el, degree, name=name)


# ---------------------------------------------------------------------------
# full bundle


def generate_bundle(seed: int, params: Optional[SizeParams] = None, fld: Field = QQ, defect_attempts: int = 20):
    """Spaces, maps, a homotopy, twisted complexes, morphisms and probes from one seed."""
    from .ainf import ProbeSet, naturality_defect, phi_data

    params = params or SizeParams()
    params.check()
    rng = make_rng(seed)
    inst = random_homotopy(rng, params)
    U, V, h = inst["U"], inst["V"], inst["h"]
    b = InstanceBundle(fld)
    b.spaces = {"U": U, "V": V}
    b.maps = {"f": h.f, "g": h.g}
    b.homotopies = {"h": h}
    objs = [random_twisted(fld, V, rng, params, name=f"E{i}") for i in range(params.objects)]
    for T in objs:
        b.twisted[T.name] = T
    mors = []
    degrees = [-1, 0, 1]
    for j in range(params.morphisms):
        s, t = objs[int(rng.integers(0, len(objs)))], objs[int(rng.integers(0, len(objs)))]
        mors.append(random_morphism(s, t, degrees[j % 3], rng, name=f"u{j}"))
    # closed morphisms and weak equivalences
    s, t = objs[0], objs[-1]
    theta = random_morphism(s, t, -1, rng)
    mors.append(_named(morphism_diff(theta, cross_check=False), "dtheta"))
    loop = random_morphism(s, s, -1, rng)
    mors.append(_named(TwistedMorphism.identity(s) + morphism_diff(loop, cross_check=False), "id_plus_d"))
    # naturality-defect witness: keep adding random morphisms until one shows a defect
    D = phi_data(h)
    witness = None
    for u in mors:
        if naturality_defect(h, u).theta.is_zero() is False:
            witness = u.name
            break
    tries = 0
    while witness is None and tries < defect_attempts:
        tries += 1
        u = random_morphism(objs[0], objs[-1], 0, rng, density=0.8, name=f"w{tries}")
        if not naturality_defect(h, u).is_zero():
            mors.append(u)
            witness = u.name
    for u in mors:
        b.morphisms[u.name] = u
    probe_mors = [u for u in mors if u.name.startswith("u") or u.name == witness]
    b.probes = {"P": ProbeSet(list(objs), probe_mors, name="P")}
    b.meta = {
        "seed": int(seed),
        "orientation": inst["orientation"],
        "naturality_defect_witness": witness,
        "window": D.window,
    }
    return b


def _named(m: TwistedMorphism, name: str) -> TwistedMorphism:
    m.name = name
    return m

"""Small hand-made bundles: the point space and constant homotopies."""

from __future__ import annotations

from .ainf import ProbeSet
from .cech import CechElement, GradedSheaf
from .exact_linalg import QQ, Field, GradedModule
from .generate import InstanceBundle, SizeParams, make_rng, random_cover, random_morphism, random_twisted
from .simplicial import SimplicialHomotopy, SimplicialMap, SimplicialSpace, nerve, point_space
from .twisted import TwistedComplex, TwistedMorphism, morphism_diff

__all__ = ["constant_homotopy", "point_bundle", "constant_bundle"]


def constant_homotopy(f: SimplicialMap, name: str = "h") -> SimplicialHomotopy:
    """h_i = s_i f, a homotopy from f to itself."""
    V = f.target
    M = min(f.source.N, V.N - 1)
    comps = [[V.degeneracy(p, i)[f.components[p]] for i in range(p + 1)] for p in range(M + 1)]
    return SimplicialHomotopy(f, f, comps, name=name)


def _point_complex(fld: Field, S: SimplicialSpace, ranks: dict, d: list, name: str) -> TwistedComplex:
    mod = GradedModule.of(ranks)
    E = GradedSheaf(fld, S, [mod], name=name)
    dm = fld.zeros(mod.total, mod.total)
    for i, j in d:
        dm[i, j] = fld.one
    a = CechElement(E, E, {(0, 1): {0: dm}, (1, 0): {0: fld.eye(mod.total)}})
    return TwistedComplex(E, a, name=name)


def point_bundle(fld: Field = QQ, N: int = 3) -> InstanceBundle:
    """Everything over a point: identity maps, constant homotopy, two complexes."""
    P = point_space(N, name="point")
    f = SimplicialMap.identity(P)
    h = constant_homotopy(f)
    E = _point_complex(fld, P, {0: 1}, [], "E")
    # k --1--> k in degrees 0, 1: acyclic
    F = _point_complex(fld, P, {0: 1, 1: 1}, [(1, 0)], "F")
    two = TwistedMorphism(E, E, CechElement(E.sheaf, E.sheaf, {(0, 0): {0: fld.eye(1) * fld.coerce(2)}}), 0, "twice")
    zero = TwistedMorphism.zero(E, E, 0)
    zero.name = "zero"
    idE = TwistedMorphism.identity(E)
    idE.name = "id_E"
    # a degree-0 endomorphism of F with a (1,-1) piece F^1 -> F^0
    blk = fld.zeros(2, 2)
    blk[0, 1] = fld.coerce(3)
    lift = TwistedMorphism(
        F, F, CechElement(F.sheaf, F.sheaf, {(0, 0): {0: fld.eye(2)}, (1, -1): {0: blk}}), 0, "lift"
    )
    htpy = fld.zeros(2, 2)
    htpy[0, 1] = fld.one
    contraction = TwistedMorphism(F, F, CechElement(F.sheaf, F.sheaf, {(0, -1): {0: htpy}}), -1, "contraction")
    b = InstanceBundle(fld)
    b.spaces = {"point": P}
    b.maps = {"id": f}
    b.homotopies = {"h": h}
    b.twisted = {"E": E, "F": F}
    b.morphisms = {m.name: m for m in (idE, two, zero, lift, contraction)}
    b.probes = {"P": ProbeSet([E, F], [two, lift, contraction], name="P")}
    b.meta = {"kind": "point"}
    return b


def constant_bundle(seed: int, fld: Field = QQ, params: SizeParams = None) -> InstanceBundle:
    """A random nerve with the constant homotopy on its identity map."""
    params = params or SizeParams()
    params.check()
    rng = make_rng(seed)
    V = nerve(random_cover(rng, params.sets, params.points, prefix="V"), params.truncation, name="V")
    f = SimplicialMap.identity(V)
    h = constant_homotopy(f)
    objs = [random_twisted(fld, V, rng, params, name=f"E{i}") for i in range(params.objects)]
    mors = []
    for j in range(params.morphisms):
        s, t = objs[int(rng.integers(0, len(objs)))], objs[int(rng.integers(0, len(objs)))]
        mors.append(random_morphism(s, t, (-1, 0, 1)[j % 3], rng, name=f"u{j}"))
    theta = random_morphism(objs[0], objs[0], -1, rng)
    weq = TwistedMorphism.identity(objs[0]) + morphism_diff(theta, cross_check=False)
    weq.name = "id_plus_d"
    b = InstanceBundle(fld)
    b.spaces = {"V": V}
    b.maps = {"id": f}
    b.homotopies = {"h": h}
    b.twisted = {T.name: T for T in objs}
    b.morphisms = {m.name: m for m in mors + [weq]}
    b.probes = {"P": ProbeSet(objs, mors, name="P")}
    b.meta = {"kind": "constant", "seed": int(seed)}
    return b

"""
Truncated simplicial finite sets.

A space stores, for each level n <= N, the number of n-simplices and the
face/degeneracy maps as integer index arrays.  Labels are only materialised
when asked for, which keeps large nerves cheap to build and check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConventionError, StructuralError
from .report import Report

__all__ = [
    "SimplicialSpace",
    "SimplicialMap",
    "SimplicialHomotopy",
    "CoverSpec",
    "nerve",
    "nerve_map",
    "point_space",
    "cylinder",
    "homotopy_from_cylinder",
    "validate_simplicial",
    "validate_map",
    "validate_homotopy",
    "check_face_composites",
    "check_map_face_composites",
    "front_face",
    "back_face",
]


def _idx(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int64)


class SimplicialSpace:
    """Levels U_0..U_N with faces ``faces[n][i]`` and degeneracies ``degeneracies[n][i]``."""

    def __init__(
        self,
        sizes: Sequence[int],
        faces: Sequence[Sequence],
        degeneracies: Sequence[Sequence],
        labels=None,
        name: str = "",
    ):
        self.sizes = tuple(int(s) for s in sizes)
        if not self.sizes:
            raise StructuralError("a simplicial space needs at least level 0")
        N = len(self.sizes) - 1
        if len(faces) != N + 1 or len(degeneracies) != N:
            raise StructuralError(f"expected {N + 1} face levels and {N} degeneracy levels")
        self.faces = tuple(tuple(_idx(a) for a in lvl) for lvl in faces)
        self.degeneracies = tuple(tuple(_idx(a) for a in lvl) for lvl in degeneracies)
        for n in range(N + 1):
            want = n + 1 if n else 0
            if len(self.faces[n]) != want:
                raise StructuralError(f"level {n}: {len(self.faces[n])} face maps, expected {want}")
            for i, a in enumerate(self.faces[n]):
                self._check_array(a, n, n - 1, f"face d_{i} on level {n}")
        for n in range(N):
            if len(self.degeneracies[n]) != n + 1:
                raise StructuralError(f"level {n}: {len(self.degeneracies[n])} degeneracies, expected {n + 1}")
            for i, a in enumerate(self.degeneracies[n]):
                self._check_array(a, n, n + 1, f"degeneracy s_{i} on level {n}")
        self._labels = labels
        self.name = name
        self._cache: dict = {}
        # set by constructors that know more structure
        self.vertex_tuples: Optional[list] = None
        self.cover: Optional["CoverSpec"] = None
        self.cylinder_base: Optional["SimplicialSpace"] = None

    def _check_array(self, a, src, dst, what):
        if a.shape != (self.sizes[src],):
            raise StructuralError(f"{what}: length {a.shape} != {self.sizes[src]}")
        if a.size and (a.min() < 0 or a.max() >= self.sizes[dst]):
            raise StructuralError(f"{what}: index out of range for level {dst}")

    @property
    def N(self) -> int:
        return len(self.sizes) - 1

    def size(self, n: int) -> int:
        return self.sizes[n]

    def face(self, n: int, i: int) -> np.ndarray:
        return self.faces[n][i]

    def degeneracy(self, n: int, i: int) -> np.ndarray:
        return self.degeneracies[n][i]

    def ids(self, n: int) -> list:
        key = ("ids", n)
        if key not in self._cache:
            if self._labels is None:
                out = [f"{n}:{x}" for x in range(self.sizes[n])]
            elif callable(self._labels):
                out = list(self._labels(n))
            else:
                out = list(self._labels[n])
            if len(out) != self.sizes[n]:
                raise StructuralError(f"level {n}: {len(out)} labels for {self.sizes[n]} simplices")
            self._cache[key] = out
        return self._cache[key]

    @property
    def levels(self) -> list:
        return [self.ids(n) for n in range(self.N + 1)]

    def index(self, n: int, label: str) -> int:
        key = ("index", n)
        if key not in self._cache:
            table = {s: i for i, s in enumerate(self.ids(n))}
            if len(table) != self.sizes[n]:
                raise StructuralError(f"level {n} has duplicate simplex ids")
            self._cache[key] = table
        try:
            return self._cache[key][label]
        except KeyError:
            raise StructuralError(f"unknown simplex {label!r} on level {n}") from None

    def front_face(self, k: int, p: int) -> np.ndarray:
        """rho_{k,p} = d_{p+1} o ... o d_k as an index array U_k -> U_p."""
        if k < p or p < 0 or k > self.N:
            raise StructuralError(f"front face needs 0 <= p <= k <= N, got k={k}, p={p}")
        key = ("rho", k, p)
        if key not in self._cache:
            out = np.arange(self.sizes[k])
            for j in range(k, p, -1):
                out = self.faces[j][j][out]
            self._cache[key] = out
        return self._cache[key]

    def back_face(self, k: int, p: int) -> np.ndarray:
        """tau_{k,p} = d_0 applied k-p times, U_k -> U_p."""
        if k < p or p < 0 or k > self.N:
            raise StructuralError(f"back face needs 0 <= p <= k <= N, got k={k}, p={p}")
        key = ("tau", k, p)
        if key not in self._cache:
            out = np.arange(self.sizes[k])
            for j in range(k, p, -1):
                out = self.faces[j][0][out]
            self._cache[key] = out
        return self._cache[key]

    def first_vertex(self, p: int) -> np.ndarray:
        return self.front_face(p, 0)

    def last_vertex(self, p: int) -> np.ndarray:
        return self.back_face(p, 0)

    def preimages(self, arr_key, k: int, p: int) -> dict:
        """Map y -> array of x in U_k with rho_{k,p}(x) == y (or tau, per ``arr_key``)."""
        key = ("pre", arr_key, k, p)
        if key not in self._cache:
            arr = self.front_face(k, p) if arr_key == "rho" else self.back_face(k, p)
            order = np.argsort(arr, kind="stable")
            vals, starts = np.unique(arr[order], return_index=True)
            bounds = list(starts[1:]) + [len(order)]
            self._cache[key] = {int(v): order[s:e] for v, s, e in zip(vals, starts, bounds)}
        return self._cache[key]

    def degenerate_one_simplices(self) -> np.ndarray:
        if self.N < 1:
            return np.zeros(0, dtype=np.int64)
        return self.degeneracies[0][0]

    def truncated(self, M: int) -> "SimplicialSpace":
        """The same space cut at level M (cached, so repeated calls return one object)."""
        if M == self.N:
            return self
        if not 0 <= M <= self.N:
            raise StructuralError(f"cannot truncate level-{self.N} space at {M}")
        key = ("trunc", M)
        if key not in self._cache:
            labels = self._labels
            sub = SimplicialSpace(
                self.sizes[: M + 1],
                self.faces[: M + 1],
                self.degeneracies[:M],
                labels=(lambda n: self.ids(n)),
                name=self.name,
            )
            if self.vertex_tuples is not None:
                sub.vertex_tuples = self.vertex_tuples[: M + 1]
            sub.cover = self.cover
            sub.parent = self
            self._cache[key] = sub
        return self._cache[key]

    def __repr__(self) -> str:
        return f"SimplicialSpace({self.name!r}, sizes={self.sizes})"


@dataclass(frozen=True)
class CoverSpec:
    """Finite ground set with named subsets; the nerve indexes sets in the given order."""

    points: tuple
    sets: tuple  # ((name, frozenset), ...)

    @classmethod
    def of(cls, points, sets: dict, require_cover: bool = True) -> "CoverSpec":
        points = tuple(points)
        if not sets:
            raise StructuralError("empty cover")
        pts = set(points)
        if len(pts) != len(points):
            raise StructuralError("duplicate points in cover")
        items = []
        for name, members in sets.items():
            members = frozenset(members)
            extra = members - pts
            if extra:
                raise StructuralError(f"set {name!r} contains unknown points {sorted(map(str, extra))}")
            items.append((str(name), members))
        if require_cover:
            covered = frozenset().union(*(m for _, m in items))
            if covered != pts:
                raise StructuralError(f"points {sorted(map(str, pts - covered))} are not covered")
        return cls(points, tuple(items))

    @property
    def names(self) -> list:
        return [n for n, _ in self.sets]

    def to_json(self) -> dict:
        order = {p: i for i, p in enumerate(self.points)}
        return {
            "points": list(self.points),
            "sets": {n: sorted(m, key=order.__getitem__) for n, m in self.sets},
        }

    @classmethod
    def from_json(cls, data: dict) -> "CoverSpec":
        try:
            return cls.of(data["points"], data["sets"])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"bad cover spec: {exc}") from exc


def nerve(cover: CoverSpec, N: int, name: str = "") -> SimplicialSpace:
    """Nerve truncated at N: n-simplices are index tuples with nonempty intersection."""
    if not cover.sets:
        raise StructuralError("empty cover")
    if N < 0:
        raise StructuralError("truncation must be >= 0")
    m = len(cover.sets)
    pidx = {p: i for i, p in enumerate(cover.points)}
    big = len(cover.points) > 62
    mdtype = object if big else np.uint64

    def mask(members):
        v = 0
        for p in members:
            v |= 1 << pidx[p]
        return v if big else np.uint64(v)

    set_masks = [mask(s) for _, s in cover.sets]
    nonempty = [j for j in range(m) if cover.sets[j][1]]
    code_dtype = object if m ** (N + 2) >= 2**62 else np.int64

    tuples = [np.array([[j] for j in nonempty], dtype=np.int64).reshape(-1, 1)]
    masks = [np.array([set_masks[j] for j in nonempty], dtype=mdtype)]
    for n in range(1, N + 1):
        prev_t, prev_m = tuples[-1], masks[-1]
        new_t, new_m = [], []
        for j in range(m):
            mm = prev_m & set_masks[j]
            keep = np.flatnonzero(mm != 0)
            if keep.size:
                new_t.append(np.concatenate([prev_t[keep], np.full((keep.size, 1), j)], axis=1))
                new_m.append(mm[keep])
        t = np.concatenate(new_t) if new_t else np.zeros((0, n + 1), dtype=np.int64)
        mk = np.concatenate(new_m) if new_m else np.zeros(0, dtype=mdtype)
        order = np.lexsort(t.T[::-1]) if len(t) else np.zeros(0, dtype=np.int64)
        tuples.append(t[order])
        masks.append(mk[order])

    def codes(t):
        c = np.zeros(len(t), dtype=code_dtype)
        for col in range(t.shape[1]):
            c = c * m + t[:, col].astype(code_dtype)
        return c

    level_codes = [codes(t) for t in tuples]

    def lookup(n, t):
        c = codes(t)
        pos = np.searchsorted(level_codes[n], c)
        return pos.astype(np.int64)

    faces = [[]]
    for n in range(1, N + 1):
        t = tuples[n]
        faces.append([lookup(n - 1, np.delete(t, k, axis=1)) for k in range(n + 1)])
    degens = []
    for n in range(N):
        t = tuples[n]
        degens.append([lookup(n + 1, np.insert(t, k, t[:, k], axis=1)) for k in range(n + 1)])

    names = cover.names

    def labels(n):
        return [",".join(names[j] for j in row) for row in tuples[n].tolist()]

    space = SimplicialSpace([len(t) for t in tuples], faces, degens, labels=labels, name=name)
    space.vertex_tuples = tuples
    space.cover = cover
    return space


def point_space(N: int, name: str = "point") -> SimplicialSpace:
    """Constant simplicial set: one simplex in every level."""
    one = np.zeros(1, dtype=np.int64)
    faces = [[]] + [[one] * (n + 1) for n in range(1, N + 1)]
    degens = [[one] * (n + 1) for n in range(N)]
    return SimplicialSpace([1] * (N + 1), faces, degens, labels=lambda n: ["*" * (n + 1)], name=name)


class SimplicialMap:
    """Level-wise index arrays f_n: U_n -> V_n, for n up to the source truncation."""

    def __init__(self, source: SimplicialSpace, target: SimplicialSpace, components: Sequence, name: str = ""):
        if target.N < source.N:
            raise StructuralError(f"target truncation {target.N} below source truncation {source.N}")
        if len(components) != source.N + 1:
            raise StructuralError(f"map needs {source.N + 1} components, got {len(components)}")
        self.source, self.target, self.name = source, target, name
        self.components = tuple(_idx(c) for c in components)
        for n, c in enumerate(self.components):
            if c.shape != (source.size(n),):
                raise StructuralError(f"component {n}: length {c.shape} != {source.size(n)}")
            if c.size and (c.min() < 0 or c.max() >= target.size(n)):
                raise StructuralError(f"component {n}: index outside target level {n}")
        self._cache: dict = {}

    def __getitem__(self, n: int) -> np.ndarray:
        return self.components[n]

    @classmethod
    def identity(cls, space: SimplicialSpace) -> "SimplicialMap":
        return cls(space, space, [np.arange(space.size(n)) for n in range(space.N + 1)], name="id")

    def then(self, other: "SimplicialMap") -> "SimplicialMap":
        """``other o self``: apply self first."""
        if other.source is not self.target and other.source is not getattr(self.target, "parent", None):
            if other.source.sizes[: self.source.N + 1] != self.target.sizes[: self.source.N + 1]:
                raise StructuralError("maps are not composable")
        return SimplicialMap(
            self.source, other.target, [other.components[n][self.components[n]] for n in range(self.source.N + 1)]
        )

    def restrict(self, M: int) -> "SimplicialMap":
        """Restriction to the source truncated at level M (cached)."""
        if M == self.source.N:
            return self
        if M not in self._cache:
            self._cache[M] = SimplicialMap(self.source.truncated(M), self.target, self.components[: M + 1], self.name)
        return self._cache[M]

    def __repr__(self) -> str:
        return f"SimplicialMap({self.name!r}: {self.source.name} -> {self.target.name})"


class SimplicialHomotopy:
    """Components ``h[p][i]``: U_p -> V_{p+1}, 0 <= i <= p <= max_level."""

    def __init__(self, f: SimplicialMap, g: SimplicialMap, components: Sequence[Sequence], name: str = ""):
        if f.source is not g.source or f.target is not g.target:
            raise StructuralError("homotopy endpoints must share source and target")
        self.f, self.g, self.name = f, g, name
        self.components = tuple(tuple(_idx(a) for a in lvl) for lvl in components)
        U, V = f.source, f.target
        top = min(U.N, V.N - 1)
        if len(self.components) - 1 > top or not self.components:
            raise StructuralError(f"homotopy has {len(self.components)} levels; at most {top + 1} fit")
        for p, lvl in enumerate(self.components):
            if len(lvl) != p + 1:
                raise StructuralError(f"homotopy level {p} needs {p + 1} components, got {len(lvl)}")
            for i, a in enumerate(lvl):
                if a.shape != (U.size(p),):
                    raise StructuralError(f"h_{i} on level {p}: length {a.shape} != {U.size(p)}")
                if a.size and (a.min() < 0 or a.max() >= V.size(p + 1)):
                    raise StructuralError(f"h_{i} on level {p}: index outside V_{p + 1}")
        self.orientation = "given"

    @property
    def source(self) -> SimplicialSpace:
        return self.f.source

    @property
    def target(self) -> SimplicialSpace:
        return self.f.target

    @property
    def max_level(self) -> int:
        return len(self.components) - 1

    def h(self, p: int, i: int) -> np.ndarray:
        return self.components[p][i]

    def __repr__(self) -> str:
        return f"SimplicialHomotopy({self.name!r}, levels 0..{self.max_level})"


def front_face(space: SimplicialSpace, k: int, p: int) -> np.ndarray:
    return space.front_face(k, p)


def back_face(space: SimplicialSpace, k: int, p: int) -> np.ndarray:
    return space.back_face(k, p)


# ---------------------------------------------------------------------------
# validation


def _mismatch(lhs, rhs, ids, limit=5):
    bad = np.flatnonzero(lhs != rhs)
    return [ids[int(x)] for x in bad[:limit]], int(bad.size)


def validate_simplicial(S: SimplicialSpace) -> Report:
    """Check all simplicial identities wherever both sides exist."""
    rep = Report(f"simplicial identities of {S.name or 'space'}")
    d, s, N = S.faces, S.degeneracies, S.N
    viol = {k: [] for k in ("dd", "ds<", "ds=", "ds>", "ss")}

    def record(key, ident, n, i, j, lhs, rhs):
        els, cnt = _mismatch(lhs, rhs, S.ids(n))
        if cnt:
            viol[key].append({"identity": ident, "level": n, "i": i, "j": j, "elements": els, "count": cnt})

    for n in range(2, N + 1):
        for j in range(1, n + 1):
            for i in range(j):
                record("dd", "d_i d_j = d_{j-1} d_i (i<j)", n, i, j, d[n - 1][i][d[n][j]], d[n - 1][j - 1][d[n][i]])
    for n in range(N):
        for j in range(n + 1):
            sj = s[n][j]
            for i in range(n + 2):
                lhs = d[n + 1][i][sj]
                if i < j:
                    record("ds<", "d_i s_j = s_{j-1} d_i (i<j)", n, i, j, lhs, s[n - 1][j - 1][d[n][i]])
                elif i in (j, j + 1):
                    record("ds=", "d_i s_j = id (i=j,j+1)", n, i, j, lhs, np.arange(S.size(n)))
                else:
                    record("ds>", "d_i s_j = s_j d_{i-1} (i>j+1)", n, i, j, lhs, s[n - 1][j][d[n][i - 1]])
    for n in range(N - 1):
        for j in range(n + 1):
            for i in range(j + 1):
                record("ss", "s_i s_j = s_{j+1} s_i (i<=j)", n, i, j, s[n + 1][i][s[n][j]], s[n + 1][j + 1][s[n][i]])
    names = {
        "dd": "d_i d_j = d_{j-1} d_i",
        "ds<": "d_i s_j = s_{j-1} d_i",
        "ds=": "d_i s_j = id",
        "ds>": "d_i s_j = s_j d_{i-1}",
        "ss": "s_i s_j = s_{j+1} s_i",
    }
    for key, label in names.items():
        rep.add(label, viol[key])
    return rep


def check_face_composites(S: SimplicialSpace) -> Report:
    """Front/back face composition rules for all k >= p >= r."""
    rep = Report(f"front/back face composites of {S.name or 'space'}")
    fails = {"rr": [], "tt": [], "rt": []}
    rho, tau = S.front_face, S.back_face
    for k in range(S.N + 1):
        ids = None
        for p in range(k + 1):
            for r in range(p + 1):
                checks = (
                    ("rr", rho(p, r)[rho(k, p)], rho(k, r)),
                    ("tt", tau(p, r)[tau(k, p)], tau(k, r)),
                    ("rt", rho(p, r)[tau(k, p)], tau(k + r - p, r)[rho(k, k + r - p)]),
                )
                for key, lhs, rhs in checks:
                    if not np.array_equal(lhs, rhs):
                        ids = ids or S.ids(k)
                        els, cnt = _mismatch(lhs, rhs, ids)
                        fails[key].append({"k": k, "p": p, "r": r, "elements": els, "count": cnt})
    rep.add("rho_{p,r} rho_{k,p} = rho_{k,r}", fails["rr"])
    rep.add("tau_{p,r} tau_{k,p} = tau_{k,r}", fails["tt"])
    rep.add("rho_{p,r} tau_{k,p} = tau_{k+r-p,r} rho_{k,k+r-p}", fails["rt"])
    return rep


def validate_map(f: SimplicialMap) -> Report:
    rep = Report(f"simplicial map {f.name or ''}".strip())
    U, V = f.source, f.target
    fd, fs = [], []
    for n in range(1, U.N + 1):
        for i in range(n + 1):
            lhs = f[n - 1][U.face(n, i)]
            rhs = V.face(n, i)[f[n]]
            els, cnt = _mismatch(lhs, rhs, U.ids(n))
            if cnt:
                fd.append({"level": n, "i": i, "elements": els, "count": cnt})
    for n in range(U.N):
        for i in range(n + 1):
            lhs = f[n + 1][U.degeneracy(n, i)]
            rhs = V.degeneracy(n, i)[f[n]]
            els, cnt = _mismatch(lhs, rhs, U.ids(n))
            if cnt:
                fs.append({"level": n, "i": i, "elements": els, "count": cnt})
    rep.add("f d_i = d_i f", fd)
    rep.add("f s_i = s_i f", fs)
    rep.extend(check_map_face_composites(f))
    return rep


def check_map_face_composites(f: SimplicialMap) -> Report:
    rep = Report("map versus front/back faces")
    U, V = f.source, f.target
    fr, ft = [], []
    for k in range(U.N + 1):
        for p in range(k + 1):
            if not np.array_equal(f[p][U.front_face(k, p)], V.front_face(k, p)[f[k]]):
                fr.append({"k": k, "p": p})
            if not np.array_equal(f[p][U.back_face(k, p)], V.back_face(k, p)[f[k]]):
                ft.append({"k": k, "p": p})
    rep.add("f rho_{k,p} = rho_{k,p} f", fr)
    rep.add("f tau_{k,p} = tau_{k,p} f", ft)
    return rep


def validate_homotopy(h: SimplicialHomotopy) -> Report:
    """Every defining clause of a combinatorial homotopy plus the derived face identities."""
    rep = Report(f"simplicial homotopy {h.name or ''}".strip())
    U, V, M = h.source, h.target, h.max_level
    f, g = h.f, h.g
    H = h.components

    def cmp(lhs, rhs, n, **where):
        els, cnt = _mismatch(lhs, rhs, U.ids(n))
        return [dict(where, level=n, elements=els, count=cnt)] if cnt else []

    c1 = []
    for p in range(M + 1):
        c1 += cmp(V.face(p + 1, 0)[H[p][0]], f[p], p, clause="d_0 h_0 = f")
        c1 += cmp(V.face(p + 1, p + 1)[H[p][p]], g[p], p, clause="d_{p+1} h_p = g")
    rep.add("d_0 h_0 = f_p and d_{p+1} h_p = g_p", c1)

    c2 = []
    for p in range(M + 1):
        for j in range(p + 1):
            for i in range(p + 2):
                lhs = V.face(p + 1, i)[H[p][j]]
                if i < j:
                    c2 += cmp(lhs, H[p - 1][j - 1][U.face(p, i)], p, clause="d_i h_j = h_{j-1} d_i", i=i, j=j)
                elif i == j and i != 0:
                    c2 += cmp(lhs, V.face(p + 1, i)[H[p][i - 1]], p, clause="d_i h_i = d_i h_{i-1}", i=i, j=j)
                elif i > j + 1:
                    c2 += cmp(lhs, H[p - 1][j][U.face(p, i - 1)], p, clause="d_i h_j = h_j d_{i-1}", i=i, j=j)
    rep.add("face clauses d_i h_j", c2)

    c3 = []
    for p in range(M + 1):
        if p + 1 >= V.N:
            break
        for j in range(p + 1):
            for i in range(p + 2):
                lhs = V.degeneracy(p + 1, i)[H[p][j]]
                if i <= j:
                    if p + 1 > M:
                        continue
                    c3 += cmp(lhs, H[p + 1][j + 1][U.degeneracy(p, i)], p, clause="s_i h_j = h_{j+1} s_i", i=i, j=j)
                else:
                    if p + 1 > M:
                        continue
                    c3 += cmp(lhs, H[p + 1][j][U.degeneracy(p, i - 1)], p, clause="s_i h_j = h_j s_{i-1}", i=i, j=j)
    rep.add("degeneracy clauses s_i h_j", c3)

    hd = []
    for p in range(1, M + 1):
        for j in range(p + 1):
            for i in range(p):
                lhs = H[p - 1][i][U.face(p, j)]
                if i < j:
                    hd += cmp(lhs, V.face(p + 1, j + 1)[H[p][i]], p, clause="h_i d_j = d_{j+1} h_i", i=i, j=j)
                else:
                    hd += cmp(lhs, V.face(p + 1, j)[H[p][i + 1]], p, clause="h_i d_j = d_j h_{i+1}", i=i, j=j)
    rep.add("h_i d_j exchange", hd)

    ht, hr, ft, gr = [], [], [], []
    for k in range(M + 1):
        for p in range(k + 1):
            for i in range(p + 1):
                ht += cmp(H[p][i][U.back_face(k, p)], V.back_face(k + 1, p + 1)[H[k][i + k - p]], k, p=p, i=i)
                hr += cmp(H[p][i][U.front_face(k, p)], V.front_face(k + 1, p + 1)[H[k][i]], k, p=p, i=i)
            for i in range(k - p + 1):
                ft += cmp(f[p][U.back_face(k, p)], V.back_face(k + 1, p)[H[k][i]], k, p=p, i=i)
            for i in range(p, k + 1):
                gr += cmp(g[p][U.front_face(k, p)], V.front_face(k + 1, p)[H[k][i]], k, p=p, i=i)
    rep.add("h_i tau_{k,p} = tau_{k+1,p+1} h_{i+k-p}", ht)
    rep.add("h_i rho_{k,p} = rho_{k+1,p+1} h_i", hr)
    rep.add("f tau_{k,p} = tau_{k+1,p} h_i", ft)
    rep.add("g rho_{k,p} = rho_{k+1,p} h_i", gr)
    return rep


# ---------------------------------------------------------------------------
# constructions


def nerve_map(source: SimplicialSpace, target: SimplicialSpace, vertex_fn: Callable, name: str = "") -> SimplicialMap:
    """Map of nerves induced by ``vertex_fn(level, tuple_array) -> tuple_array`` on index tuples."""
    if source.vertex_tuples is None or target.vertex_tuples is None:
        raise StructuralError("nerve_map needs nerves on both sides")
    comps = []
    m = len(target.cover.sets)
    for n in range(source.N + 1):
        t = np.asarray(vertex_fn(n, source.vertex_tuples[n]), dtype=np.int64)
        tt = target.vertex_tuples[n]
        code_t = np.zeros(len(tt), dtype=object)
        code_s = np.zeros(len(t), dtype=object)
        for col in range(n + 1):
            code_t = code_t * m + tt[:, col].astype(object)
            code_s = code_s * m + t[:, col].astype(object)
        table = {c: i for i, c in enumerate(code_t.tolist())}
        try:
            comps.append(np.array([table[c] for c in code_s.tolist()], dtype=np.int64))
        except KeyError:
            raise StructuralError(f"{name or 'map'}: image tuple on level {n} has empty intersection") from None
    return SimplicialMap(source, target, comps, name=name)


def cylinder(S: SimplicialSpace):
    """S x Delta^1 with the two end inclusions (eps0 at constant 0, eps1 at constant 1).

    A q-simplex of Delta^1 is recorded by its number j of zeros (the step
    0^j 1^{q+1-j}); index of (x, j) on level n is ``x * (n + 2) + j``.
    """
    N = S.N
    sizes = [S.size(n) * (n + 2) for n in range(N + 1)]
    faces, degens = [[]], []
    for n in range(1, N + 1):
        x = np.repeat(np.arange(S.size(n)), n + 2)
        j = np.tile(np.arange(n + 2), S.size(n))
        lvl = []
        for i in range(n + 1):
            jj = np.where(i < j, j - 1, j)
            lvl.append(S.face(n, i)[x] * (n + 1) + jj)
        faces.append(lvl)
    for n in range(N):
        x = np.repeat(np.arange(S.size(n)), n + 2)
        j = np.tile(np.arange(n + 2), S.size(n))
        lvl = []
        for i in range(n + 1):
            jj = np.where(i < j, j + 1, j)
            lvl.append(S.degeneracy(n, i)[x] * (n + 3) + jj)
        degens.append(lvl)

    def labels(n):
        return [f"{xid}@{'0' * j}{'1' * (n + 1 - j)}" for xid in S.ids(n) for j in range(n + 2)]

    C = SimplicialSpace(sizes, faces, degens, labels=labels, name=f"{S.name}xI")
    C.cylinder_base = S
    eps0 = SimplicialMap(S, C, [np.arange(S.size(n)) * (n + 2) + (n + 1) for n in range(N + 1)], name="eps0")
    eps1 = SimplicialMap(S, C, [np.arange(S.size(n)) * (n + 2) for n in range(N + 1)], name="eps1")
    return C, eps0, eps1


def _cylinder_ends(C: SimplicialSpace):
    S = C.cylinder_base
    eps0 = SimplicialMap(S, C, [np.arange(S.size(n)) * (n + 2) + (n + 1) for n in range(S.N + 1)], name="eps0")
    eps1 = SimplicialMap(S, C, [np.arange(S.size(n)) * (n + 2) for n in range(S.N + 1)], name="eps1")
    return eps0, eps1


def homotopy_from_cylinder(H: SimplicialMap, name: str = "h") -> SimplicialHomotopy:
    """Convert a cylinder map into combinatorial components h_i(x) = H(s_i x, step with i+1 zeros).

    The end that satisfies ``d_0 h_0 = f`` is not fixed in advance: the
    orientation with f = H eps0 is tried first, then f = H eps1.  The choice
    is stored in ``.orientation`` and the validation report in ``.report``.
    """
    C = H.source
    S = C.cylinder_base
    if S is None:
        raise StructuralError("homotopy_from_cylinder needs a map out of a cylinder space")
    V = H.target
    M = min(S.N, V.N) - 1
    if M < 0:
        raise StructuralError("cylinder map needs truncation >= 1")
    comps = []
    for p in range(M + 1):
        lvl = []
        for i in range(p + 1):
            lvl.append(H[p + 1][S.degeneracy(p, i) * (p + 3) + (i + 1)])
        comps.append(lvl)
    eps0, eps1 = _cylinder_ends(C)
    f0, f1 = eps0.then(H), eps1.then(H)
    f0.name, f1.name = "H.eps0", "H.eps1"
    tried = []
    for orientation, f, g in (("natural", f0, f1), ("mirrored", f1, f0)):
        h = SimplicialHomotopy(f, g, comps, name=name)
        rep = validate_homotopy(h)
        if rep.ok:
            h.orientation = orientation
            rep.meta["orientation"] = orientation
            h.report = rep
            return h
        tried.append(orientation)
    raise ConventionError(f"no orientation ({', '.join(tried)}) satisfies the homotopy clauses")

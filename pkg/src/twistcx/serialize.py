"""
JSON bundles.  Every scalar is a string in the ring's canonical format and
every object refers to others by name, so files diff cleanly.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .ainf import ProbeSet
from .cech import CechElement, GradedSheaf
from .errors import StructuralError
from .exact_linalg import Field, GradedModule, parse_ring
from .generate import InstanceBundle
from .simplicial import CoverSpec, SimplicialHomotopy, SimplicialMap, SimplicialSpace, nerve
from .twisted import TwistedComplex, TwistedMorphism

__all__ = [
    "FORMAT",
    "BundleError",
    "element_to_json",
    "element_from_json",
    "bundle_to_json",
    "bundle_from_json",
    "load_bundle",
    "dump_bundle",
    "dumps",
]

FORMAT = "twistcx-bundle/1"


class BundleError(StructuralError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@contextmanager
def _at(path: str):
    try:
        yield
    except BundleError:
        raise
    except (KeyError, TypeError, ValueError, IndexError, StructuralError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise BundleError(path, msg) from exc


def dumps(data) -> str:
    return json.dumps(data, indent=1, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# elements


def _matrix_to_json(fld: Field, m: np.ndarray) -> list:
    return [[fld.to_str(v) for v in row] for row in m.tolist()]


def element_to_json(u: CechElement) -> list:
    """[{p, q, entries: [{simplex, degree, matrix}]}] with one entry per nonzero degree block."""
    fld = u.field
    S = u.space
    out = []
    for (p, q) in sorted(u.blocks):
        entries = []
        comp = u.blocks[(p, q)]
        for x in sorted(comp):
            m = comp[x]
            src = u.source[int(S.last_vertex(p)[x])]
            tgt = u.target[int(S.first_vertex(p)[x])]
            for n in src.degrees:
                if not tgt.rank(n + q):
                    continue
                blk = m[tgt.span(n + q), src.span(n)]
                if not fld.is_zero(blk):
                    entries.append({"simplex": S.ids(p)[x], "degree": n, "matrix": _matrix_to_json(fld, blk)})
        out.append({"p": p, "q": q, "entries": entries})
    return out


def element_from_json(data, source: GradedSheaf, target: GradedSheaf, path: str = "element") -> CechElement:
    fld = source.field
    S = source.base
    blocks: dict = {}
    probe = CechElement.zero(source, target)
    with _at(path):
        if not isinstance(data, list):
            raise StructuralError("expected a list of pieces")
    for i, piece in enumerate(data):
        ppath = f"{path}[{i}]"
        with _at(ppath):
            p, q = int(piece["p"]), int(piece["q"])
            if not 0 <= p <= S.N:
                raise StructuralError(f"level {p} outside 0..{S.N}")
            comp = blocks.setdefault((p, q), {})
            entries = piece["entries"]
        for j, ent in enumerate(entries):
            with _at(f"{ppath}.entries[{j}]"):
                x = S.index(p, ent["simplex"])
                n = int(ent["degree"])
                src = source[int(S.last_vertex(p)[x])]
                tgt = target[int(S.first_vertex(p)[x])]
                rows = ent["matrix"]
                shape = (tgt.rank(n + q), src.rank(n))
                blk = fld.zeros(*shape)
                if len(rows) != shape[0] or any(len(r) != shape[1] for r in rows):
                    raise StructuralError(f"matrix must be {shape[0]}x{shape[1]} for degree {n} -> {n + q}")
                for a, row in enumerate(rows):
                    for b, v in enumerate(row):
                        blk[a, b] = fld.from_str(v)
                if x not in comp:
                    comp[x] = fld.zeros(*probe.shape_at(p, x))
                comp[x][tgt.span(n + q), src.span(n)] = blk
    with _at(path):
        return CechElement(source, target, blocks)


# ---------------------------------------------------------------------------
# spaces and maps


def _space_to_json(S: SimplicialSpace) -> dict:
    out = {
        "N": S.N,
        "levels": [list(S.ids(n)) for n in range(S.N + 1)],
        "faces": [[a.tolist() for a in S.faces[n]] for n in range(S.N + 1)],
        "degeneracies": [[a.tolist() for a in S.degeneracies[n]] for n in range(S.N)],
    }
    if S.cover is not None:
        out["cover"] = S.cover.to_json()
    return out


def _space_from_json(name: str, data: dict) -> SimplicialSpace:
    path = f"spaces.{name}"
    with _at(path):
        N = int(data["N"])
        if "levels" not in data:
            return nerve(CoverSpec.from_json(data["cover"]), N, name=name)
        levels = data["levels"]
        if len(levels) != N + 1:
            raise StructuralError(f"{len(levels)} levels for truncation {N}")
        S = SimplicialSpace(
            [len(lv) for lv in levels], data["faces"], data["degeneracies"], labels=levels, name=name
        )
        if "cover" in data:
            S.cover = CoverSpec.from_json(data["cover"])
        for n in range(N + 1):
            if levels[n]:
                S.index(n, levels[n][0])  # rejects duplicate ids early
        return S


def _map_to_json(f: SimplicialMap, names: dict) -> dict:
    return {
        "source": names[id(f.source)],
        "target": names[id(f.target)],
        "components": [c.tolist() for c in f.components],
    }


def _homotopy_to_json(h: SimplicialHomotopy, map_names: dict) -> dict:
    return {
        "f": map_names[id(h.f)],
        "g": map_names[id(h.g)],
        "components": [[a.tolist() for a in lvl] for lvl in h.components],
        "orientation": h.orientation,
    }


def _sheaf_to_json(E: GradedSheaf) -> list:
    return [m.to_json() for m in E.modules]


def _sheaf_from_json(fld, S, data, path) -> GradedSheaf:
    with _at(path):
        mods = [GradedModule.of({int(k): int(v) for k, v in d.items()}) for d in data]
        return GradedSheaf(fld, S, mods)


# ---------------------------------------------------------------------------
# bundles


def bundle_to_json(b: InstanceBundle) -> dict:
    space_names = {id(S): n for n, S in b.spaces.items()}
    map_names = {id(f): n for n, f in b.maps.items()}
    out = {
        "format": FORMAT,
        "ring": b.field.name,
        "spaces": {n: _space_to_json(S) for n, S in b.spaces.items()},
        "maps": {n: _map_to_json(f, space_names) for n, f in b.maps.items()},
        "homotopies": {n: _homotopy_to_json(h, map_names) for n, h in b.homotopies.items()},
        "twisted": {},
        "morphisms": {},
        "probes": {},
    }
    tw_names = {}
    for n, T in b.twisted.items():
        tw_names[id(T)] = n
        out["twisted"][n] = {
            "space": space_names[id(T.space)],
            "N": T.space.N,
            "amplitude": T.sheaf.amplitude(),
            "sheaf": _sheaf_to_json(T.sheaf),
            "a": element_to_json(T.a),
        }
    for n, u in b.morphisms.items():
        out["morphisms"][n] = {
            "source": tw_names[id(u.source)],
            "target": tw_names[id(u.target)],
            "degree": u.degree,
            "theta": element_to_json(u.theta),
        }
    mor_names = {id(u): n for n, u in b.morphisms.items()}
    for n, P in b.probes.items():
        out["probes"][n] = {
            "objects": [tw_names[id(X)] for X in P.objects],
            "morphisms": [mor_names[id(u)] for u in P.morphisms],
        }
    if b.meta:
        out["meta"] = b.meta
    return out


def _ref(table: dict, name, path: str, kind: str):
    if name not in table:
        raise BundleError(path, f"unknown {kind} {name!r}")
    return table[name]


def bundle_from_json(data: dict) -> InstanceBundle:
    with _at("<root>"):
        if not isinstance(data, dict):
            raise StructuralError("bundle must be a JSON object")
        fmt = data.get("format")
        if fmt != FORMAT:
            raise StructuralError(f"unsupported format {fmt!r}; expected {FORMAT!r}")
    with _at("ring"):
        fld = parse_ring(data["ring"])
    b = InstanceBundle(fld)
    for n, sd in data.get("spaces", {}).items():
        b.spaces[n] = _space_from_json(n, sd)
    for n, md in data.get("maps", {}).items():
        path = f"maps.{n}"
        with _at(path):
            src = _ref(b.spaces, md["source"], path + ".source", "space")
            tgt = _ref(b.spaces, md["target"], path + ".target", "space")
            b.maps[n] = SimplicialMap(src, tgt, md["components"], name=n)
    for n, hd in data.get("homotopies", {}).items():
        path = f"homotopies.{n}"
        with _at(path):
            f = _ref(b.maps, hd["f"], path + ".f", "map")
            g = _ref(b.maps, hd["g"], path + ".g", "map")
            h = SimplicialHomotopy(f, g, hd["components"], name=n)
            h.orientation = str(hd.get("orientation", "given"))
            b.homotopies[n] = h
    for n, td in data.get("twisted", {}).items():
        path = f"twisted.{n}"
        with _at(path):
            S = _ref(b.spaces, td["space"], path + ".space", "space")
            if "N" in td and int(td["N"]) != S.N:
                raise StructuralError(f"declared truncation {td['N']} but space has {S.N}")
        E = _sheaf_from_json(fld, S, td.get("sheaf"), path + ".sheaf")
        E.name = n
        a = element_from_json(td.get("a", []), E, E, path + ".a")
        with _at(path):
            b.twisted[n] = TwistedComplex(E, a, name=n)
    for n, md in data.get("morphisms", {}).items():
        path = f"morphisms.{n}"
        with _at(path):
            s = _ref(b.twisted, md["source"], path + ".source", "twisted complex")
            t = _ref(b.twisted, md["target"], path + ".target", "twisted complex")
            deg = int(md["degree"])
        th = element_from_json(md.get("theta", []), s.sheaf, t.sheaf, path + ".theta")
        with _at(path):
            b.morphisms[n] = TwistedMorphism(s, t, th, deg, name=n)
    for n, pd in data.get("probes", {}).items():
        path = f"probes.{n}"
        with _at(path):
            objs = [_ref(b.twisted, o, path + ".objects", "twisted complex") for o in pd.get("objects", [])]
            mors = [_ref(b.morphisms, m, path + ".morphisms", "morphism") for m in pd.get("morphisms", [])]
            b.probes[n] = ProbeSet(objs, mors, name=n)
    b.meta = dict(data.get("meta", {}))
    return b


def load_bundle(path) -> InstanceBundle:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return bundle_from_json(data)


def dump_bundle(b: InstanceBundle, path=None) -> str:
    text = dumps(bundle_to_json(b))
    if path is not None:
        Path(path).write_text(text)
    return text

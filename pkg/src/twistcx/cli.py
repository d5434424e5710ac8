"""Command-line front end.

Exit codes: 0 every check passed, 1 a mathematical check failed, 2 the input
was malformed (parse error, unresolved name, truncation too short).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .ainf import build_phi, build_phi0, build_phi1, lift_witness, quasi_inverse_exists, verify_phi, verify_quasi_inverse
from .errors import ConventionError, InvariantViolation, StructuralError, TruncationError
from .exact_linalg import parse_ring
from .fixtures import point_bundle
from .generate import SIZE_LIMITS, InstanceBundle, SizeParams, generate_bundle
from .report import Report
from .serialize import bundle_from_json, bundle_to_json, dumps, element_to_json, load_bundle
from .simplicial import check_face_composites, validate_homotopy, validate_map, validate_simplicial
from .twisted import TwistedMorphism, ho_invert, is_weak_equivalence, morphism_diff, validate_twisted

EXIT_OK, EXIT_FAIL, EXIT_STRUCTURAL = 0, 1, 2


class _Structural(Exception):
    """Carries a report whose failure is structural rather than mathematical."""

    def __init__(self, report: Report):
        super().__init__(report.title)
        self.report = report


# ---------------------------------------------------------------------------
# commands as library functions


def _guarded(rep: Report, name: str, fn, prefix: str = "") -> None:
    """Run a validator and merge its report; exceptions become located failures."""
    try:
        rep.extend(fn(), prefix=prefix)
    except (StructuralError, InvariantViolation, ConventionError, IndexError) as exc:
        rep.add(prefix + name, [{"error": f"{type(exc).__name__}: {exc}"}])


def validate_bundle(b: InstanceBundle) -> Report:
    rep = Report("bundle validation")
    for n, S in b.spaces.items():
        _guarded(rep, "simplicial identities", lambda S=S: validate_simplicial(S), f"space {n}: ")
        _guarded(rep, "front/back face composites", lambda S=S: check_face_composites(S), f"space {n}: ")
    for n, f in b.maps.items():
        _guarded(rep, "map identities", lambda f=f: validate_map(f), f"map {n}: ")
    for n, h in b.homotopies.items():
        _guarded(rep, "homotopy identities", lambda h=h: validate_homotopy(h), f"homotopy {n}: ")
    for n, T in b.twisted.items():
        _guarded(rep, "twisted complex", lambda T=T: validate_twisted(T), f"twisted {n}: ")
    for n, u in b.morphisms.items():
        _guarded(rep, "d^2 = 0", lambda u=u: _morphism_d2(u), f"morphism {n}: ")
    return rep


def _morphism_d2(u: TwistedMorphism) -> Report:
    rep = Report("morphism")
    dd = morphism_diff(morphism_diff(u))
    rep.add("d^2 = 0", dd.theta.located_entries())
    return rep


def _pick(table: dict, name, kind: str):
    if name is None:
        if len(table) != 1:
            raise StructuralError(f"bundle has {len(table)} {kind}s; name one of {sorted(table)}")
        return next(iter(table.values()))
    if name not in table:
        raise StructuralError(f"no {kind} named {name!r}; have {sorted(table)}")
    return table[name]


def phi_report(b: InstanceBundle, homotopy=None, probe=None, max_level: int = 3):
    """Verify the transformation induced by a homotopy; returns (report, components as JSON)."""
    h = _pick(b.homotopies, homotopy, "homotopy")
    P = _pick(b.probes, probe, "probe")
    rep = verify_phi(h, P, max_level=max_level)
    rep.title = f"transformation induced by {h.name}"
    Phi = build_phi(h)
    found, certs = quasi_inverse_exists(Phi, P)
    missing = [{"object": k} for k, c in sorted(certs.items()) if c is None]
    rep.add("each Phi_0(E) is invertible in the homotopy category", missing)
    if found:
        W = lift_witness(Phi, P, certs)
        qi = verify_quasi_inverse(Phi, W, P, max_level=min(2, max_level), required_levels=0)
        rep.extend(qi, prefix="quasi-inverse witness: ")
    rep.meta.update({"homotopy": h.name, "probe": P.name, "max_level": max_level})
    comps = {
        "format": "twistcx-phi/1",
        "ring": b.field.name,
        "homotopy": h.name,
        "probe": P.name,
        "Phi0": {},
        "Phi1": {},
    }
    for X in P.objects:
        comps["Phi0"][X.name] = {"degree": 0, "theta": element_to_json(build_phi0(h, X).theta)}
    for u in P.morphisms:
        p1 = build_phi1(h, u)
        comps["Phi1"][u.name] = {"degree": p1.degree, "theta": element_to_json(p1.theta)}
    return rep, comps


def ho_invert_report(b: InstanceBundle, morphism: str):
    """Run the homotopy-inverse solver on one morphism; returns (report, witness JSON or None)."""
    phi = _pick(b.morphisms, morphism, "morphism")
    rep = Report(f"homotopy inverse of {phi.name}")
    pre = []
    if phi.degree != 0:
        pre.append({"degree": phi.degree})
    elif not morphism_diff(phi, cross_check=False).is_zero():
        pre.append({"closed": False})
    rep.add("morphism is closed of degree 0", pre)
    if pre:
        raise _Structural(rep)
    try:
        res = ho_invert(phi)
    except TruncationError as exc:
        rep.add("truncation covers the inversion system", [{"error": str(exc)}])
        raise _Structural(rep) from exc
    rep.add("truncation covers the inversion system")
    weq = is_weak_equivalence(phi)
    rep.meta["weak_equivalence"] = weq
    if res is None:
        rep.add("homotopy inverse exists", [{"morphism": phi.name, "result": "infeasible"}])
        rep.add("agrees with the weak-equivalence test", [] if not weq else [{"weak_equivalence": True}])
        return rep, None
    rep.add("homotopy inverse exists")
    E, F = phi.source, phi.target
    res_d = morphism_diff(res.psi, cross_check=False)
    left = res.psi * phi - TwistedMorphism.identity(E) - morphism_diff(res.eta, cross_check=False)
    right = phi * res.psi - TwistedMorphism.identity(F) - morphism_diff(res.omega, cross_check=False)
    rep.add("d psi = 0", res_d.theta.located_entries())
    rep.add("psi.phi - id = d eta", left.theta.located_entries())
    rep.add("phi.psi - id = d omega", right.theta.located_entries())
    rep.add("agrees with the weak-equivalence test", [] if weq else [{"weak_equivalence": False}])
    rep.meta.update({"unknowns": res.unknowns, "equations": res.equations})
    witness = {
        "format": "twistcx-witness/1",
        "ring": b.field.name,
        "morphism": phi.name,
        "psi": {"degree": 0, "theta": element_to_json(res.psi.theta)},
        "eta": {"degree": -1, "theta": element_to_json(res.eta.theta)},
        "omega": {"degree": -1, "theta": element_to_json(res.omega.theta)},
    }
    return rep, witness


def generate_checked(seed: int, params: SizeParams, ring: str = "QQ") -> str:
    """Generate, round-trip through JSON and validate; never returns an invalid bundle."""
    b = generate_bundle(seed, params, parse_ring(ring))
    text = dumps(bundle_to_json(b))
    reloaded = bundle_from_json(json.loads(text))
    if dumps(bundle_to_json(reloaded)) != text:
        raise ConventionError("generated bundle does not round-trip")
    rep = validate_bundle(reloaded)
    if not rep.ok:
        raise ConventionError(f"generated bundle fails validation: {[c.name for c in rep.failed()]}")
    return text


def selftest() -> Report:
    rep = Report("selftest")
    for ring in ("QQ", "GF(101)"):
        fld = parse_ring(ring)
        b = point_bundle(fld)
        rep.extend(validate_bundle(b), prefix=f"point {ring}: ")
        r, _ = phi_report(b)
        rep.extend(r, prefix=f"point {ring} phi: ")
        r, w = ho_invert_report(b, "id_E")
        rep.extend(r, prefix=f"point {ring} invert id: ")
        r, w = ho_invert_report(b, "zero")
        rep.add(f"point {ring}: zero map has no homotopy inverse", [] if w is None else [{"witness": "found"}])
        g = bundle_from_json(json.loads(generate_checked(0, SizeParams(), ring)))
        r, _ = phi_report(g)
        rep.extend(r, prefix=f"generated {ring} phi: ")
    return rep


# ---------------------------------------------------------------------------
# argument handling


def _meta(rep: Report, args, bundle_text: str = None) -> None:
    rep.meta["tool"] = f"twistcx {__version__}"
    if getattr(args, "seed", None) is not None:
        rep.meta["seed"] = args.seed
    if bundle_text is not None:
        rep.meta["bundle_sha256"] = hashlib.sha256(bundle_text.encode()).hexdigest()


def _emit(rep: Report, args, t0: float) -> int:
    if args.timing:
        rep.meta["seconds"] = round(time.perf_counter() - t0, 3)
    sys.stdout.write(rep.to_json() if args.format == "json" else rep.to_text())
    return EXIT_OK if rep.ok else EXIT_FAIL


def _load(args):
    if not args.bundle:
        raise StructuralError("--bundle is required")
    text = Path(args.bundle).read_text()
    return load_bundle(args.bundle), text


def _write(path, data) -> None:
    Path(path).write_text(dumps(data))


def _run(args) -> int:
    t0 = time.perf_counter()
    cmd = args.command
    if cmd == "validate":
        b, text = _load(args)
        rep = validate_bundle(b)
        _meta(rep, args, text)
        return _emit(rep, args, t0)
    if cmd == "phi":
        b, text = _load(args)
        rep, comps = phi_report(b, args.homotopy, args.probe, args.max_level)
        _meta(rep, args, text)
        if args.out:
            _write(args.out, comps)
        return _emit(rep, args, t0)
    if cmd == "ho-invert":
        b, text = _load(args)
        try:
            rep, witness = ho_invert_report(b, args.morphism)
        except _Structural as exc:
            _meta(exc.report, args, text)
            _emit(exc.report, args, t0)
            return EXIT_STRUCTURAL
        _meta(rep, args, text)
        if args.out and witness is not None:
            _write(args.out, witness)
        return _emit(rep, args, t0)
    if cmd == "generate":
        params = SizeParams(
            sets=args.sets, points=args.points, truncation=args.truncation, rank=args.rank,
            amplitude=args.amplitude, objects=args.objects, morphisms=args.morphisms,
        )
        text = generate_checked(args.seed, params, args.ring)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if cmd == "selftest":
        rep = selftest()
        _meta(rep, args)
        return _emit(rep, args, t0)
    raise StructuralError(f"unknown command {cmd!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json", help="report format")
    common.add_argument("--timing", action="store_true", help="add wall-clock seconds to the report")
    bundle = argparse.ArgumentParser(add_help=False)
    bundle.add_argument("--bundle", help="path to a JSON bundle")

    p = argparse.ArgumentParser(prog="twistcx", description="Exact verification of twisted complexes over simplicial spaces.")
    p.add_argument("--version", action="version", version=f"twistcx {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common, bundle], help="check every object in a bundle")

    ph = sub.add_parser("phi", parents=[common, bundle], help="verify the transformation induced by a homotopy")
    ph.add_argument("--homotopy", help="homotopy name (default: the only one)")
    ph.add_argument("--probe", help="probe set name (default: the only one)")
    ph.add_argument("--max-level", type=int, default=3, choices=range(0, 4), metavar="{0..3}")
    ph.add_argument("--out", help="write Phi components here")

    hi = sub.add_parser("ho-invert", parents=[common, bundle], help="invert a closed degree-0 morphism up to homotopy")
    hi.add_argument("--morphism", required=True)
    hi.add_argument("--out", help="write the witness (psi, eta, omega) here")

    g = sub.add_parser("generate", parents=[common], help="write a random self-checked bundle")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--ring", default="QQ", help="QQ or GF(p)")
    g.add_argument("--sets", type=int, default=3, help=f"target cover sets (<= {SIZE_LIMITS['sets']})")
    g.add_argument("--points", type=int, default=5)
    g.add_argument("--truncation", type=int, default=3, help=f"N (<= {SIZE_LIMITS['truncation']})")
    g.add_argument("--rank", type=int, default=2, help=f"module rank (<= {SIZE_LIMITS['rank']})")
    g.add_argument("--amplitude", type=int, default=1, help=f"(<= {SIZE_LIMITS['amplitude']})")
    g.add_argument("--objects", type=int, default=2)
    g.add_argument("--morphisms", type=int, default=3)
    g.add_argument("--out", help="bundle path (default: stdout)")

    sub.add_parser("selftest", parents=[common], help="run the built-in fixtures")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (StructuralError, InvariantViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except ConventionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

"""Twisted complexes over a single point.

Over a point every simplex is degenerate, the nerve is the point itself and
the only homotopy is the constant one.  This makes the induced transformation
easy to read off by hand: Phi_0 is the identity, and Phi_1 just shifts the
(1, *) part of a morphism down one Cech level with a sign.
"""

# %%
from twistcx.ainf import build_phi0, build_phi1, verify_phi
from twistcx.exact_linalg import QQ
from twistcx.fixtures import point_bundle
from twistcx.serialize import element_to_json
from twistcx.twisted import ho_invert, is_weak_equivalence, validate_twisted

b = point_bundle(QQ)
h, P = b.homotopies["h"], b.probes["P"]
for name, T in b.twisted.items():
    print(name, "valid:", validate_twisted(T).ok, "pieces of a:", T.a.pieces())

# %% Phi_0 is the identity on each pulled-back complex
for X in P.objects:
    p0 = build_phi0(h, X)
    print(f"Phi_0({X.name}) =", element_to_json(p0.theta))

# %% Phi_1 of the morphism with a (1, -1) piece
lift = b.morphisms["lift"]
print("lift       :", element_to_json(lift.theta))
print("Phi_1(lift):", element_to_json(build_phi1(h, lift).theta))

# %% all closure identities through level 3
rep = verify_phi(h, P, max_level=3)
print(rep.to_text())

# %% homotopy inverses: 'twice' is invertible, 'zero' on E is not
for name in ("twice", "zero"):
    u = b.morphisms[name]
    res = ho_invert(u)
    print(name, "weak equivalence:", is_weak_equivalence(u), "| inverse found:", res is not None)
    if res is not None:
        print("   psi =", element_to_json(res.psi.theta))

"""The transformation induced by a simplicial homotopy, on a random instance.

A homotopy h between nerve maps f, g: U -> V is extracted from a map out of
the cylinder U x [1].  Pulling twisted complexes back along f and g gives two
dg-functors; Phi_0 alone compares them only up to a defect, and Phi_1 is the
correction that makes the whole family closed.
"""

# %%
import numpy as np

from twistcx.ainf import build_phi0, build_phi1, naturality_defect, phi_data, verify_phi
from twistcx.exact_linalg import GF
from twistcx.generate import SizeParams, generate_bundle
from twistcx.simplicial import validate_homotopy

b = generate_bundle(5, SizeParams(sets=4, points=5), fld=GF(101))
U, V, h = b.spaces["U"], b.spaces["V"], b.homotopies["h"]
print("U levels:", [U.size(n) for n in range(U.N + 1)], " V levels:", [V.size(n) for n in range(V.N + 1)])
print("homotopy orientation:", h.orientation, "| valid:", validate_homotopy(h).ok)
print("window (levels where h lives):", phi_data(h).window)

# %% the defect g*u Phi_0 - (+-) Phi_0 f*u is usually nonzero
P = b.probes["P"]
for u in P.morphisms:
    d = naturality_defect(h, u)
    print(f"{u.name:10s} degree {u.degree:2d}  defect pieces: {d.theta.pieces()}")

# %% ...but with Phi_1 the family is closed
rep = verify_phi(h, P, max_level=3)
for c in rep.checks:
    print(f"[{c.status}] {c.name}")

# %% sizes of the components
for X in P.objects:
    p0 = build_phi0(h, X)
    print(X.name, "Phi_0 pieces:", p0.theta.pieces())


def nonzeros(el):
    return sum(int(np.count_nonzero(m != 0)) for comp in el.blocks.values() for m in comp.values())


u = max(P.morphisms, key=lambda v: nonzeros(build_phi1(h, v).theta))
p1 = build_phi1(h, u)
print(u.name, "Phi_1 pieces:", p1.theta.pieces(), "| nonzero scalars:", nonzeros(p1.theta))

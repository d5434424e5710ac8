"""The differential on prenatural transformations, and level-0 quasi-inverses.

Random prenats of degree -1, 0 and 1 are built from endpoint data; applying
the differential twice gives zero on every probe chain.  Then the objectwise
homotopy inverses of Phi_0 are lifted to a witness (Psi, eta, omega) and
checked at level 0 (higher levels are shown for information) against Psi.Phi - id = d eta and Phi.Psi - id = d omega.
"""

# %%
from twistcx.ainf import (
    build_phi,
    closure_report,
    compose_ainf,
    d_infinity,
    lift_witness,
    quasi_inverse_exists,
    random_prenat,
    sgn,
    verify_quasi_inverse,
)
from twistcx.fixtures import constant_bundle
from twistcx.generate import generate_bundle, make_rng

b = generate_bundle(3)
h, P = b.homotopies["h"], b.probes["P"]

# %% d o d = 0 in every degree
for degree in (-1, 0, 1):
    R = random_prenat(h, P, degree, make_rng(degree + 10))
    rep = closure_report(d_infinity(R), P, max_level=3)
    print(f"degree {degree:2d}: d(d R) vanishes through level 3: {rep.ok}")

# %% the differential is a derivation of composition (constant homotopy, so F = G)
c = constant_bundle(4)
ch, cP = c.homotopies["h"], c.probes["P"]
for ds, dt in ((0, 1), (1, -1), (-1, -1)):
    S = random_prenat(ch, cP, ds, make_rng(1), max_level=2)
    T = random_prenat(ch, cP, dt, make_rng(2), max_level=2)
    lhs = d_infinity(compose_ainf(S, T))
    r1, r2 = compose_ainf(d_infinity(S), T), compose_ainf(S, d_infinity(T))
    ok = all(
        (lhs.component(x) - r1.component(x) - r2.component(x).scale(sgn(ds))).is_zero()
        for l in range(3)
        for x in cP.chains(l)
    )
    print(f"d(S o T) = dS o T + (-1)^|S| S o dT for |S|={ds:2d}, |T|={dt:2d}: {ok}")

Phi = build_phi(h)
print("Phi closed:", closure_report(Phi, P, 3).ok)

# %% quasi-inverse witness
found, certs = quasi_inverse_exists(Phi, P)
print("every Phi_0(E) invertible up to homotopy:", found)
W = lift_witness(Phi, P, certs)
rep = verify_quasi_inverse(Phi, W, P, max_level=2, required_levels=0)
print(rep.to_text())

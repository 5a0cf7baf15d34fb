#!/usr/bin/env python3
"""The path-sum / squared-amplitude identity, checked by brute force.

Expanding N rounds of the observed histogram over M outcomes produces
((M^2+M)/2)^N canonical terms after twin merging.  The whole sum can be
rewritten as |sum over the M^N classical paths of sqrt(prob) * exp(i*phase)|^2
once the phases solve the radix-grouped cosine constraints.  For two-outcome
sources the grouped system has an exact closed-form solution at every
feasible coupling, so the identity holds to machine precision; for M >= 3
the system is genuinely overdetermined and the report carries the residual
and a gap bound instead.
"""

import numpy as np

from qal.core import BareDistribution, symmetric_coupling
from qal.paths import build_constraints, census, expand_paths, identity_check, xi_sum

print("== exact census ==")
for m, n in [(2, 1), (2, 2), (3, 2), (4, 3)]:
    rep = census(m, n)
    print(
        f"M={m} N={n}: raw {rep.raw_total}, merged {rep.reduced_total}, "
        f"non-classical {rep.independent_nonclassical}"
    )

print("\n== expansion at M=2, N=1 ==")
bare = BareDistribution(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))
coupling = symmetric_coupling(bare, [0.2, 0.2])
for term in expand_paths(bare, coupling, 1):
    print(
        f"  path {term.base} crossings {sorted(term.crossings)} "
        f"value {term.value:+.3f} x{term.multiplicity}"
    )
print("  total:", xi_sum(bare, coupling, 1), " (= (0.4 + 0.4)^1)")

print("\n== constraints at M=2, N=2 ==")
cs = build_constraints(bare, coupling, 2)
print(f"  {len(cs)} pair constraints in {cs.n_groups} radix groups")
for c in cs[:3]:
    print(f"  paths {c.path_i} vs {c.path_j}: differ at {c.diff_set}, target {c.target:+.4f}")

print("\n== identity, two outcomes (exactly solvable) ==")
for gamma, n in [(0.2, 1), (0.2, 2), (0.4, 3)]:
    rep = identity_check(bare, [gamma, gamma], n, seed=1)
    print(
        f"  gamma={gamma} N={n}: path sum {rep.xi:.6f}, |amplitude|^2 {rep.amp_sq:.6f}, "
        f"gap {rep.gap:.2e}, residual {rep.max_residual:.2e}"
    )

print("\n== identity, three outcomes (overdetermined: the report is the contract) ==")
bare3 = BareDistribution(np.array([0.0, 1.0, 2.0]), np.array([0.5, 0.3, 0.2]))
rep = identity_check(bare3, [0.1, 0.1, 0.1], 2, seed=1)
print(
    f"  path sum {rep.xi:.6f}, |amplitude|^2 {rep.amp_sq:.6f}, gap {rep.gap:.3f}, "
    f"residual {rep.max_residual:.3f}, gap <= bound: {rep.gap <= rep.bound}"
)

print("\n== channel too strong: constraints leave the unit interval ==")
skew = BareDistribution(np.array([0.0, 1.0]), np.array([0.99, 0.01]))
rep = identity_check(skew, [1.0, 1.0], 1)
print(f"  feasible: {rep.feasible} (coupling {rep.coupling.d[0, 1]:.3f})")

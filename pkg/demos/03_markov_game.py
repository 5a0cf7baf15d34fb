#!/usr/bin/env python3
"""A random walk driven by the faulty reader, three ways.

The +-1 walk with 20% lost readings: Monte Carlo trials freeze on lost
rounds, the transition kernel carries the observed probabilities with the
defect mass on its diagonal, and the amplitude propagation makes the paths
interfere.  Without losses the endpoint-solved phases restore the exact
total mass even where paths overlap.
"""

import numpy as np

from qal.core import QRuleParams
from qal.grid import StateGrid
from qal.markov import (
    GameSpec,
    amplitude_propagate,
    effective_kernel,
    endpoint_constraints,
    joint_path_density,
    propagate_distribution,
    simulate_game,
)
from qal.paths import solve_phases

spec = GameSpec.random_walk(QRuleParams.pure_loss([0.2, 0.2]))
grid = StateGrid.from_range(-10, 10, 21)

print("== Monte Carlo vs kernel, 4 rounds ==")
game = simulate_game(spec, x0=0.0, rounds=4, trials=10**5, seed=3)
kernel = effective_kernel(spec, grid, boundary="wrap")
delta = np.zeros(grid.size)
delta[grid.snap_index(0.0)] = 1.0
predicted = propagate_distribution(delta, kernel, 4)
values, freqs = game.distribution()
print("  state   simulated   kernel")
for v, f in zip(values, freqs):
    print(f"  {v:+5.0f}   {f:9.5f}   {predicted[grid.snap_index(v)]:9.5f}")
print(f"  frozen rounds per trial: {game.mean_frozen:.4f} (expected 0.8)")

print("\n== joint density over state sequences, 2 rounds ==")
density = joint_path_density(spec, grid, 0.0, 2, boundary="wrap")
for seq, p in zip(density.sequences, density.probs):
    states = [f"{grid.nodes[k]:+.0f}" for k in seq]
    print(f"  0 -> {' -> '.join(states)}: {p:.4f}")
print(f"  total {density.total():.4f} (= 0.8^2; successful reads only)")

print("\n== amplitude propagation: interference at the origin ==")
lossless = GameSpec.random_walk(QRuleParams.lossless(2))
psi0 = np.zeros(grid.size, dtype=complex)
psi0[grid.snap_index(0.0)] = 1.0
flat = amplitude_propagate(lossless, grid, psi0, 2, boundary="wrap")
kern0 = effective_kernel(lossless, grid, boundary="wrap")
classical = propagate_distribution(np.abs(psi0) ** 2, kern0, 2)
node0 = grid.snap_index(0.0)
print(f"  zero phases: |psi(0)|^2 = {abs(flat[node0])**2:.3f} vs classical {classical[node0]:.3f}")

constraints = endpoint_constraints(lossless, grid, 0.0, 2, boundary="wrap")
assignment, report = solve_phases(constraints, seed=5)
solved = amplitude_propagate(lossless, grid, psi0, 2, phases=assignment, boundary="wrap")
print(
    f"  endpoint-solved phases (residual {report.max_residual:.1e}): "
    f"|psi(0)|^2 = {abs(solved[node0])**2:.3f}, "
    f"total mass {np.sum(np.abs(solved)**2):.6f}"
)

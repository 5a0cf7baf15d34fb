#!/usr/bin/env python3
"""A hidden source behind a faulty reader.

A two-outcome source is read through a channel that loses 20% of the draws.
The observer's histogram is sub-normalized: each outcome shows up with
probability 0.4 and the remaining 0.2 is the defect (frozen rounds).  The
same observed histogram can be produced either by the loss-dominated
symmetric coupling formula or by an explicit generative channel; both routes
agree, and a million sampled readings land on the same numbers.
"""

import numpy as np

from qal.core import (
    BareDistribution,
    QRuleParams,
    effective_distribution,
    effective_from_coupling,
    sample_readings,
    symmetric_coupling,
    symmetrizing_misreads,
    LOST,
)

bare = BareDistribution(labels=np.array([-1.0, 1.0]), probs=np.array([0.5, 0.5]))
gamma = [0.2, 0.2]

print("bare distribution:      ", bare.probs)

rules = QRuleParams.pure_loss(gamma)
observed = effective_distribution(bare, rules)
print("observed (pure loss):   ", observed.probs, " defect:", observed.defect)

coupling = symmetric_coupling(bare, gamma)
print("symmetric coupling d:   ", coupling.d[0, 1])
via_coupling = effective_from_coupling(bare, coupling)
print("observed via coupling:  ", via_coupling.probs)

channel = symmetrizing_misreads(bare, gamma)
print("symmetrizing misreads:  ", channel.misreads[0, 1], channel.misreads[1, 0])
via_channel = effective_distribution(bare, channel)
print("observed via channel:   ", via_channel.probs)

rng = np.random.default_rng(7)
draws = sample_readings(bare, rules, rng, 10**6)
freq_lost = np.mean(draws == LOST)
freq = [np.mean(draws == j) for j in range(bare.m)]
print(f"sampled at 1e6 draws:    {np.round(freq, 4)}  lost: {freq_lost:.4f}")

# a three-outcome source with a single misread direction
bare3 = BareDistribution(np.array([0.0, 1.0, 2.0]), np.array([0.5, 0.3, 0.2]))
misr = np.zeros((3, 3))
misr[0, 1] = 0.1  # outcome 2 occasionally read as outcome 1
observed3 = effective_distribution(bare3, QRuleParams(np.zeros(3), misr))
print("misread-only channel:   ", observed3.probs, " defect:", observed3.defect)

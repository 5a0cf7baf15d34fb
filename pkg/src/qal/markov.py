"""Discrete-time games driven by the faulty reading channel.

The state update is ``x <- drift(x) + gain(x) * y`` where ``y`` is the label
reported by the channel.  A lost reading freezes the round: the state does
not advance.  Three views of the same dynamics are provided: seeded Monte
Carlo over trials, exact propagation of a distribution through the one-step
transition kernel, and a coherent amplitude propagation where every label
path carries a square-root weight and a phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    LOST,
    BareDistribution,
    QRuleParams,
    effective_distribution,
    sample_readings,
    symmetric_coupling,
)
from .errors import DimensionMismatch, SizeGuardExceeded
from .grid import StateGrid
from .paths import ConstraintSet, PhaseAssignment, all_paths, constraints_for_pairs

__all__ = [
    "GameSpec",
    "GameRun",
    "TransitionKernel",
    "JointDensity",
    "make_map",
    "simulate_game",
    "effective_kernel",
    "propagate_distribution",
    "amplitude_propagate",
    "endpoint_constraints",
    "joint_path_density",
]

PATH_SUM_GUARD = 10**7
JOINT_GUARD = 10**7
DEFAULT_BLOCK = 4096


def make_map(name: str, **params) -> Callable[[np.ndarray], np.ndarray]:
    """Named state maps for drifts and gains.

    identity: x
    constant(value): value
    linear(slope): slope * x
    quadratic(slope, curvature): slope * x + curvature * x^2
    table(xs, ys): exact lookup over the listed support points
    """
    if name == "identity":
        return lambda x: np.asarray(x, dtype=float)
    if name == "constant":
        value = float(params["value"])
        return lambda x: np.full_like(np.asarray(x, dtype=float), value)
    if name == "linear":
        slope = float(params["slope"])
        return lambda x: slope * np.asarray(x, dtype=float)
    if name == "quadratic":
        slope = float(params["slope"])
        curvature = float(params["curvature"])

        def quadratic(x):
            x = np.asarray(x, dtype=float)
            return slope * x + curvature * x * x

        return quadratic
    if name == "table":
        xs = np.asarray(params["xs"], dtype=float)
        ys = np.asarray(params["ys"], dtype=float)
        if xs.size != ys.size:
            raise DimensionMismatch("table map needs matching xs and ys")
        order = np.argsort(xs)
        xs, ys = xs[order], ys[order]

        def table(x):
            x = np.asarray(x, dtype=float)
            pos = np.searchsorted(xs, x)
            pos = np.clip(pos, 0, xs.size - 1)
            if np.any(np.abs(xs[pos] - x) > 1e-9):
                raise ValueError("table map evaluated off its support")
            return ys[pos]

        return table
    raise ValueError(f"unknown map name {name!r}")


@dataclass(frozen=True, eq=False)
class GameSpec:
    """One-player game: deterministic maps plus an incomplete noise source."""

    drift: Callable[[np.ndarray], np.ndarray]
    gain: Callable[[np.ndarray], np.ndarray]
    noise: BareDistribution
    rules: QRuleParams

    def __post_init__(self) -> None:
        if self.noise.m != self.rules.m:
            raise DimensionMismatch("noise source and rules disagree on outcome count")

    @classmethod
    def random_walk(cls, rules: QRuleParams | None = None) -> "GameSpec":
        """Plus/minus-one walk, the standard worked example."""
        noise = BareDistribution(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))
        return cls(
            drift=make_map("identity"),
            gain=make_map("constant", value=1.0),
            noise=noise,
            rules=rules if rules is not None else QRuleParams.lossless(2),
        )


@dataclass(frozen=True, eq=False)
class GameRun:
    """Monte Carlo result: final state and frozen-round count per trial."""

    finals: np.ndarray
    frozen_counts: np.ndarray
    trials: int
    rounds: int
    seed: int

    def distribution(self) -> tuple[np.ndarray, np.ndarray]:
        values, counts = np.unique(self.finals, return_counts=True)
        return values, counts / self.trials

    @property
    def mean_frozen(self) -> float:
        return float(self.frozen_counts.mean())


def _simulate_block(
    spec: GameSpec, x0: float, rounds: int, rng: np.random.Generator, count: int
) -> tuple[np.ndarray, np.ndarray]:
    x = np.full(count, float(x0))
    frozen = np.zeros(count, dtype=np.int64)
    for _ in range(rounds):
        reads = sample_readings(spec.noise, spec.rules, rng, count)
        lost = reads == LOST
        frozen += lost
        live = ~lost
        if np.any(live):
            y = spec.noise.labels[reads[live]]
            xk = x[live]
            x[live] = spec.drift(xk) + spec.gain(xk) * y
    return x, frozen


def block_seed_sequences(seed: int, trials: int, block_size: int = DEFAULT_BLOCK):
    """Per-block generator substreams; results do not depend on which worker
    runs which block, only on the block partition itself."""
    n_blocks = (trials + block_size - 1) // block_size
    return np.random.SeedSequence(seed).spawn(n_blocks)


def simulate_game(
    spec: GameSpec,
    x0: float,
    rounds: int,
    trials: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK,
) -> GameRun:
    """Seeded Monte Carlo: per trial, per round, draw a reading and update.

    Lost readings freeze the trial for that round.  Trials are partitioned
    into fixed blocks with one generator substream each, so any execution
    order of the blocks reproduces the same run.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    finals = np.empty(trials)
    frozen = np.empty(trials, dtype=np.int64)
    start = 0
    for stream in block_seed_sequences(seed, trials, block_size):
        count = min(block_size, trials - start)
        rng = np.random.default_rng(stream)
        finals[start : start + count], frozen[start : start + count] = _simulate_block(
            spec, x0, rounds, rng, count
        )
        start += count
    return GameRun(finals=finals, frozen_counts=frozen, trials=trials, rounds=rounds, seed=seed)


# ---------------------------------------------------------------------------
# kernel propagation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """One-step law on the grid: read moves plus per-column frozen mass.

    ``read_matrix[k', k]`` is the probability of moving to node k' from node
    k via a successful reading; ``freeze[k]`` is the lost-reading mass that
    stays at k.  The full column-stochastic matrix is ``matrix``.
    """

    read_matrix: np.ndarray
    freeze: np.ndarray
    grid: StateGrid

    def __post_init__(self) -> None:
        cols = self.read_matrix.sum(axis=0) + self.freeze
        if np.max(np.abs(cols - 1.0)) > 1e-12:
            raise ValueError("kernel columns must sum to one including frozen mass")

    @property
    def matrix(self) -> np.ndarray:
        return self.read_matrix + np.diag(self.freeze)


def _image_table(spec: GameSpec, grid: StateGrid, boundary: str = "error") -> np.ndarray:
    """Node index reached from each node under each label: shape (M, K)."""
    if boundary not in ("error", "wrap"):
        raise ValueError(f"boundary must be 'error' or 'wrap', got {boundary!r}")
    nodes = grid.nodes
    base = spec.drift(nodes)
    gains = spec.gain(nodes)
    table = np.empty((spec.noise.m, grid.size), dtype=np.int64)
    for j, y in enumerate(spec.noise.labels):
        table[j] = grid.snap_indices(base + gains * y, wrap=boundary == "wrap")
    return table


def effective_kernel(
    spec: GameSpec, grid: StateGrid, boundary: str = "error"
) -> TransitionKernel:
    """Transition kernel with observed-read probabilities and frozen diagonal mass.

    Every image must land within dx/2 of a node; by default an image beyond
    the grid ends raises :class:`~qal.errors.OffGridImage`, while
    ``boundary='wrap'`` closes the grid periodically (use a grid wide enough
    that no mass reaches the ends when the dynamics are meant to be open).
    """
    eff = effective_distribution(spec.noise, spec.rules)
    table = _image_table(spec, grid, boundary)
    k = grid.size
    read = np.zeros((k, k))
    cols = np.arange(k)
    for j in range(spec.noise.m):
        np.add.at(read, (table[j], cols), eff.probs[j])
    freeze = np.full(k, eff.defect)
    return TransitionKernel(read_matrix=read, freeze=freeze, grid=grid)


def propagate_distribution(
    e0: np.ndarray,
    kernel: TransitionKernel,
    steps: int,
    include_frozen: bool = True,
) -> np.ndarray:
    """Apply the kernel ``steps`` times to a distribution on the grid.

    With ``include_frozen`` the full column-stochastic matrix is used and
    mass is conserved; without it only successful reads propagate and the
    total shrinks by the defect each step.
    """
    e0 = np.asarray(e0, dtype=float)
    if e0.size != kernel.grid.size:
        raise DimensionMismatch("distribution does not match the kernel grid")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    matrix = kernel.matrix if include_frozen else kernel.read_matrix
    v = e0.copy()
    for _ in range(steps):
        v = matrix @ v
    return v


# ---------------------------------------------------------------------------
# amplitude propagation
# ---------------------------------------------------------------------------


def amplitude_propagate(
    spec: GameSpec,
    grid: StateGrid,
    psi0: np.ndarray,
    steps: int,
    phases: PhaseAssignment | np.ndarray | None = None,
    boundary: str = "error",
) -> np.ndarray:
    """Coherent propagation: every label path carries sqrt(P) weights and a phase.

    ``phases=None`` or an array of per-step, per-label phase increments uses
    the one-step complex transfer matrix (phases linear in the labels).  A
    :class:`~qal.paths.PhaseAssignment` over full label paths triggers the
    exact path sum, guarded by the path-count limit.
    """
    psi = np.asarray(psi0, dtype=complex)
    if psi.size != grid.size:
        raise DimensionMismatch("state vector does not match the grid")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    table = _image_table(spec, grid, boundary)
    sqrtp = np.sqrt(spec.noise.probs)
    m, k = table.shape

    if isinstance(phases, PhaseAssignment):
        paths_arr = phases.paths
        if paths_arr.shape[1] != steps:
            raise DimensionMismatch(
                f"phase assignment covers {paths_arr.shape[1]} rounds, not {steps}"
            )
        if k * paths_arr.shape[0] > PATH_SUM_GUARD:
            raise SizeGuardExceeded("exact path sum exceeds the size guard")
        radices = np.prod(sqrtp[paths_arr], axis=1)
        amps = radices * np.exp(1j * phases.phases)
        out = np.zeros(k, dtype=complex)
        start = np.arange(k)
        for path, amp in zip(paths_arr, amps):
            cur = start
            for label in path:
                cur = table[label, cur]
            np.add.at(out, cur, amp * psi)
        return out

    if phases is None:
        theta = np.zeros((steps, m))
    else:
        theta = np.asarray(phases, dtype=float)
        if theta.ndim == 1:
            theta = np.broadcast_to(theta, (steps, m)).copy()
        if theta.shape != (steps, m):
            raise DimensionMismatch(f"per-step phases must have shape ({steps}, {m})")
    cols = np.arange(k)
    for n in range(steps):
        weights = sqrtp * np.exp(1j * theta[n])
        nxt = np.zeros(k, dtype=complex)
        for j in range(m):
            np.add.at(nxt, (table[j],), weights[j] * psi)
        psi = nxt
    return psi


def endpoint_constraints(
    spec: GameSpec,
    grid: StateGrid,
    x0: float,
    steps: int,
    boundary: str = "error",
) -> ConstraintSet:
    """Phase constraints restricted to label paths sharing their endpoint.

    Couplings come from the symmetric loss-dominated construction over the
    game's loss rates; only pairs of paths that land on the same node from
    the given start are constrained against each other.
    """
    coupling = symmetric_coupling(spec.noise, spec.rules.loss_rates)
    paths_arr = all_paths(spec.noise.m, steps)
    table = _image_table(spec, grid, boundary)
    start = grid.snap_index(x0)
    ends = np.empty(paths_arr.shape[0], dtype=np.int64)
    for idx, path in enumerate(paths_arr):
        cur = start
        for label in path:
            cur = int(table[label, cur])
        ends[idx] = cur
    pair_i_list = []
    pair_j_list = []
    for node in np.unique(ends):
        members = np.nonzero(ends == node)[0]
        if members.size < 2:
            continue
        ii, jj = np.triu_indices(members.size, k=1)
        pair_i_list.append(members[ii])
        pair_j_list.append(members[jj])
    if pair_i_list:
        pair_i = np.concatenate(pair_i_list)
        pair_j = np.concatenate(pair_j_list)
    else:
        pair_i = np.zeros(0, dtype=np.int64)
        pair_j = np.zeros(0, dtype=np.int64)
    return constraints_for_pairs(spec.noise, coupling, paths_arr, pair_i, pair_j)


# ---------------------------------------------------------------------------
# joint density over state sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointDensity:
    """Exhaustive table of state-sequence probabilities from a point start.

    Covers successful reads only, so the table total is (sum of observed
    probabilities)^steps; frozen rounds are excluded by construction.
    """

    start_index: int
    steps: int
    sequences: tuple[tuple[int, ...], ...]
    probs: np.ndarray
    grid: StateGrid

    def total(self) -> float:
        return float(self.probs.sum())

    def marginal(self, step: int) -> np.ndarray:
        """Distribution of the state after ``step`` rounds (1-based)."""
        if not 1 <= step <= self.steps:
            raise ValueError("step out of range")
        out = np.zeros(self.grid.size)
        for seq, p in zip(self.sequences, self.probs):
            out[seq[step - 1]] += p
        return out


def joint_path_density(
    spec: GameSpec, grid: StateGrid, x0: float, steps: int, boundary: str = "error"
) -> JointDensity:
    """Brute-force product of per-step read laws over all state sequences."""
    if steps < 1:
        raise ValueError("need at least one step")
    if grid.size**steps > JOINT_GUARD:
        raise SizeGuardExceeded("state-sequence table exceeds the size guard")
    kernel = effective_kernel(spec, grid, boundary)
    start = grid.snap_index(x0)
    read = kernel.read_matrix
    table: dict[tuple[int, ...], float] = {}

    def descend(node: int, depth: int, prefix: tuple[int, ...], prob: float) -> None:
        if depth == steps:
            table[prefix] = table.get(prefix, 0.0) + prob
            return
        col = read[:, node]
        for nxt in np.nonzero(col)[0]:
            descend(int(nxt), depth + 1, prefix + (int(nxt),), prob * float(col[nxt]))

    descend(start, 0, (), 1.0)
    sequences = tuple(sorted(table))
    probs = np.array([table[s] for s in sequences])
    return JointDensity(
        start_index=start, steps=steps, sequences=sequences, probs=probs, grid=grid
    )

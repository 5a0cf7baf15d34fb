"""Exhaustive path expansion and the path-sum / squared-amplitude identity.

For N reading rounds over M outcomes, expanding the product of observed
per-round histograms branches every label sequence ("classical path") into
terms carrying cross-outcome coupling factors.  With symmetric couplings the
raw M^(2N) terms collapse, by merging twin terms, to ((M^2+M)/2)^N canonical
terms, and the whole sum can be rewritten as the squared modulus of a single
complex sum over the M^N classical paths, each weighted by the square root of
its probability and a solved phase.

The phase constraints are grouped by shared radix (the square-root factor
pattern two paths have in common): within one radix group the sum of
cos(phi_i - phi_j) must match the sum of coupling products.  Groups of size
one reduce to plain pairwise constraints; larger groups are exactly the twin
families.  Solving the grouped system (rather than forcing every pair
individually) is what makes the identity attainable beyond the scalar case.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import least_squares

from .core import BareDistribution, CouplingMatrix
from .errors import DimensionMismatch, SizeGuardExceeded

__all__ = [
    "ClassicalPath",
    "CensusReport",
    "ExpandedTerm",
    "PairConstraint",
    "ConstraintSet",
    "PhaseAssignment",
    "SolveReport",
    "IdentityReport",
    "census",
    "expand_paths",
    "xi_sum",
    "all_paths",
    "path_radices",
    "build_constraints",
    "constraints_for_pairs",
    "solve_phases",
    "amplitude_sum",
    "identity_check",
]

EXPANSION_GUARD = 10**7
CONSTRAINT_GUARD = 4096


@dataclass(frozen=True)
class ClassicalPath:
    """Ordered sequence of outcome indices (0-based), one per round."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.indices) < 1:
            raise ValueError("a path needs at least one round")
        if any(i < 0 for i in self.indices):
            raise ValueError("path indices must be non-negative")

    def __len__(self) -> int:
        return len(self.indices)

    def __str__(self) -> str:
        # 1-based in displays, matching the usual outcome numbering
        return ",".join(str(i + 1) for i in self.indices)


# ---------------------------------------------------------------------------
# exact counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CensusReport:
    """Exact term counts of the expanded path sum, raw and twin-merged."""

    m: int
    n: int
    raw_total: int
    raw_per_l: tuple[int, ...]
    reduced_per_l: tuple[int, ...]
    reduced_total: int
    independent_nonclassical: int


def census(m: int, n: int) -> CensusReport:
    """Count expansion terms with l cross factors, in exact integers.

    Raw counts use M^2 - M ordered cross pairs per round; merging twin terms
    halves that to (M^2 - M)/2 and shrinks the total from M^(2N) to
    ((M^2 + M)/2)^N.
    """
    if m < 2 or n < 1:
        raise ValueError("census requires m >= 2 and n >= 1")
    raw_per_l = tuple(
        math.comb(n, l) * m ** (n - l) * (m * m - m) ** l for l in range(n + 1)
    )
    reduced_per_l = tuple(
        math.comb(n, l) * m ** (n - l) * ((m * m - m) // 2) ** l for l in range(n + 1)
    )
    raw_total = m ** (2 * n)
    reduced_total = ((m * m + m) // 2) ** n
    return CensusReport(
        m=m,
        n=n,
        raw_total=raw_total,
        raw_per_l=raw_per_l,
        reduced_per_l=reduced_per_l,
        reduced_total=reduced_total,
        independent_nonclassical=reduced_total - m**n,
    )


# ---------------------------------------------------------------------------
# expansion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpandedTerm:
    """One canonical term of the expanded path sum.

    ``value`` is the bare product of probability and coupling factors for the
    canonical representative (smaller index first at each crossing);
    ``multiplicity`` counts the merged twin instances, 2 per crossing round.
    The term contributes ``multiplicity * value`` to the path sum.
    """

    base: ClassicalPath
    crossings: frozenset[tuple[int, int]]
    value: float
    multiplicity: int


def _round_options(
    bare: BareDistribution, coupling: CouplingMatrix
) -> list[tuple[int, int | None, float]]:
    """Per-round expansion choices: (base index, partner or None, factor)."""
    m = bare.m
    opts: list[tuple[int, int | None, float]] = [
        (j, None, float(bare.probs[j])) for j in range(m)
    ]
    s = np.sqrt(bare.probs)
    for a in range(m):
        for b in range(a + 1, m):
            opts.append((a, b, float(s[a] * s[b] * coupling.d[a, b])))
    return opts


def _check_expansion_size(m: int, n: int) -> None:
    if m ** (2 * n) > EXPANSION_GUARD:
        raise SizeGuardExceeded(
            f"raw expansion has {m}^(2*{n}) terms, beyond the {EXPANSION_GUARD} guard"
        )


def _iter_terms(
    bare: BareDistribution, coupling: CouplingMatrix, n: int
) -> Iterator[ExpandedTerm]:
    opts = _round_options(bare, coupling)
    for combo in itertools.product(opts, repeat=n):
        value = 1.0
        base: list[int] = []
        crossings: list[tuple[int, int]] = []
        for rnd, (a, b, factor) in enumerate(combo):
            value *= factor
            base.append(a)
            if b is not None:
                crossings.append((rnd, b))
        yield ExpandedTerm(
            base=ClassicalPath(tuple(base)),
            crossings=frozenset(crossings),
            value=value,
            multiplicity=1 << len(crossings),
        )


def expand_paths(
    bare: BareDistribution, coupling: CouplingMatrix, n: int
) -> list[ExpandedTerm]:
    """All canonical terms of the N-round expansion, twins merged."""
    if coupling.m != bare.m:
        raise DimensionMismatch("coupling size does not match the distribution")
    if n < 1:
        raise ValueError("need at least one round")
    _check_expansion_size(bare.m, n)
    return list(_iter_terms(bare, coupling, n))


def xi_sum(bare: BareDistribution, coupling: CouplingMatrix, n: int) -> float:
    """Full path sum: every canonical term weighted by its twin multiplicity.

    Equals (sum of observed probabilities)^N; the enumeration here is the
    long way around that closed form, which the tests use as the oracle.
    """
    if coupling.m != bare.m:
        raise DimensionMismatch("coupling size does not match the distribution")
    if n < 1:
        raise ValueError("need at least one round")
    _check_expansion_size(bare.m, n)
    return float(sum(t.multiplicity * t.value for t in _iter_terms(bare, coupling, n)))


# ---------------------------------------------------------------------------
# phase constraints
# ---------------------------------------------------------------------------


def all_paths(m: int, n: int) -> np.ndarray:
    """All M^N classical paths in lexicographic order, as an (M^N, N) array."""
    if m ** n > CONSTRAINT_GUARD:
        raise SizeGuardExceeded(
            f"{m}^{n} classical paths exceed the {CONSTRAINT_GUARD} guard"
        )
    grids = np.meshgrid(*([np.arange(m)] * n), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1).astype(np.int64)


def path_radices(bare: BareDistribution, paths: np.ndarray) -> np.ndarray:
    """Square-root path weights: sqrt of the product of bare probabilities."""
    return np.sqrt(np.prod(bare.probs[paths], axis=1))


@dataclass(frozen=True)
class PairConstraint:
    """Phase constraint between two classical paths.

    The target is the product of couplings over the rounds where the paths
    differ; within its radix group the mean of cos(phi_i - phi_j) must match
    the (shared) target.
    """

    path_i: ClassicalPath
    path_j: ClassicalPath
    diff_set: tuple[int, ...]
    target: float


class ConstraintSet(Sequence[PairConstraint]):
    """Pair constraints over all requested path pairs, with radix grouping.

    Stored as flat arrays; indexing materializes individual
    :class:`PairConstraint` items.  ``group_inverse`` maps each pair to its
    radix group (pairs sharing the per-round unordered label pattern), the
    granularity at which the phase system is actually solved.
    """

    def __init__(
        self,
        paths: np.ndarray,
        pair_i: np.ndarray,
        pair_j: np.ndarray,
        targets: np.ndarray,
        m: int,
    ) -> None:
        self.paths = np.asarray(paths, dtype=np.int64)
        self.pair_i = np.asarray(pair_i, dtype=np.int64)
        self.pair_j = np.asarray(pair_j, dtype=np.int64)
        self.targets = np.asarray(targets, dtype=float)
        self.m = int(m)
        if not (self.pair_i.size == self.pair_j.size == self.targets.size):
            raise DimensionMismatch("pair arrays must have equal length")
        a = self.paths[self.pair_i]
        b = self.paths[self.pair_j]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        weights = (self.m * self.m) ** np.arange(self.paths.shape[1], dtype=np.int64)
        codes = ((lo * self.m + hi) * weights[None, :]).sum(axis=1)
        _, first, inverse, counts = np.unique(
            codes, return_index=True, return_inverse=True, return_counts=True
        )
        self.group_inverse = inverse
        self.group_sizes = counts
        self.group_targets = self.targets[first]
        self.group_representative = first

    @property
    def n_paths(self) -> int:
        return int(self.paths.shape[0])

    @property
    def n_rounds(self) -> int:
        return int(self.paths.shape[1])

    @property
    def n_groups(self) -> int:
        return int(self.group_sizes.size)

    def __len__(self) -> int:
        return int(self.pair_i.size)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        i = int(self.pair_i[index])
        j = int(self.pair_j[index])
        a, b = self.paths[i], self.paths[j]
        diff = tuple(int(r) for r in np.nonzero(a != b)[0])
        return PairConstraint(
            path_i=ClassicalPath(tuple(int(v) for v in a)),
            path_j=ClassicalPath(tuple(int(v) for v in b)),
            diff_set=diff,
            target=float(self.targets[index]),
        )

    def infeasible_pairs(self) -> np.ndarray:
        """Indices of constraints whose target falls outside [-1, 1]."""
        return np.nonzero(np.abs(self.targets) > 1.0 + 1e-12)[0]


def _pair_targets(
    paths: np.ndarray, coupling: CouplingMatrix, pair_i: np.ndarray, pair_j: np.ndarray
) -> np.ndarray:
    targets = np.empty(pair_i.size, dtype=float)
    chunk = 1 << 18
    for lo in range(0, pair_i.size, chunk):
        hi = min(lo + chunk, pair_i.size)
        a = paths[pair_i[lo:hi]]
        b = paths[pair_j[lo:hi]]
        factors = np.where(a == b, 1.0, coupling.d[a, b])
        targets[lo:hi] = factors.prod(axis=1)
    return targets


def constraints_for_pairs(
    bare: BareDistribution,
    coupling: CouplingMatrix,
    paths: np.ndarray,
    pair_i: np.ndarray,
    pair_j: np.ndarray,
) -> ConstraintSet:
    """Constraint set over an explicit list of path pairs.

    Used directly by the game module, where only paths sharing an endpoint
    are constrained against each other.
    """
    if coupling.m != bare.m:
        raise DimensionMismatch("coupling size does not match the distribution")
    paths = np.asarray(paths, dtype=np.int64)
    pair_i = np.asarray(pair_i, dtype=np.int64)
    pair_j = np.asarray(pair_j, dtype=np.int64)
    targets = _pair_targets(paths, coupling, pair_i, pair_j)
    return ConstraintSet(paths, pair_i, pair_j, targets, bare.m)


def build_constraints(
    bare: BareDistribution, coupling: CouplingMatrix, n: int
) -> ConstraintSet:
    """One constraint per unordered pair of distinct classical paths."""
    paths = all_paths(bare.m, n)
    k = paths.shape[0]
    pair_i, pair_j = np.triu_indices(k, k=1)
    return constraints_for_pairs(bare, coupling, paths, pair_i, pair_j)


# ---------------------------------------------------------------------------
# phase solving
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhaseAssignment:
    """One phase per classical path, gauge-fixed to 0 on the first path."""

    paths: np.ndarray
    phases: np.ndarray
    _index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        paths = np.asarray(self.paths, dtype=np.int64)
        phases = np.asarray(self.phases, dtype=float)
        if paths.shape[0] != phases.size:
            raise DimensionMismatch("one phase per path required")
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "phases", phases)
        index = {tuple(int(v) for v in p): i for i, p in enumerate(paths)}
        object.__setattr__(self, "_index", index)

    def phase_of(self, path) -> float:
        key = tuple(path.indices) if isinstance(path, ClassicalPath) else tuple(path)
        return float(self.phases[self._index[key]])

    def __len__(self) -> int:
        return int(self.phases.size)


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of a phase solve.

    ``max_residual`` and ``group_residuals`` refer to the radix-grouped
    system actually optimized; ``pair_residuals`` report every raw pair
    against its own target for inspection.  Infeasible targets (|t| > 1) are
    reported without solving.
    """

    feasible: bool
    converged: bool
    max_residual: float
    group_residuals: np.ndarray
    pair_residuals: np.ndarray
    group_sizes: np.ndarray
    starts_tried: int
    best_start: int
    infeasible_indices: np.ndarray


def _wrap_phases(phases: np.ndarray) -> np.ndarray:
    wrapped = np.angle(np.exp(1j * phases))
    wrapped[wrapped <= -np.pi] = np.pi
    return wrapped


def _two_label_start(constraints: ConstraintSet) -> np.ndarray | None:
    """Exact closed-form phases when paths range over just two labels.

    With a single coupling value d, additive per-round phases of size
    arccos(d)/2 (sign split by label) satisfy every radix group exactly.
    """
    labels = np.unique(constraints.paths)
    if labels.size != 2:
        return None
    reps_i = constraints.pair_i[constraints.group_representative]
    reps_j = constraints.pair_j[constraints.group_representative]
    ndiff = (constraints.paths[reps_i] != constraints.paths[reps_j]).sum(axis=1)
    singles = np.nonzero(ndiff == 1)[0]
    if singles.size == 0:
        return None
    d = float(np.clip(constraints.group_targets[singles[0]], -1.0, 1.0))
    kappa = math.acos(d)
    sigma = np.where(constraints.paths == labels[0], -1.0, 1.0).sum(axis=1)
    return 0.5 * kappa * sigma


def solve_phases(
    constraints: ConstraintSet,
    *,
    max_iter: int = 400,
    tol: float = 1e-8,
    restarts: int = 8,
    seed: int = 0,
) -> tuple[PhaseAssignment, SolveReport]:
    """Gauge-fixed least squares over the radix-grouped cosine constraints.

    Deterministic given the seed: restarts draw their initial phases from
    per-restart generator substreams keyed by restart index.  Non-convergence
    is reported, not raised.
    """
    k = constraints.n_paths
    ii, jj = constraints.pair_i, constraints.pair_j
    ginv = constraints.group_inverse
    counts = constraints.group_sizes.astype(float)
    t_group = constraints.group_targets
    n_groups = constraints.n_groups

    bad = constraints.infeasible_pairs()
    if bad.size:
        phases = PhaseAssignment(constraints.paths, np.zeros(k))
        report = SolveReport(
            feasible=False,
            converged=False,
            max_residual=float("inf"),
            group_residuals=np.full(n_groups, np.nan),
            pair_residuals=np.full(len(constraints), np.nan),
            group_sizes=constraints.group_sizes.copy(),
            starts_tried=0,
            best_start=-1,
            infeasible_indices=bad,
        )
        return phases, report

    def group_residuals(phi: np.ndarray) -> np.ndarray:
        c = np.cos(phi[ii] - phi[jj])
        sums = np.bincount(ginv, weights=c, minlength=n_groups)
        return sums / counts - t_group

    def fun(theta: np.ndarray) -> np.ndarray:
        return group_residuals(np.concatenate(([0.0], theta)))

    def jac(theta: np.ndarray) -> np.ndarray:
        phi = np.concatenate(([0.0], theta))
        s = np.sin(phi[ii] - phi[jj]) / counts[ginv]
        j_full = np.zeros((n_groups, k))
        np.add.at(j_full, (ginv, ii), -s)
        np.add.at(j_full, (ginv, jj), s)
        return j_full[:, 1:]

    starts: list[np.ndarray] = []
    analytic = _two_label_start(constraints)
    if analytic is not None:
        starts.append((analytic - analytic[0])[1:])
    starts.append((np.pi * np.arange(k) / k)[1:])
    streams = np.random.SeedSequence(seed).spawn(max(restarts, 0))
    for stream in streams:
        rng = np.random.default_rng(stream)
        starts.append(rng.uniform(-np.pi, np.pi, k - 1))

    # MINPACK needs at least as many residuals as variables; endpoint-filtered
    # problems can be underdetermined, which trust-region reflective accepts
    method = "lm" if n_groups >= max(k - 1, 1) else "trf"
    best_theta = None
    best_res = float("inf")
    best_start = -1
    tried = 0
    for idx, theta0 in enumerate(starts):
        tried += 1
        if k == 1 or n_groups == 0:
            theta = np.asarray(theta0, dtype=float)
        else:
            result = least_squares(
                fun,
                theta0,
                jac=jac,
                method=method,
                max_nfev=max_iter * max(k, 2),
                xtol=1e-14,
                ftol=1e-14,
                gtol=1e-14,
            )
            theta = result.x
        res = float(np.max(np.abs(fun(theta))) if n_groups else 0.0)
        if res < best_res:
            best_res = res
            best_theta = theta
            best_start = idx
        if best_res <= tol:
            break

    phi = np.concatenate(([0.0], best_theta)) if k > 1 else np.zeros(1)
    phi = _wrap_phases(phi - phi[0])
    phi[0] = 0.0
    g_res = group_residuals(phi)
    p_res = np.cos(phi[ii] - phi[jj]) - constraints.targets
    max_res = float(np.max(np.abs(g_res))) if n_groups else 0.0
    report = SolveReport(
        feasible=True,
        converged=bool(max_res <= tol),
        max_residual=max_res,
        group_residuals=g_res,
        pair_residuals=p_res,
        group_sizes=constraints.group_sizes.copy(),
        starts_tried=tried,
        best_start=best_start,
        infeasible_indices=np.zeros(0, dtype=np.int64),
    )
    return PhaseAssignment(constraints.paths, phi), report


def amplitude_sum(
    bare: BareDistribution, assignment: PhaseAssignment, n: int
) -> complex:
    """Coherent sum over classical paths: sum of radix * exp(i*phase)."""
    paths = assignment.paths
    if paths.shape[1] != n:
        raise DimensionMismatch(f"assignment covers {paths.shape[1]} rounds, not {n}")
    if paths.shape[0] != bare.m**n:
        raise DimensionMismatch("assignment must cover every classical path")
    radices = path_radices(bare, paths)
    return complex(np.sum(radices * np.exp(1j * assignment.phases)))


# ---------------------------------------------------------------------------
# end-to-end identity check
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IdentityReport:
    """Full pipeline result: both sums, their gap, and the residual bound.

    The bound is 2 * sum over radix groups of |group| * radix_product *
    |group residual|, plus a small round-off allowance; the gap never exceeds
    it when the solve is feasible.
    """

    m: int
    n: int
    xi: float
    amp_sq: float
    gap: float
    max_residual: float
    bound: float
    feasible: bool
    converged: bool
    coupling: CouplingMatrix
    assignment: PhaseAssignment
    solve_report: SolveReport


def identity_check(
    bare: BareDistribution,
    loss_rates,
    n: int,
    *,
    max_iter: int = 400,
    tol: float = 1e-8,
    restarts: int = 8,
    seed: int = 0,
) -> IdentityReport:
    """Coupling -> constraints -> phase solve -> compare both path sums."""
    from .core import symmetric_coupling

    coupling = symmetric_coupling(bare, loss_rates)
    constraints = build_constraints(bare, coupling, n)
    assignment, solve_report = solve_phases(
        constraints, max_iter=max_iter, tol=tol, restarts=restarts, seed=seed
    )
    xi = xi_sum(bare, coupling, n)
    if not solve_report.feasible:
        return IdentityReport(
            m=bare.m,
            n=n,
            xi=xi,
            amp_sq=float("nan"),
            gap=float("nan"),
            max_residual=float("inf"),
            bound=float("nan"),
            feasible=False,
            converged=False,
            coupling=coupling,
            assignment=assignment,
            solve_report=solve_report,
        )
    amp = amplitude_sum(bare, assignment, n)
    amp_sq = float(abs(amp) ** 2)
    gap = abs(xi - amp_sq)

    radices = path_radices(bare, constraints.paths)
    reps = constraints.group_representative
    rho = radices[constraints.pair_i[reps]] * radices[constraints.pair_j[reps]]
    slack = 1e-13 * (1.0 + abs(xi) + amp_sq)
    bound = float(
        2.0
        * np.sum(
            constraints.group_sizes * rho * np.abs(solve_report.group_residuals)
        )
        + slack
    )
    return IdentityReport(
        m=bare.m,
        n=n,
        xi=xi,
        amp_sq=amp_sq,
        gap=gap,
        max_residual=solve_report.max_residual,
        bound=bound,
        feasible=True,
        converged=solve_report.converged,
        coupling=coupling,
        assignment=assignment,
        solve_report=solve_report,
    )

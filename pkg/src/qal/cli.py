"""Command-line front end: every experiment as a subcommand with CSV output.

Configuration comes from typed flags, an optional ``key = value`` file
(``--config``), and the ``QAL_SEED`` environment variable as a seed fallback,
in that precedence order.  Every CSV embeds the fully resolved configuration
(with per-key provenance), the tool version, and a schema tag that the plot
script generator keys on.

Exit codes: 0 success, 1 validation error, 2 for runs that completed but
whose numerical report failed its contract (infeasible phase constraints or
an uncertified identity).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, markov, paths, quantum
from .core import (
    BareDistribution,
    QRuleParams,
    effective_distribution,
)
from .errors import ConfigError, QalError, UnknownSchema
from .grid import StateGrid

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "run",
    "main",
    "emit_plot_script",
    "read_csv",
]

COMMANDS = (
    "histogram",
    "census",
    "identity-check",
    "phase-solve",
    "simulate-game",
    "propagate-game",
    "quantum-propagate",
    "quantum-compare",
    "uncertainty",
    "roughness",
)


@dataclass(frozen=True)
class ParamSpec:
    kind: str  # "int" | "float" | "floats" | "str" | "choice"
    default: object = None
    help: str = ""
    choices: tuple[str, ...] = ()
    required: bool = False


_CHANNEL = {
    "p": ParamSpec("floats", None, "bare outcome probabilities, comma separated"),
    "m": ParamSpec("int", None, "outcome count (defaults to len(p); p defaults to uniform)"),
    "gamma": ParamSpec("floats", None, "per-outcome loss rates (default zeros)"),
    "misreads": ParamSpec("floats", None, "row-major misread matrix entries (default zeros)"),
    "labels": ParamSpec("floats", None, "outcome values (default 0..M-1)"),
}

_SOLVER = {
    "tol": ParamSpec("float", 1e-8, "residual tolerance for the phase solve"),
    "restarts": ParamSpec("int", 8, "random multi-start count"),
    "max-iter": ParamSpec("int", 400, "iteration budget per start"),
}

_GAME = {
    "drift": ParamSpec("str", "identity", "drift map: identity|constant:C|linear:A|quadratic:A,B"),
    "gain": ParamSpec("str", "constant:1", "gain map, same syntax as drift"),
    "x0": ParamSpec("float", 0.0, "initial state"),
}

_GRID = {
    "grid-min": ParamSpec("float", -20.0, "left grid edge"),
    "grid-max": ParamSpec("float", 20.0, "right grid edge"),
    "grid-nodes": ParamSpec("int", 801, "node count (inclusive endpoints)"),
}

_PARTICLE = {
    "mass": ParamSpec("float", 1.0, "particle mass"),
    "alpha": ParamSpec("float", 1.0, "action scale"),
    "e0": ParamSpec("float", 0.0, "energy reference offset"),
    "potential": ParamSpec("str", "free", "free | harmonic:OMEGA"),
    "apodization": ParamSpec("str", "none", "none | gaussian:SIGMA | window:W"),
}

_WAVE = {
    "sigma0": ParamSpec("float", 1.0, "initial packet width"),
    "center": ParamSpec("float", 0.0, "initial packet center"),
    "momentum": ParamSpec("float", 0.0, "initial packet momentum"),
}

PARAM_SPECS: dict[str, dict[str, ParamSpec]] = {
    "histogram": dict(_CHANNEL),
    "census": {
        "m": ParamSpec("int", None, "outcome count", required=True),
        "n": ParamSpec("int", None, "round count", required=True),
    },
    "identity-check": {
        **_CHANNEL,
        "n": ParamSpec("int", None, "round count", required=True),
        **_SOLVER,
    },
    "phase-solve": {
        **_CHANNEL,
        "n": ParamSpec("int", None, "round count", required=True),
        **_SOLVER,
    },
    "simulate-game": {
        **_CHANNEL,
        **_GAME,
        "rounds": ParamSpec("int", 1, "rounds per trial"),
        "trials": ParamSpec("int", 10000, "number of trials"),
    },
    "propagate-game": {
        **_CHANNEL,
        **_GAME,
        "steps": ParamSpec("int", 1, "kernel applications"),
        "boundary": ParamSpec("choice", "error", "grid boundary", ("error", "wrap")),
        "grid-min": ParamSpec("float", -10.0, "left grid edge"),
        "grid-max": ParamSpec("float", 10.0, "right grid edge"),
        "grid-nodes": ParamSpec("int", 21, "node count"),
    },
    "quantum-propagate": {
        **_PARTICLE,
        **_GRID,
        **_WAVE,
        "eps": ParamSpec("float", 1e-3, "time step"),
        "steps": ParamSpec("int", 1000, "step count"),
    },
    "quantum-compare": {
        **_PARTICLE,
        **_GRID,
        **_WAVE,
        "time": ParamSpec("float", 0.5, "total physical time"),
        "eps-ladder": ParamSpec("floats", [4e-3, 2e-3, 1e-3], "time steps to compare"),
        "refine": ParamSpec("int", 4, "reference grid refinement factor"),
        "reference-dt": ParamSpec("float", None, "reference solver step (default min(eps)/4)"),
    },
    "uncertainty": {
        "alpha": ParamSpec("float", 1.0, "action scale"),
        "sigma0": ParamSpec("float", 1.0, "probe Gaussian width"),
        "n-states": ParamSpec("int", 100, "random superpositions to test"),
        **_GRID,
    },
    "roughness": {
        "mass": ParamSpec("float", 1.0, "particle mass"),
        "alpha": ParamSpec("float", 1.0, "action scale"),
        "eps-ladder": ParamSpec("floats", [4e-3, 2e-3, 1e-3], "time steps to scan"),
        "steps": ParamSpec("int", 64, "increments per sampled path"),
        "samples": ParamSpec("int", 100000, "sampled paths per eps"),
        "mode": ParamSpec("choice", "quantum", "path ensemble", ("quantum", "classical")),
    },
}

SCHEMAS = {
    "histogram": "histogram",
    "census": "census",
    "identity-check": "identity",
    "phase-solve": "phases",
    "simulate-game": "game",
    "propagate-game": "distribution",
    "quantum-propagate": "wavepacket",
    "quantum-compare": "convergence",
    "uncertainty": "uncertainty",
    "roughness": "roughness",
}


@dataclass
class ExperimentConfig:
    """Fully resolved run configuration with per-key provenance."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "out.csv"
    provenance: dict = field(default_factory=dict)


def _convert(key: str, raw, spec: ParamSpec):
    if raw is None:
        return None
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if spec.kind == "int":
            return int(text)
        if spec.kind == "float":
            return float(text)
        if spec.kind == "floats":
            if text.endswith(",") or text.startswith(",") or ",," in text:
                raise ConfigError(
                    f"{key}: malformed list {text!r} (dangling separator)"
                )
            return [float(part) for part in text.split(",")]
        if spec.kind == "choice":
            if text not in spec.choices:
                raise ConfigError(
                    f"{key}: expected one of {', '.join(spec.choices)}, got {text!r}"
                )
            return text
        return text
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{key}: expected {spec.kind}, got {text!r} ({exc})") from exc


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def parse_config(
    command: str,
    flag_params: dict[str, str] | None = None,
    config_file: str | None = None,
    *,
    seed: str | None = None,
    out: str | None = None,
    env: dict | None = None,
) -> ExperimentConfig:
    """Resolve and type-check a run configuration.

    Flags override file values; the seed falls back to the ``QAL_SEED``
    environment variable, then to 0.  Unknown keys are rejected with the
    offending name.
    """
    if command not in PARAM_SPECS:
        raise ConfigError(f"unknown command {command!r}")
    env = dict(os.environ) if env is None else env
    specs = PARAM_SPECS[command]
    flag_params = {k: v for k, v in (flag_params or {}).items() if v is not None}
    file_params = _read_config_file(config_file) if config_file else {}

    file_seed = file_params.pop("seed", None)
    file_out = file_params.pop("out", None)
    for key in file_params:
        if key not in specs:
            raise ConfigError(f"unknown key {key!r} in {config_file}")
    for key in flag_params:
        if key not in specs:
            raise ConfigError(f"unknown flag {key!r}")

    params: dict = {}
    provenance: dict[str, str] = {}
    for key, spec in specs.items():
        if key in flag_params:
            params[key] = _convert(key, flag_params[key], spec)
            provenance[key] = "flag"
        elif key in file_params:
            params[key] = _convert(key, file_params[key], spec)
            provenance[key] = "file"
        else:
            if spec.required:
                raise ConfigError(f"missing required parameter --{key}")
            params[key] = spec.default
            provenance[key] = "default"

    if seed is not None:
        resolved_seed = _convert("seed", seed, ParamSpec("int"))
        provenance["seed"] = "flag"
    elif file_seed is not None:
        resolved_seed = _convert("seed", file_seed, ParamSpec("int"))
        provenance["seed"] = "file"
    elif "QAL_SEED" in env:
        resolved_seed = _convert("QAL_SEED", env["QAL_SEED"], ParamSpec("int"))
        provenance["seed"] = "env"
    else:
        resolved_seed = 0
        provenance["seed"] = "default"
    if not 0 <= resolved_seed < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits")

    if out is not None:
        resolved_out = out
        provenance["out"] = "flag"
    elif file_out is not None:
        resolved_out = file_out
        provenance["out"] = "file"
    else:
        resolved_out = f"{command}.csv"
        provenance["out"] = "default"

    return ExperimentConfig(
        command=command,
        params=params,
        seed=resolved_seed,
        out=resolved_out,
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(_format_value(v) for v in value)
    return str(value)


def write_csv(
    config: ExperimentConfig,
    header: list[str],
    rows: list[list],
    extra_metadata: dict | None = None,
) -> None:
    lines = [
        f"# qal-version = {__version__}",
        f"# timestamp = {datetime.now(timezone.utc).isoformat()}",
        f"# command = {config.command}",
        f"# schema = {SCHEMAS[config.command]}",
        f"# seed = {config.seed} [{config.provenance.get('seed', 'default')}]",
    ]
    for key in sorted(config.params):
        value = config.params[key]
        if value is None:
            continue
        lines.append(
            f"# {key} = {_format_value(value)} [{config.provenance.get(key, 'default')}]"
        )
    for key, value in (extra_metadata or {}).items():
        lines.append(f"# {key} = {_format_value(value)}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_format_value(v) for v in row))
    Path(config.out).write_text("\n".join(lines) + "\n")


def read_csv(path: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Parse back a tool-written CSV: metadata, header, string rows."""
    metadata: dict[str, str] = {}
    header: list[str] = []
    rows: list[list[str]] = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                metadata[key.strip()] = value.strip().split(" [")[0].strip()
            continue
        if not header:
            header = line.split(",")
            continue
        rows.append(line.split(","))
    return metadata, header, rows


# ---------------------------------------------------------------------------
# shared builders
# ---------------------------------------------------------------------------


def _build_channel(params: dict) -> tuple[BareDistribution, QRuleParams]:
    p = params.get("p")
    m = params.get("m")
    if p is None and m is None:
        raise ConfigError("provide --p or --m")
    if p is None:
        p = [1.0 / m] * m
    if m is not None and len(p) != m:
        raise ConfigError(f"m: expected {m} probabilities, got {len(p)}")
    m = len(p)
    labels = params.get("labels")
    if labels is None:
        labels = list(range(m))
    if len(labels) != m:
        raise ConfigError(f"labels: expected {m} values, got {len(labels)}")
    gamma = params.get("gamma") or [0.0] * m
    if len(gamma) != m:
        raise ConfigError(f"gamma: expected {m} rates, got {len(gamma)}")
    flat = params.get("misreads")
    if flat is None:
        misreads = np.zeros((m, m))
    else:
        if len(flat) != m * m:
            raise ConfigError(f"misreads: expected {m * m} entries, got {len(flat)}")
        misreads = np.asarray(flat, dtype=float).reshape(m, m)
    try:
        bare = BareDistribution(np.asarray(labels, float), np.asarray(p, float))
        rules = QRuleParams(np.asarray(gamma, float), misreads)
    except QalError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return bare, rules


def _parse_map(spec_text: str):
    name, _, argtext = spec_text.partition(":")
    args = [float(a) for a in argtext.split(",")] if argtext else []
    if name == "identity":
        return markov.make_map("identity")
    if name == "constant":
        return markov.make_map("constant", value=args[0] if args else 1.0)
    if name == "linear":
        return markov.make_map("linear", slope=args[0] if args else 1.0)
    if name == "quadratic":
        if len(args) != 2:
            raise ConfigError("quadratic map needs two parameters: quadratic:A,B")
        return markov.make_map("quadratic", slope=args[0], curvature=args[1])
    raise ConfigError(f"unknown map {name!r}")


def _build_particle(params: dict, eps: float) -> quantum.ParticleParams:
    pot_name, _, pot_arg = params["potential"].partition(":")
    apod_name, _, apod_arg = params["apodization"].partition(":")
    kwargs = dict(
        mass=params["mass"],
        alpha=params["alpha"],
        eps=eps,
        e0=params["e0"],
    )
    if pot_name == "free":
        kwargs["potential"] = "free"
    elif pot_name == "harmonic":
        kwargs["potential"] = "harmonic"
        kwargs["omega"] = float(pot_arg) if pot_arg else 1.0
    else:
        raise ConfigError(f"unknown potential {pot_name!r}")
    if apod_name == "none":
        kwargs["apodization"] = "none"
    elif apod_name == "gaussian":
        kwargs["apodization"] = "gaussian"
        kwargs["sigma_y"] = float(apod_arg) if apod_arg else 1.0
    elif apod_name == "window":
        kwargs["apodization"] = "window"
        kwargs["window"] = float(apod_arg) if apod_arg else 1.0
    else:
        raise ConfigError(f"unknown apodization {apod_name!r}")
    try:
        return quantum.ParticleParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _make_grid(params: dict) -> StateGrid:
    n = params["grid-nodes"]
    lo, hi = params["grid-min"], params["grid-max"]
    if n < 2 or hi <= lo:
        raise ConfigError("grid needs at least two nodes and grid-max > grid-min")
    return StateGrid.from_range(lo, hi, n)


# ---------------------------------------------------------------------------
# command handlers: each returns (exit code, header, rows, extra metadata)
# ---------------------------------------------------------------------------


def _run_histogram(config: ExperimentConfig):
    bare, rules = _build_channel(config.params)
    eff = effective_distribution(bare, rules)
    rows = [
        [j + 1, bare.labels[j], bare.probs[j], eff.probs[j]]
        for j in range(bare.m)
    ]
    meta = {"defect": eff.defect, "observed-total": eff.total}
    return 0, ["outcome", "label", "bare", "effective"], rows, meta


def _run_census(config: ExperimentConfig):
    report = paths.census(config.params["m"], config.params["n"])
    rows = [
        [l, report.raw_per_l[l], report.reduced_per_l[l]]
        for l in range(config.params["n"] + 1)
    ]
    meta = {
        "raw-total": report.raw_total,
        "reduced-total": report.reduced_total,
        "independent-nonclassical": report.independent_nonclassical,
    }
    return 0, ["l", "raw", "reduced"], rows, meta


def _run_identity_check(config: ExperimentConfig):
    bare, rules = _build_channel(config.params)
    gamma = rules.loss_rates
    report = paths.identity_check(
        bare,
        gamma,
        config.params["n"],
        max_iter=config.params["max-iter"],
        tol=config.params["tol"],
        restarts=config.params["restarts"],
        seed=config.seed,
    )
    rows = [[
        report.m,
        report.n,
        report.xi,
        report.amp_sq,
        report.gap,
        report.max_residual,
        report.bound,
        report.feasible,
        report.converged,
    ]]
    header = ["m", "n", "xi", "amp_sq", "gap", "residual", "bound", "feasible", "converged"]
    code = 0 if (report.feasible and report.converged) else 2
    return code, header, rows, {}


def _run_phase_solve(config: ExperimentConfig):
    bare, rules = _build_channel(config.params)
    from .core import symmetric_coupling

    coupling = symmetric_coupling(bare, rules.loss_rates)
    constraints = paths.build_constraints(bare, coupling, config.params["n"])
    assignment, report = paths.solve_phases(
        constraints,
        max_iter=config.params["max-iter"],
        tol=config.params["tol"],
        restarts=config.params["restarts"],
        seed=config.seed,
    )
    rows = [
        [str(paths.ClassicalPath(tuple(int(v) for v in path))), phase]
        for path, phase in zip(assignment.paths, assignment.phases)
    ]
    meta = {
        "max-residual": report.max_residual,
        "feasible": report.feasible,
        "converged": report.converged,
        "groups": int(report.group_sizes.size),
    }
    return (0 if report.feasible else 2), ["path", "phase"], rows, meta


def _game_spec(config: ExperimentConfig) -> markov.GameSpec:
    bare, rules = _build_channel(config.params)
    return markov.GameSpec(
        drift=_parse_map(config.params["drift"]),
        gain=_parse_map(config.params["gain"]),
        noise=bare,
        rules=rules,
    )


def _run_simulate_game(config: ExperimentConfig):
    spec = _game_spec(config)
    run_result = markov.simulate_game(
        spec,
        config.params["x0"],
        config.params["rounds"],
        config.params["trials"],
        config.seed,
    )
    values, freqs = run_result.distribution()
    rows = [
        [v, int(round(f * run_result.trials)), f] for v, f in zip(values, freqs)
    ]
    gamma = spec.rules.loss_rates
    meta = {
        "frozen-mean": run_result.mean_frozen,
        "frozen-expected": config.params["rounds"] * float(gamma @ spec.noise.probs),
    }
    return 0, ["final_state", "count", "frequency"], rows, meta


def _run_propagate_game(config: ExperimentConfig):
    spec = _game_spec(config)
    grid = _make_grid(config.params)
    kernel = markov.effective_kernel(spec, grid, boundary=config.params["boundary"])
    e0 = np.zeros(grid.size)
    e0[grid.snap_index(config.params["x0"])] = 1.0
    out = markov.propagate_distribution(e0, kernel, config.params["steps"])
    rows = [[grid.nodes[k], out[k]] for k in range(grid.size)]
    return 0, ["node", "probability"], rows, {"mass": float(out.sum())}


def _run_quantum_propagate(config: ExperimentConfig):
    params = _build_particle(config.params, config.params["eps"])
    grid = _make_grid(config.params)
    psi0 = quantum.WaveState.gaussian(
        grid,
        center=config.params["center"],
        sigma=config.params["sigma0"],
        momentum=config.params["momentum"],
        alpha=params.alpha,
    )
    result = quantum.propagate(psi0, params, config.params["steps"])
    state = result.state
    rows = [
        [grid.nodes[k], state.values[k].real, state.values[k].imag, state.density()[k]]
        for k in range(grid.size)
    ]
    meta = {
        "width": state.sigma_x(),
        "center": state.mean_x(),
        "norm-factor": result.accumulated_norm,
        "total-time": config.params["eps"] * config.params["steps"],
    }
    return 0, ["x", "re", "im", "density"], rows, meta


def _run_quantum_compare(config: ExperimentConfig):
    eps_values = config.params["eps-ladder"]
    params = _build_particle(config.params, min(eps_values))
    grid = _make_grid(config.params)

    def factory(g):
        return quantum.WaveState.gaussian(
            g,
            center=config.params["center"],
            sigma=config.params["sigma0"],
            momentum=config.params["momentum"],
            alpha=params.alpha,
        )

    report = quantum.convergence_study(
        params,
        grid,
        factory,
        config.params["time"],
        eps_values,
        reference_refine=config.params["refine"],
        reference_dt=config.params["reference-dt"],
    )
    rows = [[p.eps, p.l2_error] for p in report.points]
    return 0, ["eps", "l2_error"], rows, {"fitted-order": report.fitted_order}


def _run_uncertainty(config: ExperimentConfig):
    alpha = config.params["alpha"]
    grid = _make_grid(config.params)
    rows = []
    gaussian = quantum.WaveState.gaussian(grid, sigma=config.params["sigma0"], alpha=alpha)
    rows.append(["gaussian", quantum.uncertainty_product(gaussian, alpha)])
    rng = np.random.default_rng(config.seed)
    components = [(0.0, 1.0, 0.0), (1.5, 0.6, 2.0), (-2.0, 1.2, -1.0), (0.5, 0.8, 3.0)]
    for idx in range(config.params["n-states"]):
        coeffs = rng.normal(size=4) + 1j * rng.normal(size=4)
        values = np.zeros(grid.size, dtype=complex)
        for c, (center, sigma, mom) in zip(coeffs, components):
            values += c * quantum.WaveState.gaussian(grid, center, sigma, mom, alpha).values
        state = quantum.WaveState(grid, values).normalized()
        rows.append([f"random-{idx}", quantum.uncertainty_product(state, alpha)])
    floor = alpha / 2.0
    meta = {
        "floor": floor,
        "min-product": min(r[1] for r in rows),
    }
    return 0, ["state", "product"], rows, meta


def _run_roughness(config: ExperimentConfig):
    params = quantum.ParticleParams(
        mass=config.params["mass"], alpha=config.params["alpha"]
    )
    report = quantum.roughness_scan(
        params,
        config.params["eps-ladder"],
        n_steps=config.params["steps"],
        n_samples=config.params["samples"],
        seed=config.seed,
        mode=config.params["mode"],
    )
    rows = [[p.eps, p.mean_sq_increment, p.mean_sq_over_eps] for p in report.points]
    return 0, ["eps", "mean_sq", "mean_sq_over_eps"], rows, {"ratios": report.ratios()}


_HANDLERS = {
    "histogram": _run_histogram,
    "census": _run_census,
    "identity-check": _run_identity_check,
    "phase-solve": _run_phase_solve,
    "simulate-game": _run_simulate_game,
    "propagate-game": _run_propagate_game,
    "quantum-propagate": _run_quantum_propagate,
    "quantum-compare": _run_quantum_compare,
    "uncertainty": _run_uncertainty,
    "roughness": _run_roughness,
}


# ---------------------------------------------------------------------------
# plot script generation
# ---------------------------------------------------------------------------

_PLOT_BODIES = {
    "histogram": """\
import csv, sys
import matplotlib.pyplot as plt

rows = [r for r in csv.reader(open(CSV)) if not r[0].startswith('#')]
header, data = rows[0], rows[1:]
labels = [float(r[1]) for r in data]
bare = [float(r[2]) for r in data]
eff = [float(r[3]) for r in data]
x = range(len(labels))
plt.bar([i - 0.2 for i in x], bare, width=0.4, label='bare')
plt.bar([i + 0.2 for i in x], eff, width=0.4, label='effective')
plt.xticks(list(x), [str(v) for v in labels])
plt.xlabel('outcome value'); plt.ylabel('probability'); plt.legend()
""",
    "convergence": """\
import csv, sys
import matplotlib.pyplot as plt

rows = [r for r in csv.reader(open(CSV)) if not r[0].startswith('#')]
header, data = rows[0], rows[1:]
xs = [float(r[0]) for r in data]
ys = [float(r[1]) for r in data]
plt.loglog(xs, ys, 'o-')
plt.xlabel(header[0]); plt.ylabel(header[1]); plt.grid(True, which='both')
""",
    "wavepacket": """\
import csv, sys
import matplotlib.pyplot as plt

rows = [r for r in csv.reader(open(CSV)) if not r[0].startswith('#')]
header, data = rows[0], rows[1:]
xs = [float(r[0]) for r in data]
density = [float(r[3]) for r in data]
plt.plot(xs, density)
plt.xlabel('x'); plt.ylabel('|psi|^2')
""",
}

_PLOT_COMPAT = {
    "histogram": {"histogram"},
    "convergence": {"convergence", "roughness"},
    "wavepacket": {"wavepacket"},
}


def emit_plot_script(csv_path: str, kind: str, out_path: str | None = None) -> str:
    """Write a standalone matplotlib script rendering a tool-written CSV.

    The CSV's embedded schema tag must be compatible with the requested plot
    kind; the tool itself never renders anything.
    """
    if kind not in _PLOT_BODIES:
        raise UnknownSchema(f"no plot template for kind {kind!r}")
    metadata, _, _ = read_csv(csv_path)
    schema = metadata.get("schema")
    if schema is None:
        raise UnknownSchema(f"{csv_path} carries no schema tag")
    if schema not in _PLOT_COMPAT[kind]:
        raise UnknownSchema(f"schema {schema!r} is not plottable as {kind!r}")
    target = out_path or str(Path(csv_path).with_suffix(f".{kind}.py"))
    body = _PLOT_BODIES[kind]
    script = (
        "#!/usr/bin/env python3\n"
        f"# rendered from {Path(csv_path).name} (schema: {schema})\n"
        f"CSV = {str(csv_path)!r}\n"
        + body
        + "\nimport sys\n"
        "if len(sys.argv) > 1:\n"
        "    plt.savefig(sys.argv[1], dpi=150)\n"
        "else:\n"
        "    plt.show()\n"
    )
    Path(target).write_text(script)
    return target


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qal",
        description="Stochastic processes driven by lossy-read noise sources.",
    )
    parser.add_argument("--version", action="version", version=f"qal {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for command, specs in PARAM_SPECS.items():
        cp = sub.add_parser(command, help=f"run the {command} experiment")
        for key, spec in specs.items():
            cp.add_argument(
                f"--{key}",
                dest=key,
                default=None,
                metavar=spec.kind.upper(),
                help=spec.help + (f" (default: {spec.default})" if spec.default is not None else ""),
            )
        cp.add_argument("--config", default=None, help="key = value configuration file")
        cp.add_argument("--seed", default=None, help="64-bit seed (env QAL_SEED as fallback)")
        cp.add_argument("--out", default=None, help=f"output CSV path (default {command}.csv)")
    plot = sub.add_parser("plot-script", help="emit a matplotlib script for a CSV")
    plot.add_argument("csv", help="tool-written CSV file")
    plot.add_argument("--kind", required=True, choices=sorted(_PLOT_BODIES))
    plot.add_argument("--out", default=None, help="script path")
    return parser


def run(argv: list[str]) -> int:
    """Execute one CLI invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; exit 2 is reserved here for
        # numerical-report failures, so usage problems map to 1
        return 0 if not exc.code else 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        if args.command == "plot-script":
            target = emit_plot_script(args.csv, args.kind, args.out)
            print(target)
            return 0
        specs = PARAM_SPECS[args.command]
        flag_params = {key: getattr(args, key) for key in specs}
        config = parse_config(
            args.command,
            flag_params,
            args.config,
            seed=args.seed,
            out=args.out,
        )
        code, header, rows, meta = _HANDLERS[args.command](config)
        write_csv(config, header, rows, meta)
        return code
    except QalError as exc:
        print(f"qal {args.command}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))

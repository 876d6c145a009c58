"""Experiment harness: flat config files, seeded runs of the four learners,
metric CSV emission, oracle scoring, and run comparison."""

from __future__ import annotations

import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .baselines import BaselineLearner
from .features import FeatureMaps, contiguous_groups, grouped_action_features, indicator_matrix
from .gridworld import GridConfig, build_gridworld
from .mdp import MdpModel
from .metrics import WindowStats
from .oracle import build_q_matrix, perron_eigenpair
from .policy import SoftmaxFamily, SoftmaxPolicy
from .rsacfa import RsacfaLearner, save_checkpoint
from .schedules import default_schedules
from .tabular import TabularLearner

ALGORITHMS = ("rsacfa", "tabular", "avg_ac", "disc_ac")
GENERATORS = ("gridworld", "file")


class ConfigError(ValueError):
    """Malformed experiment configuration; the message names the field."""


class AlignmentError(ValueError):
    """Metric files do not share a common step grid."""


class NumericalBlowupError(RuntimeError):
    """A learner iterate became non-finite; carries the step index."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite learner iterate detected at step {step}")


@dataclass(frozen=True)
class ExperimentConfig:
    generator: str = "gridworld"
    side: int = 3
    slip_prob: float = 0.5
    fixed_cost_states: str = "corners"   # "corners", "none", or comma-separated indices
    even_costs: str = "6,8"
    odd_costs: str = "1,9"
    fixed_cost: float = 10.0
    model_file: str = ""
    ref_state: int = 0
    alpha: float = 1.0
    algorithm: str = "rsacfa"
    horizon: int = 1_000_000
    a0: float = 0.1
    b0: float = 0.05
    c0: float = 0.01
    a_exp: float = 0.55
    b_exp: float = 0.7
    c_exp: float = 0.9
    tau: float = 1e4
    agg_factor: int = 1
    warmup: int = 10_000
    delta1: float = 1e-6
    delta2: float = 1e-6
    proj_bound: float = 50.0
    gamma: float = 0.99
    temperature: float = 1.0
    seed: int = 0
    window: int = 10_000
    interval: int = 10_000
    oracle_max_states: int = 2000
    checkpoint: str = ""
    out: str = "metrics.csv"

    def validate(self) -> "ExperimentConfig":
        if self.generator not in GENERATORS:
            raise ConfigError(f"field 'generator' must be one of {GENERATORS}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"field 'algorithm' must be one of {ALGORITHMS}")
        if self.horizon <= 0:
            raise ConfigError("field 'horizon' must be positive")
        if self.window <= 0:
            raise ConfigError("field 'window' must be positive")
        if self.interval <= 0:
            raise ConfigError("field 'interval' must be positive")
        if self.alpha <= 0:
            raise ConfigError("field 'alpha' must be positive")
        if self.generator == "file" and not self.model_file:
            raise ConfigError("field 'model_file' is required when generator = file")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("field 'gamma' must lie in (0, 1)")
        if self.agg_factor < 1:
            raise ConfigError("field 'agg_factor' must be >= 1")
        return self

    def provenance(self) -> dict[str, str]:
        return {f.name: repr(getattr(self, f.name)) for f in fields(self)}


_CONFIG_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse a flat ``key = value`` file (one pair per line, '#' comments)."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"unknown field '{key}' (line {lineno})")
        kind = _CONFIG_TYPES[key]
        try:
            if kind == "int":
                values[key] = int(float(val)) if ("e" in val or "." in val) else int(val)
            elif kind == "float":
                values[key] = float(val)
            else:
                values[key] = val.strip("'\"")
        except ValueError:
            raise ConfigError(f"field '{key}': cannot parse {val!r} as {kind}") from None
    return ExperimentConfig(**values).validate()


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


def save_model_npz(path, model: MdpModel):
    np.savez(path, trans=model.trans, cost=model.cost,
             alpha=np.float64(model.alpha), ref_state=np.int64(model.ref_state))


def load_model_npz(path) -> MdpModel:
    with np.load(path) as z:
        return MdpModel(trans=z["trans"].copy(), cost=z["cost"].copy(),
                        alpha=float(z["alpha"]), ref_state=int(z["ref_state"]))


def _parse_fixed_states(spec: str, grid_side: int) -> tuple[int, ...] | None:
    s = spec.strip().lower()
    if s == "corners":
        return None  # GridConfig default
    if s in ("none", ""):
        return ()
    try:
        return tuple(int(tok) for tok in s.split(","))
    except ValueError:
        raise ConfigError(f"field 'fixed_cost_states': cannot parse {spec!r}") from None


def _parse_pair(spec: str, name: str) -> tuple[float, float]:
    try:
        lo, hi = (float(tok) for tok in spec.split(","))
    except ValueError:
        raise ConfigError(f"field '{name}': expected two comma-separated costs") from None
    return lo, hi


@dataclass(frozen=True)
class RunSetup:
    model: MdpModel
    family: SoftmaxFamily
    features: FeatureMaps
    groups: np.ndarray


def build_model(config: ExperimentConfig) -> MdpModel:
    if config.generator == "file":
        return load_model_npz(config.model_file)
    grid = GridConfig(
        side=config.side, slip_prob=config.slip_prob,
        fixed_cost_states=_parse_fixed_states(config.fixed_cost_states, config.side),
        even_costs=_parse_pair(config.even_costs, "even_costs"),
        odd_costs=_parse_pair(config.odd_costs, "odd_costs"),
        fixed_cost=config.fixed_cost,
    )
    return build_gridworld(grid, alpha=config.alpha, ref_state=config.ref_state)


def build_setup(config: ExperimentConfig) -> RunSetup:
    model = build_model(config)
    groups = contiguous_groups(model.n_states, config.agg_factor)
    phi = indicator_matrix(groups)
    features = FeatureMaps(phi=phi, psi=phi.copy())
    family = SoftmaxFamily(grouped_action_features(groups, model.n_actions),
                           temperature=config.temperature)
    return RunSetup(model=model, family=family, features=features, groups=groups)


def _config_schedules(config: ExperimentConfig):
    return default_schedules(a0=config.a0, b0=config.b0, c0=config.c0,
                             tau=config.tau, a_exp=config.a_exp,
                             b_exp=config.b_exp, c_exp=config.c_exp)


@dataclass
class RunResult:
    path: Path
    provenance: dict[str, str]
    columns: list[str]
    data: dict[str, np.ndarray]
    summary: dict[str, float]
    final_theta: np.ndarray


class _MetricsRecorder:
    """Accumulates window statistics and emits one row per interval."""

    def __init__(self, config: ExperimentConfig, setup: RunSetup,
                 theta_of, iterates_of):
        self.config = config
        self.setup = setup
        self.theta_of = theta_of        # state -> current actor parameter
        self.iterates_of = iterates_of  # state -> arrays checked for finiteness
        self.window = WindowStats(config.window)
        self.use_oracle = setup.model.n_states <= config.oracle_max_states
        self.columns = ["step", "mean", "std", "risk_cost"]
        if self.use_oracle:
            self.columns.append("oracle_cost")
        self.columns.append("elapsed_s")
        self.rows: list[list[float]] = []
        self.step = 0
        self._t0 = time.perf_counter()
        self._warm_v: np.ndarray | None = None

    def _oracle_cost(self, state) -> float:
        policy = SoftmaxPolicy(self.setup.family, self.theta_of(state))
        q = build_q_matrix(self.setup.model, policy)
        lam, v = perron_eigenpair(q, self.setup.model.ref_state, v0=self._warm_v)
        self._warm_v = v
        return float(np.log(lam))

    def __call__(self, cost: float, state):
        self.window.push(cost)
        self.step += 1
        if self.step % self.config.interval == 0:
            for arr in self.iterates_of(state):
                if not np.isfinite(arr).all():
                    raise NumericalBlowupError(self.step)
            row = [float(self.step), self.window.mean(), self.window.std(),
                   self.window.risk_cost(self.config.alpha)]
            if self.use_oracle:
                row.append(self._oracle_cost(state))
            row.append(time.perf_counter() - self._t0)
            self.rows.append(row)

    def summary(self) -> dict[str, float]:
        out = {"steps": float(self.step), "mean": self.window.mean(),
               "std": self.window.std(),
               "risk_cost": self.window.risk_cost(self.config.alpha)}
        if self.use_oracle and self.rows:
            out["oracle_cost"] = self.rows[-1][self.columns.index("oracle_cost")]
        return out


def _format_value(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() and abs(x) < 2**53 else repr(float(x))


def write_metrics(path, provenance: dict[str, str], columns: list[str],
                  rows: list[list[float]], summary: dict[str, float]):
    lines = [f"# {k} = {v}" for k, v in sorted(provenance.items())]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format_value(x) for x in row))
    lines.append("# summary " + " ".join(f"{k}={_format_value(v)}"
                                         for k, v in sorted(summary.items())))
    Path(path).write_text("\n".join(lines) + "\n")


def load_metrics(path):
    """Read a metrics CSV back: (provenance, columns, data arrays, summary)."""
    provenance: dict[str, str] = {}
    summary: dict[str, float] = {}
    columns: list[str] | None = None
    rows: list[list[float]] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# summary"):
            for tok in line[len("# summary"):].split():
                k, _, v = tok.partition("=")
                summary[k] = float(v)
        elif line.startswith("#"):
            k, _, v = line[1:].partition("=")
            provenance[k.strip()] = v.strip()
        elif columns is None:
            columns = line.split(",")
        else:
            rows.append([float(tok) for tok in line.split(",")])
    if columns is None:
        raise ValueError(f"{path}: no header row found")
    table = np.asarray(rows, dtype=float).reshape(len(rows), len(columns))
    data = {c: table[:, k] for k, c in enumerate(columns)}
    return provenance, columns, data, summary


def run_experiment(config: ExperimentConfig, out_path=None,
                   seed: int | None = None) -> RunResult:
    """Run one configured experiment and write its metrics CSV.

    Deterministic in (config, seed); raises :class:`NumericalBlowupError`
    if a learner iterate becomes non-finite.
    """
    config = config.validate()
    if seed is not None:
        config = replace(config, seed=int(seed))
    if out_path is not None:
        config = replace(config, out=str(out_path))
    setup = build_setup(config)
    schedules = _config_schedules(config)

    if config.algorithm == "rsacfa":
        learner = RsacfaLearner(setup.model, setup.family, setup.features,
                                schedules, delta1=config.delta1,
                                delta2=config.delta2, proj_bound=config.proj_bound,
                                warmup=config.warmup)
        recorder = _MetricsRecorder(
            config, setup, theta_of=lambda s: s.theta,
            iterates_of=lambda s: (s.theta, s.r, s.w_tilde))
        state = learner.run(config.horizon, seed=config.seed, on_step=recorder)
        final_theta = state.theta.copy()
        if config.checkpoint:
            save_checkpoint(config.checkpoint, state, schedules=schedules)
    elif config.algorithm == "tabular":
        learner = TabularLearner(setup.model, setup.family, schedules,
                                 theta=np.zeros(setup.family.dim),
                                 warmup=config.warmup)
        recorder = _MetricsRecorder(
            config, setup, theta_of=lambda s: s.theta,
            iterates_of=lambda s: (s.theta, s.critic.values, s.grad.w))
        learner.run(config.horizon, seed=config.seed, on_step=recorder)
        final_theta = learner.theta.copy()
        if config.checkpoint:
            np.savez(config.checkpoint, theta=final_theta,
                     n=np.int64(learner.n))
    else:
        kind = "average" if config.algorithm == "avg_ac" else "discounted"
        learner = BaselineLearner(setup.model, setup.family, setup.features.phi,
                                  kind, schedules, gamma=config.gamma,
                                  proj_bound=config.proj_bound)
        recorder = _MetricsRecorder(
            config, setup, theta_of=lambda s: s.theta,
            iterates_of=lambda s: (s.theta, s.v))
        state = learner.run(config.horizon, seed=config.seed, on_step=recorder)
        final_theta = state.theta.copy()
        if config.checkpoint:
            np.savez(config.checkpoint, theta=final_theta, n=np.int64(state.n))

    summary = recorder.summary()
    write_metrics(config.out, config.provenance(), recorder.columns,
                  recorder.rows, summary)
    table = np.asarray(recorder.rows, dtype=float).reshape(
        len(recorder.rows), len(recorder.columns))
    data = {c: table[:, k] for k, c in enumerate(recorder.columns)}
    return RunResult(path=Path(config.out), provenance=config.provenance(),
                     columns=recorder.columns, data=data, summary=summary,
                     final_theta=final_theta)


def compare_runs(paths, out_path):
    """Merge several metric files on their shared step grid.

    Output columns are ``step`` then ``<label>_mean``, ``<label>_std``,
    ``<label>_risk`` per input, labelled by each run's algorithm (with
    numeric suffixes on repeats).  Raises :class:`AlignmentError` when the
    step grids differ.
    """
    paths = [Path(p) for p in paths]
    if not paths:
        raise ValueError("compare needs at least one metrics file")
    loaded = [load_metrics(p) for p in paths]
    steps = loaded[0][2]["step"]
    for p, (_, _, data, _) in zip(paths[1:], loaded[1:]):
        other = data["step"]
        if other.shape != steps.shape or (other != steps).any():
            raise AlignmentError(f"{p} does not share the step grid of {paths[0]}")
    labels: list[str] = []
    seen: dict[str, int] = {}
    for prov, _, _, _ in loaded:
        base = prov.get("algorithm", "run").strip("'\"")
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    columns = ["step"]
    table = [steps]
    for label, (_, _, data, _) in zip(labels, loaded):
        for src, suffix in (("mean", "mean"), ("std", "std"), ("risk_cost", "risk")):
            columns.append(f"{label}_{suffix}")
            table.append(data[src])
    rows = np.column_stack(table)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_value(x) for x in row))
    Path(out_path).write_text("\n".join(lines) + "\n")
    return columns, {c: rows[:, k] for k, c in enumerate(columns)}


def oracle_score(config: ExperimentConfig, theta: np.ndarray) -> float:
    """Risk-sensitive cost log(lambda) of the policy theta under the
    configured model."""
    setup = build_setup(config)
    policy = SoftmaxPolicy(setup.family, np.asarray(theta, dtype=float))
    q = build_q_matrix(setup.model, policy)
    lam, _ = perron_eigenpair(q, setup.model.ref_state)
    return float(np.log(lam))

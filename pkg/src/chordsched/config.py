"""Experiment configuration and the matrix config-file format.

The file format is line oriented::

    # comment
    [matrix]
    workloads = light, heavy
    churn = low, high
    policies = policy0, policy1, policy2, gentle
    seed = 7
    repeats = 3

    [policy gentle]
    k_wmc = 4
    k_ec = 16

    [simulation]
    request_cost = 0.02

Keys are ``name = value``; lists are comma separated.  Unknown sections or
keys are errors reported with their line number.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

from .autonomic import POLICIES, PolicyConfig
from .errors import ConfigError, InvalidArgument
from .seeds import derive_seed
from .simnet.churn import KINDS as CHURN_KINDS
from .simnet.experiment import DEFAULT_NODE_COUNT, SimParams
from .simnet.transport import LatencyModel, ProcessingModel
from .simnet.workload import KINDS as WORKLOAD_KINDS

OUTPUT_ENV = "CHORDSCHED_OUTPUT_DIR"
DEFAULT_HORIZON = 7200.0


def default_output_dir():
    return os.environ.get(OUTPUT_ENV, "chordsched-out")


@dataclass(frozen=True)
class ExperimentConfig:
    workload: str
    churn: str
    policy: str = "policy0"
    node_count: int = DEFAULT_NODE_COUNT
    seed: int = 0
    repeats: int = 3
    horizon: float = DEFAULT_HORIZON
    retry_on_error: bool = False
    output_dir: str = field(default_factory=default_output_dir)
    sim: SimParams = field(default_factory=SimParams)
    policy_params: PolicyConfig | None = None

    def policy_config(self):
        if self.policy_params is not None:
            return self.policy_params
        try:
            return POLICIES[self.policy]
        except KeyError:
            raise InvalidArgument(f"unknown policy {self.policy!r}") from None

    def validate(self):
        if self.workload not in WORKLOAD_KINDS:
            raise InvalidArgument(f"unknown workload {self.workload!r}")
        if self.churn not in CHURN_KINDS:
            raise InvalidArgument(f"unknown churn pattern {self.churn!r}")
        self.policy_config()
        if self.node_count < 1:
            raise InvalidArgument("node_count must be at least 1")
        if self.repeats < 1:
            raise InvalidArgument("repeats must be at least 1")
        if self.horizon <= 0:
            raise InvalidArgument("horizon must be positive")
        return self

    def with_seed(self, seed):
        return dataclasses.replace(self, seed=seed)


@dataclass(frozen=True)
class MatrixConfig:
    workloads: tuple
    churns: tuple
    policies: tuple
    seed: int = 0
    repeats: int = 3
    node_count: int = DEFAULT_NODE_COUNT
    horizon: float = DEFAULT_HORIZON
    retry_on_error: bool = False
    output_dir: str = field(default_factory=default_output_dir)
    sim: SimParams = field(default_factory=SimParams)
    policy_defs: dict = field(default_factory=dict)

    def cells(self):
        return [(w, c, p) for w in self.workloads for c in self.churns for p in self.policies]

    def cell_seed(self, workload, churn):
        # the policy is left out on purpose: all policies of a (workload,
        # churn) pair see the same churn and key sequences
        return derive_seed(self.seed, workload, churn) % (1 << 62)

    def experiment(self, workload, churn, policy, repeat):
        return ExperimentConfig(
            workload=workload, churn=churn, policy=policy, node_count=self.node_count,
            seed=self.cell_seed(workload, churn) + repeat, repeats=self.repeats,
            horizon=self.horizon, retry_on_error=self.retry_on_error,
            output_dir=self.output_dir, sim=self.sim,
            policy_params=self.policy_defs.get(policy),
        )


def cell_name(workload, churn, policy):
    return f"{workload}__{churn}__{policy}"


# -- parsing -------------------------------------------------------------

_MATRIX_KEYS = {
    "workloads", "churn", "policies", "seed", "repeats", "nodes", "horizon",
    "retry_on_error", "output_dir",
}
_POLICY_KEYS = {f.name for f in dataclasses.fields(PolicyConfig)}
_LATENCY_KEYS = {f.name for f in dataclasses.fields(LatencyModel)}
_PROCESSING_KEYS = {f.name for f in dataclasses.fields(ProcessingModel)}
_SIM_KEYS = ({f.name for f in dataclasses.fields(SimParams)} - {"latency", "processing"}) | _LATENCY_KEYS | _PROCESSING_KEYS


def _split(text):
    lines = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", line=lineno)
            section = line[1:-1].strip()
            lines.append((lineno, section, None, None))
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if section is None:
            raise ConfigError("key outside of any section", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=lineno)
        lines.append((lineno, section, key, value))
    return lines


def _num(value, kind, lineno, key):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}", line=lineno) from None


def _bool(value, lineno, key):
    v = value.lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}", line=lineno)


def _list(value):
    return tuple(v.strip() for v in value.split(",") if v.strip())


def parse_matrix(text, path=None):
    """Parse config-file text into a :class:`MatrixConfig`."""
    try:
        return _parse(text)
    except ConfigError as exc:
        if path is None:
            raise
        raise exc.located(path) from None


def _parse(text):
    matrix = {}
    where = {}
    policies = {}
    sim = {}
    seen_sections = set()
    for lineno, section, key, value in _split(text):
        if key is None:
            if section in seen_sections:
                raise ConfigError(f"duplicate section [{section}]", line=lineno)
            seen_sections.add(section)
            if section not in ("matrix", "simulation") and not section.startswith("policy "):
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            if section.startswith("policy "):
                policies[section.split(None, 1)[1].strip()] = {}
            continue
        if section == "matrix":
            if key not in _MATRIX_KEYS:
                raise ConfigError(f"unknown key {key!r} in [matrix]", line=lineno)
            if key in matrix:
                raise ConfigError(f"duplicate key {key!r}", line=lineno)
            matrix[key] = value
            where[key] = lineno
        elif section == "simulation":
            if key not in _SIM_KEYS:
                raise ConfigError(f"unknown key {key!r} in [simulation]", line=lineno)
            sim[key] = (value, lineno)
        else:
            name = section.split(None, 1)[1].strip()
            if key not in _POLICY_KEYS:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line=lineno)
            policies[name][key] = (value, lineno)

    if "matrix" not in seen_sections:
        raise ConfigError("missing [matrix] section", line=None)
    for required in ("workloads", "churn", "policies"):
        if required not in matrix:
            raise ConfigError(f"[matrix] is missing {required!r}")

    workloads = _list(matrix["workloads"])
    for w in workloads:
        if w not in WORKLOAD_KINDS:
            raise ConfigError(f"unknown workload {w!r} (choose from {', '.join(WORKLOAD_KINDS)})", line=where["workloads"])
    churns = _list(matrix["churn"])
    for c in churns:
        if c not in CHURN_KINDS:
            raise ConfigError(f"unknown churn pattern {c!r} (choose from {', '.join(CHURN_KINDS)})", line=where["churn"])

    policy_defs = {}
    for name, entries in policies.items():
        base = POLICIES.get(name, PolicyConfig())
        kwargs = {}
        for key, (value, lineno) in entries.items():
            kwargs[key] = value if key == "mode" else _num(value, float, lineno, key)
        try:
            policy_defs[name] = dataclasses.replace(base, **kwargs)
        except InvalidArgument as exc:
            line = min(ln for _, ln in entries.values()) if entries else None
            raise ConfigError(f"[policy {name}]: {exc}", line=line) from None

    names = _list(matrix["policies"])
    for p in names:
        if p not in POLICIES and p not in policy_defs:
            raise ConfigError(f"unknown policy {p!r}; define it in a [policy {p}] section", line=where["policies"])
    if not (workloads and churns and names):
        raise ConfigError("workloads, churn and policies must be non-empty")

    kwargs = {}
    if "seed" in matrix:
        kwargs["seed"] = _num(matrix["seed"], int, where["seed"], "seed")
    if "repeats" in matrix:
        kwargs["repeats"] = _num(matrix["repeats"], int, where["repeats"], "repeats")
        if kwargs["repeats"] < 1:
            raise ConfigError("repeats must be at least 1", line=where["repeats"])
    if "nodes" in matrix:
        kwargs["node_count"] = _num(matrix["nodes"], int, where["nodes"], "nodes")
        if kwargs["node_count"] < 1:
            raise ConfigError("nodes must be at least 1", line=where["nodes"])
    if "horizon" in matrix:
        kwargs["horizon"] = _num(matrix["horizon"], float, where["horizon"], "horizon")
        if kwargs["horizon"] <= 0:
            raise ConfigError("horizon must be positive", line=where["horizon"])
    if "retry_on_error" in matrix:
        kwargs["retry_on_error"] = _bool(matrix["retry_on_error"], where["retry_on_error"], "retry_on_error")
    if "output_dir" in matrix:
        kwargs["output_dir"] = matrix["output_dir"]

    kwargs["sim"] = _parse_sim(sim)
    return MatrixConfig(workloads, churns, names, policy_defs=policy_defs, **kwargs)


def _parse_sim(entries):
    lat, proc, top = {}, {}, {}
    for key, (value, lineno) in entries.items():
        kind = int if key in ("ring_bits", "successor_list", "max_attempts") else float
        v = _num(value, kind, lineno, key)
        (lat if key in _LATENCY_KEYS else proc if key in _PROCESSING_KEYS else top)[key] = v
    try:
        latency = LatencyModel(**lat)
        processing = ProcessingModel(**proc)
        params = SimParams(latency=latency, processing=processing, **top)
    except ValueError as exc:
        line = min(ln for _, ln in entries.values()) if entries else None
        raise ConfigError(f"[simulation]: {exc}", line=line) from None
    if not 1 <= params.ring_bits <= 64:
        raise ConfigError("ring_bits must be in [1, 64]", line=entries["ring_bits"][1])
    if params.successor_list < 1:
        raise ConfigError("successor_list must be at least 1", line=entries["successor_list"][1])
    return params


def load_matrix(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    return parse_matrix(text, path=str(path))

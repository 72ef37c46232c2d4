"""YAML experiment configuration.

Every parse error is raised as :class:`ConfigError` carrying the dotted key
of the offending entry, e.g. ``ensemble.sigma`` or ``fid.grid.dt``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .dressing import (
    BcsChannel,
    ChannelEnsemble,
    EnsembleDescriptor,
    GenericChannel,
    OscillatorChannel,
    SpinBosonChannel,
    SpinZChannel,
)
from .errors import CapacityError, ConfigError, DressqsimError
from .linalg import DEFAULT_POLICY, NumericalPolicy
from .models import BcsSpec, MatrixModelSpec, ModelSpec, OscillatorSpec, SpinBosonSpec, SpinModelSpec, hilbert_dim

TASKS = ("spectrum", "fid", "qpe", "validate")
MODEL_KINDS = ("spin", "oscillator", "spin_boson", "bcs", "matrix")


@dataclass
class ExperimentConfig:
    task: str
    model: ModelSpec | None
    ensemble: EnsembleDescriptor | None = None
    dressing_mode: str = "exact"
    master_seed: int = 0
    threads: int = 1
    policy: NumericalPolicy = DEFAULT_POLICY
    output_dir: str = "out"
    fid: dict = field(default_factory=dict)
    qpe: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of the effective config."""
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canon.encode()).hexdigest()


def _section(raw: dict, key: str, required: bool = False) -> dict:
    value = raw.get(key)
    if value is None:
        if required:
            raise ConfigError("missing required section", key=key)
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"expected a mapping, got {type(value).__name__}", key=key)
    return value


def _number(block: dict, name: str, prefix: str, default=None, kind=float):
    key = f"{prefix}.{name}" if prefix else name
    if name not in block or block[name] is None:
        if default is None:
            raise ConfigError("missing required value", key=key)
        return default
    value = block[name]
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", key=key)
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected {kind.__name__}, got {value!r}", key=key) from None
    if kind is float and not math.isfinite(out):
        raise ConfigError("value must be finite", key=key)
    if kind is int and out != value:
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    return out


def parse_complex(value, key: str) -> complex:
    """Accept numbers, ``"1+2j"`` strings and ``[re, im]`` pairs."""
    try:
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, str):
            return complex(value.replace(" ", ""))
        return complex(value)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot read {value!r} as a complex number", key=key) from None


def parse_vector(value, key: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError("expected a non-empty list", key=key)
    return np.array([parse_complex(v, f"{key}[{i}]") for i, v in enumerate(value)])


def parse_matrix(value, key: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError("expected a non-empty list of rows", key=key)
    rows = [parse_vector(row, f"{key}[{i}]") for i, row in enumerate(value)]
    if any(len(r) != len(rows) for r in rows):
        raise ConfigError("matrix must be square", key=key)
    return np.array(rows)


def _wrap(key: str, build):
    """Run ``build`` and re-raise contract failures against ``key``."""
    try:
        return build()
    except (ConfigError, CapacityError):
        raise
    except (DressqsimError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key=key) from None


def parse_model(block: dict, policy: NumericalPolicy = DEFAULT_POLICY) -> ModelSpec:
    kind = block.get("kind")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}", key="model.kind")
    p = "model"
    if kind == "spin":
        def build():
            return SpinModelSpec(
                n_qubits=_number(block, "n_qubits", p, kind=int),
                B=_number(block, "B", p, 0.0),
                cost=block.get("cost", "ising"),
                h=tuple(block.get("h", ())),
                couplings=tuple(tuple(c) for c in block.get("couplings", ())),
                index_state=_number(block, "index_state", p, 0, kind=int),
            )
    elif kind == "oscillator":
        def build():
            return OscillatorSpec(
                masses=tuple(block.get("masses", ())),
                stiffness=tuple(block.get("stiffness", ())),
                couplings=tuple(tuple(c) for c in block.get("couplings", ())),
                n_max=_number(block, "n_max", p, 8, kind=int),
            )
    elif kind == "spin_boson":
        def build():
            return SpinBosonSpec(
                B=_number(block, "B", p, 0.0),
                modes=tuple(tuple(m) for m in block.get("modes", ())),
                n_max=_number(block, "n_max", p, 8, kind=int),
            )
    elif kind == "bcs":
        def build():
            V = block.get("V")
            return BcsSpec(
                eps=tuple(block.get("eps", ())),
                G=block.get("G"),
                V=None if V is None else tuple(tuple(r) for r in V),
            )
    else:
        def build():
            return MatrixModelSpec(parse_matrix(block.get("matrix"), "model.matrix"))
    spec = _wrap("model", build)
    dim = hilbert_dim(spec)
    if dim > policy.max_dim:
        raise CapacityError(f"model: Hilbert dimension {dim} exceeds max {policy.max_dim}")
    return spec


def _discrete_channel(family: str, entry: dict, key: str):
    if not isinstance(entry, dict):
        raise ConfigError("each channel must be a mapping", key=key)

    def floats(name):
        return tuple(float(v) for v in entry.get(name, ()))

    def build():
        if family == "spin_z":
            return SpinZChannel(floats("a"))
        if family == "oscillator":
            return OscillatorChannel(floats("a"), floats("aprime"))
        if family == "spin_boson":
            return SpinBosonChannel(float(entry.get("a0", 0.0)), tuple(parse_complex(v, f"{key}.a") for v in entry.get("a", ())))
        if family == "bcs_q":
            return BcsChannel(int(entry["q"]), floats("g"), int(entry.get("qprime", 0)), float(entry.get("angle", math.pi / 2)))
        return GenericChannel(parse_matrix(entry.get("P"), f"{key}.P"), float(entry.get("eps", 1.0)))

    return _wrap(key, build)


def parse_ensemble(block: dict) -> EnsembleDescriptor | None:
    if not block:
        return None
    p = "ensemble"
    family = block.get("family")
    distribution = block.get("distribution", "gaussian")
    channels: tuple = ()
    weights = None
    if distribution == "discrete":
        raw_channels = block.get("channels") or []
        channels = tuple(_discrete_channel(family, c, f"{p}.channels[{i}]") for i, c in enumerate(raw_channels))
        if block.get("weights") is not None:
            weights = tuple(float(w) for w in block["weights"])
            if len(weights) != len(channels):
                raise ConfigError("one weight per channel required", key=f"{p}.weights")
    return EnsembleDescriptor(
        family=family,
        distribution=distribution,
        count=_number(block, "count", p, 1, kind=int),
        sigma=_number(block, "sigma", p, 0.0),
        half_width=_number(block, "half_width", p, 0.0),
        q=_number(block, "q", p, 1, kind=int),
        qprime=_number(block, "qprime", p, 0, kind=int),
        angle=_number(block, "angle", p, math.pi / 2),
        eps=_number(block, "eps", p, 1.0),
        channels=channels,
        weights=weights,
    )


def parse_policy(block: dict) -> NumericalPolicy:
    known = {f.name: f.type for f in fields(NumericalPolicy)}
    overrides = {}
    for name, value in block.items():
        if name not in known:
            raise ConfigError(f"unknown policy field; expected one of {sorted(known)}", key=f"policy.{name}")
        overrides[name] = _number(block, name, "policy", kind=int if name == "max_dim" else float)
    return DEFAULT_POLICY.replace(**overrides)


def build_config(raw: dict, seed: int | None = None, threads: int | None = None, out: str | None = None) -> ExperimentConfig:
    """Validate a parsed mapping; ``seed``/``threads``/``out`` override the file."""
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a mapping", key="<root>")
    raw = dict(raw)
    task = raw.get("task")
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {TASKS}", key="task")
    if seed is not None:
        raw["master_seed"] = seed
    master_seed = _number(raw, "master_seed", "", 0, kind=int)
    if not 0 <= master_seed < 2**64:
        raise ConfigError("must be a 64-bit unsigned integer", key="master_seed")
    dressing_mode = raw.get("dressing_mode", "exact")
    if dressing_mode not in ("exact", "first_order"):
        raise ConfigError(f"unknown dressing mode {dressing_mode!r}", key="dressing_mode")
    policy = parse_policy(_section(raw, "policy"))
    model = parse_model(_section(raw, "model", required=True), policy) if task != "validate" or "model" in raw else None
    output = _section(raw, "output")
    for name in ("fid", "qpe"):
        if task == name and name not in raw:
            raise ConfigError("missing required section for this task", key=name)
    cfg = ExperimentConfig(
        task=task,
        model=model,
        ensemble=parse_ensemble(_section(raw, "ensemble")),
        dressing_mode=dressing_mode,
        master_seed=master_seed,
        threads=threads if threads is not None else _number(raw, "threads", "", 1, kind=int),
        policy=policy,
        output_dir=out if out is not None else str(output.get("dir", "out")),
        fid=_section(raw, "fid"),
        qpe=_section(raw, "qpe"),
        validate=_section(raw, "validate"),
    )
    if cfg.threads < 1:
        raise ConfigError("must be at least 1", key="threads")
    # output location and thread count do not change numeric results
    cfg.raw = {k: v for k, v in raw.items() if k not in ("output", "threads")}
    return cfg


def load_config(path, seed: int | None = None, threads: int | None = None, out: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", key="--config") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", key="--config") from None
    return build_config(raw, seed, threads, out)


def realize_ensemble(cfg: ExperimentConfig) -> ChannelEnsemble:
    """Sampled ensemble for ``cfg``; an absent block means the noiseless baseline."""
    from .dressing import sample_ensemble

    if cfg.ensemble is None:
        return ChannelEnsemble.noiseless()
    return _wrap("ensemble", lambda: sample_ensemble(cfg.ensemble, cfg.master_seed, cfg.model))

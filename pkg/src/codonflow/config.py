"""Structured run configuration: YAML in, validated dataclasses out.

A config file has five sections (objectives, policy, training, curriculum,
run) plus top-level `seed` and `threads`. Every key has a default, unknown
keys are rejected with their section named, and parse -> serialize -> parse
is the identity on the resulting dataclasses.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from .curriculum import SCHEDULES, CurriculumConfig, named_config
from .exceptions import ConfigurationError, InputError
from .objectives import ObjectivesConfig, check_weights
from .policy import HIDDEN_DEFAULT, L_MAX_DEFAULT
from .training import TrainingConfig

RUN_SCHEDULES = ("none",) + SCHEDULES


@dataclass
class PolicySettings:
    """Network shape for the shared forward policy."""

    hidden: int = HIDDEN_DEFAULT
    l_max: int = L_MAX_DEFAULT

    def __post_init__(self):
        if self.hidden < 1 or self.l_max < 1:
            raise ConfigurationError("policy hidden width and l_max must be >= 1")


@dataclass
class RunSettings:
    """Command-level settings: inputs, outputs, and sampling sizes."""

    schedule: str = "none"
    protein: str | None = None
    protein_file: str | None = None
    protein_format: str | None = None
    weights: tuple = (0.3, 0.3, 0.4)
    n_samples: int = 100
    top_n: int = 50
    cap: int = 1_000_000
    output_dir: str = "."
    checkpoint: str | None = None
    usage_table: str | None = None

    def __post_init__(self):
        if self.schedule not in RUN_SCHEDULES:
            raise ConfigurationError(
                f"unknown schedule {self.schedule!r}; use one of {RUN_SCHEDULES}"
            )
        if self.protein_format not in (None, "fasta", "csv"):
            raise ConfigurationError(
                f"protein_format must be 'fasta' or 'csv', got {self.protein_format!r}"
            )
        self.weights = tuple(float(v) for v in self.weights)
        check_weights(self.weights)
        if self.n_samples < 1 or self.top_n < 1 or self.cap < 1:
            raise ConfigurationError("n_samples, top_n, and cap must all be >= 1")


@dataclass
class RunConfig:
    """Everything one command needs, with defaults matching the vetted tables."""

    seed: int = 0
    threads: int = 1
    preset: str | None = None
    objectives: ObjectivesConfig = field(default_factory=ObjectivesConfig)
    policy: PolicySettings = field(default_factory=PolicySettings)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    run: RunSettings = field(default_factory=RunSettings)

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")


_TUPLE_KEYS = {
    ("objectives", "gc_band"),
    ("objectives", "external_bounds"),
    ("training", "dirichlet_alpha"),
    ("training", "fixed_weights"),
    ("curriculum", "w_eval"),
    ("run", "weights"),
}


def _coerce(section: str, key: str, value):
    if (section, key) in _TUPLE_KEYS and isinstance(value, (list, tuple)):
        return tuple(value)
    if section == "curriculum" and key == "tasks" and isinstance(value, (list, tuple)):
        return tuple(tuple(pair) for pair in value)
    return value


def _section_fields(cls) -> dict:
    return {f.name: f for f in dataclasses.fields(cls)}


def _build_section(section: str, cls, data: dict, base=None):
    if not isinstance(data, dict):
        raise ConfigurationError(f"config section '{section}' must be a mapping")
    known = _section_fields(cls)
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) in config section '{section}': {', '.join(unknown)}"
        )
    kwargs = {k: _coerce(section, k, v) for k, v in data.items()}
    if base is not None:
        return dataclasses.replace(base, **kwargs)
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a mapping of sections")
    sections = {
        "objectives": ObjectivesConfig,
        "policy": PolicySettings,
        "training": TrainingConfig,
        "curriculum": CurriculumConfig,
        "run": RunSettings,
    }
    top_known = {"seed", "threads", "preset", *sections}
    unknown = sorted(set(data) - top_known)
    if unknown:
        raise ConfigurationError(f"unknown top-level config key(s): {', '.join(unknown)}")

    preset = data.get("preset")
    built = {}
    for name, cls in sections.items():
        base = None
        if name == "curriculum" and preset is not None:
            base = named_config(preset)
        built[name] = _build_section(name, cls, data.get(name, {}), base=base)
    return RunConfig(
        seed=int(data.get("seed", 0)),
        threads=int(data.get("threads", 1)),
        preset=preset,
        **built,
    )


def config_to_dict(cfg: RunConfig) -> dict:
    def plain(value):
        if isinstance(value, tuple):
            return [plain(v) for v in value]
        if isinstance(value, (list,)):
            return [plain(v) for v in value]
        return value

    out = {"seed": cfg.seed, "threads": cfg.threads}
    if cfg.preset is not None:
        out["preset"] = cfg.preset
    for name in ("objectives", "policy", "training", "curriculum", "run"):
        section = getattr(cfg, name)
        out[name] = {
            f.name: plain(getattr(section, f.name)) for f in dataclasses.fields(section)
        }
    return out


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as err:
        raise InputError(f"cannot read config file {path}: {err}") from err
    except yaml.YAMLError as err:
        raise InputError(f"config file {path} is not valid YAML: {err}") from err
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True, default_flow_style=None)


def save_config(path, cfg: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_config(cfg))

"""Run configuration: one versioned YAML document, strictly parsed.

Unknown keys are errors (fail-fast); every block has defaults so a
minimal config is just `version: 1`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .conditioning import ConditioningConfig
from .diffusion import SamplerConfig
from .errors import ConfigError

CONFIG_VERSION = 1


@dataclass
class DataConfig:
    manifest: str | None = None


@dataclass
class TrainingConfig:
    steps: int = 200
    batch_size: int = 4
    lr: float = 1e-4
    null_condition_prob: float = 0.1
    checkpoint_every: int = 100
    seed: int = 0


@dataclass
class LatentGuidanceConfig:
    use_style_encoder: bool = True


@dataclass
class DiffusionConfig:
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    unet_width: int = 32
    vae_widths: tuple[int, int, int] = (32, 64, 128)


@dataclass
class RunConfig:
    version: int = CONFIG_VERSION
    seed: int = 0
    device: str = "cpu"
    checkpoint: str | None = None
    data: DataConfig = field(default_factory=DataConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    conditioning: ConditioningConfig = field(default_factory=ConditioningConfig)
    latent: LatentGuidanceConfig = field(default_factory=LatentGuidanceConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, obj: dict, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(obj).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = set(obj) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in obj.items():
        f = known[name]
        if hasattr(f.type, "__dataclass_fields__"):
            kwargs[name] = _build(f.type, value, f"{where}.{name}")
        elif name == "vae_widths" and isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{where}: {e}") from e


_NESTED = {
    "data": DataConfig,
    "training": TrainingConfig,
    "conditioning": ConditioningConfig,
    "latent": LatentGuidanceConfig,
    "diffusion": DiffusionConfig,
    "sampler": SamplerConfig,
}


def config_from_dict(obj: dict) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a mapping")
    if "version" not in obj:
        raise ConfigError("config must declare a 'version' field")
    if obj["version"] != CONFIG_VERSION:
        raise ConfigError(
            f"unsupported config version {obj['version']} (expected {CONFIG_VERSION})"
        )
    unknown = set(obj) - ({"version", "seed", "device", "checkpoint"} | set(_NESTED))
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    kwargs: dict = {k: obj[k] for k in ("version", "seed", "device", "checkpoint") if k in obj}
    for name, cls in _NESTED.items():
        if name in obj:
            kwargs[name] = _build(cls, obj[name], name)
    return RunConfig(**kwargs)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with path.open() as fh:
        obj = yaml.safe_load(fh)
    cfg = config_from_dict(obj or {})
    if cfg.data.manifest is not None:
        manifest = (path.parent / cfg.data.manifest).resolve()
        if not manifest.exists():
            raise ConfigError(f"data.manifest does not resolve: {manifest}")
        cfg.data.manifest = str(manifest)
    return cfg

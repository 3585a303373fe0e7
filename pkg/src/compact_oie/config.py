"""Configuration objects and config-file loading."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from .encoder import EncoderConfig
from .errors import DataError

# Batch sizes quoted for the original fine-tuning runs.  The shared value is
# the default; the per-model values are kept as named alternatives.
BATCH_PRESETS = {"shared": 32, "extractor": 300, "linker": 20}


@dataclass
class TrainConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    lr: float = 5e-5
    weight_decay: float = 1e-5
    batch_size: int = BATCH_PRESETS["shared"]
    epochs: int = 50
    patience: int = 5
    seed: int = 13
    val_fraction: float = 0.01
    grad_clip: Optional[float] = 1.0


@dataclass
class ExtractorConfig(TrainConfig):
    proj_dim: int = 150
    mlp_dropout: float = 0.1
    w_sym: float = 1.0
    w_imp: float = 1.0
    w_triple: float = 1.0
    alpha: float = 1.2


@dataclass
class LinkerConfig(TrainConfig):
    hidden: int = 150
    mlp_dropout: float = 0.1


@dataclass
class PipelineConfig:
    corpus: Optional[str] = None
    parses: Optional[str] = None
    checkpoints: Optional[str] = None
    outputs: Optional[str] = None
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    linker: LinkerConfig = field(default_factory=LinkerConfig)
    alpha: float = 1.2
    allow_missing_object: bool = True
    backend_cmd: Optional[str] = None
    backend_concurrency: int = 1
    clause_relations: Optional[list] = None
    splitter_cmd: Optional[str] = None
    rpa_mode: str = "sentence"
    seed: int = 13

    def __post_init__(self):
        if not self.alpha > 0:
            raise DataError("alpha must be positive")


def to_dict(cfg) -> Dict[str, Any]:
    return dataclasses.asdict(cfg)


def from_dict(cls, data: Optional[Dict[str, Any]]):
    """Build dataclass ``cls`` from a (possibly partial, nested) mapping; unknown keys are errors."""
    data = dict(data or {})
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in fields:
            raise DataError(f"unknown config key {key!r} for {cls.__name__}")
        ftype = fields[key].type
        nested = {"EncoderConfig": EncoderConfig, "ExtractorConfig": ExtractorConfig,
                  "LinkerConfig": LinkerConfig}.get(ftype if isinstance(ftype, str) else ftype.__name__)
        kwargs[key] = from_dict(nested, value) if nested and isinstance(value, dict) else value
    return cls(**kwargs)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    return from_dict(PipelineConfig, data)

"""Engine configuration file handling.

One YAML or JSON document with four optional sections; anything absent
falls back to the built-in defaults and unknown keys are rejected rather
than ignored:

    extractor:
      octaves: 3
      intervalsPerOctave: 4
      hessianThreshold: 0.0004
      initialSamplingStep: 2
      dxyWeight: 0.9
    indexer:
      k: 128
      maxIterations: 100
      convergenceEps: 1.0e-06
      seed: 0
    query:
      mode: threshold        # or topK
      topK: 10
      minSimilarity: 0.5
    labeling: directory      # or filenamePrefix
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from cbirkit.errors import ValidationError
from cbirkit.executor import MODE_THRESHOLD, MODE_TOP_K
from cbirkit.models import (
    ExtractorParams,
    IndexParams,
    validate_extractor_params,
    validate_index_params,
)
from cbirkit.simulation import LABEL_DIRECTORY, LABEL_FILENAME_PREFIX


@dataclass
class QueryDefaults:
    mode: str = MODE_THRESHOLD
    top_k: int = 10
    min_similarity: float = 0.5


@dataclass
class EngineConfig:
    extractor: ExtractorParams = field(default_factory=ExtractorParams)
    indexer: IndexParams = field(default_factory=IndexParams)
    query: QueryDefaults = field(default_factory=QueryDefaults)
    labeling: str = LABEL_DIRECTORY


_EXTRACTOR_KEYS = {
    "octaves": "octaves",
    "intervalsPerOctave": "intervals_per_octave",
    "hessianThreshold": "hessian_threshold",
    "initialSamplingStep": "initial_sampling_step",
    "dxyWeight": "dxy_weight",
}
_INDEXER_KEYS = {
    "k": "k",
    "maxIterations": "max_iterations",
    "convergenceEps": "convergence_eps",
    "seed": "seed",
}
_QUERY_KEYS = {
    "mode": "mode",
    "topK": "top_k",
    "minSimilarity": "min_similarity",
}


def _apply_section(target, raw: dict, keys: dict[str, str], section: str) -> None:
    for key, value in raw.items():
        if key not in keys:
            raise ValidationError(f"unknown config key {section}.{key}")
        setattr(target, keys[key], value)


def default_config() -> EngineConfig:
    return EngineConfig()


def parse_config(raw: dict | None) -> EngineConfig:
    config = EngineConfig()
    if raw is None:
        return config
    if not isinstance(raw, dict):
        raise ValidationError("config document must be a mapping")
    for section, value in raw.items():
        if section == "extractor":
            _apply_section(config.extractor, value, _EXTRACTOR_KEYS, section)
        elif section == "indexer":
            _apply_section(config.indexer, value, _INDEXER_KEYS, section)
        elif section == "query":
            _apply_section(config.query, value, _QUERY_KEYS, section)
        elif section == "labeling":
            config.labeling = value
        else:
            raise ValidationError(f"unknown config key {section}")

    validate_extractor_params(config.extractor)
    validate_index_params(config.indexer)
    if config.query.mode not in (MODE_TOP_K, MODE_THRESHOLD):
        raise ValidationError(f"unknown query mode {config.query.mode!r}")
    if config.query.top_k < 1:
        raise ValidationError("query.topK must be >= 1")
    if not 0.0 <= config.query.min_similarity <= 1.0:
        raise ValidationError("query.minSimilarity must be in [0, 1]")
    if config.labeling not in (LABEL_DIRECTORY, LABEL_FILENAME_PREFIX):
        raise ValidationError(f"unknown labeling mode {config.labeling!r}")
    return config


def load_config(path) -> EngineConfig:
    """Parse and validate a config file (YAML, of which JSON is a subset)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"cannot parse config file {path}: {exc}") from exc
    return parse_config(raw)

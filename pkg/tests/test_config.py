"""Configuration parsing and validation."""

from __future__ import annotations

import json

import pytest

from cbirkit.config import default_config, load_config, parse_config
from cbirkit.errors import ValidationError


class TestDefaults:
    def test_builtin_values(self):
        config = default_config()
        assert config.extractor.octaves == 3
        assert config.extractor.intervals_per_octave == 4
        assert config.extractor.hessian_threshold == pytest.approx(0.0004)
        assert config.extractor.initial_sampling_step == 2
        assert config.extractor.dxy_weight == pytest.approx(0.9)
        assert config.indexer.k == 128
        assert config.indexer.max_iterations == 100
        assert config.indexer.convergence_eps == pytest.approx(1e-6)
        assert config.indexer.seed == 0
        assert config.query.mode == "threshold"
        assert config.query.top_k == 10
        assert config.query.min_similarity == pytest.approx(0.5)
        assert config.labeling == "directory"

    def test_none_document_is_defaults(self):
        assert parse_config(None) == default_config()
        assert parse_config({}) == default_config()


class TestParsing:
    def test_partial_document_keeps_other_defaults(self):
        config = parse_config({"indexer": {"k": 32, "seed": 7}})
        assert config.indexer.k == 32
        assert config.indexer.seed == 7
        assert config.indexer.max_iterations == 100
        assert config.extractor.octaves == 3

    def test_camel_case_keys(self):
        config = parse_config(
            {
                "extractor": {"intervalsPerOctave": 5, "dxyWeight": 0.8,
                              "hessianThreshold": 0.001,
                              "initialSamplingStep": 1, "octaves": 2},
                "query": {"mode": "topK", "topK": 3, "minSimilarity": 0.25},
                "labeling": "filenamePrefix",
            }
        )
        assert config.extractor.intervals_per_octave == 5
        assert config.extractor.dxy_weight == pytest.approx(0.8)
        assert config.query.mode == "topK"
        assert config.query.top_k == 3
        assert config.labeling == "filenamePrefix"

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValidationError, match="indexer.clusters"):
            parse_config({"indexer": {"clusters": 10}})
        with pytest.raises(ValidationError, match="unknown config key storage"):
            parse_config({"storage": {"path": "x"}})

    def test_non_mapping_rejected(self):
        with pytest.raises(ValidationError, match="mapping"):
            parse_config(["indexer"])

    def test_invalid_values_rejected(self):
        with pytest.raises(ValidationError):
            parse_config({"indexer": {"k": 1}})
        with pytest.raises(ValidationError):
            parse_config({"extractor": {"octaves": 0}})
        with pytest.raises(ValidationError, match="mode"):
            parse_config({"query": {"mode": "fuzzy"}})
        with pytest.raises(ValidationError, match="topK"):
            parse_config({"query": {"topK": 0}})
        with pytest.raises(ValidationError, match="minSimilarity"):
            parse_config({"query": {"minSimilarity": 2.0}})
        with pytest.raises(ValidationError, match="labeling"):
            parse_config({"labeling": "guess"})


class TestLoadFile:
    def test_yaml_file(self, tmp_path):
        path = tmp_path / "engine.yaml"
        path.write_text(
            "indexer:\n  k: 24\n  convergenceEps: 1.0e-05\nquery:\n  topK: 5\n"
        )
        config = load_config(path)
        assert config.indexer.k == 24
        assert config.indexer.convergence_eps == pytest.approx(1e-5)
        assert config.query.top_k == 5

    def test_json_file(self, tmp_path):
        path = tmp_path / "engine.json"
        path.write_text(json.dumps({"indexer": {"k": 48}, "labeling": "directory"}))
        assert load_config(path).indexer.k == 48

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("indexer: [unclosed\n")
        with pytest.raises(ValidationError, match="parse"):
            load_config(path)

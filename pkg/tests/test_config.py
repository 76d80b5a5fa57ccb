"""Run configuration: INI parsing, CLI overrides, validation, canonical hash."""

import dataclasses

import pytest

from fuzztriage.alerts import CfMode
from fuzztriage.config import (
    DEFAULT_BAND_EDGES,
    DEFAULT_CUTOFFS,
    DatasetConfig,
    DetectorConfig,
    DetectorMode,
    EvaluationConfig,
    RankingConfig,
    artifact_stamp,
    canonical_lines,
    config_hash,
    load_config,
    with_detector_mode,
)
from fuzztriage.errors import ConfigError
from fuzztriage.evaluation import ScenarioKind
from fuzztriage.ingestion import SplitMode


def write_ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestDefaults:
    def test_no_file_gives_documented_defaults(self):
        config = load_config(None)
        assert config.seed == 42
        assert config.out_dir == "results"
        assert config.dataset.source == "synth"
        assert config.split.mode is None
        assert config.split.fractions == (0.5, 0.2, 0.3)
        assert config.detector.mode is DetectorMode.TRAIN_FULL
        assert config.ranking.kappas == (1.0,)
        assert config.ranking.cf_mode is CfMode.CONTINUOUS
        assert config.evaluation.cutoffs == DEFAULT_CUTOFFS
        assert config.evaluation.bands == DEFAULT_BAND_EDGES
        assert config.evaluation.bootstrap_k == 500
        assert config.evaluation.scenarios == tuple(ScenarioKind)
        assert config.evaluation.sweep is False

    def test_seed_flows_into_synth_and_split(self):
        config = load_config(None, seed=7)
        assert config.seed == 7
        assert config.synth.seed == 7
        assert config.split.seed == 7

    def test_cli_overrides_without_file(self):
        config = load_config(None, seed=9, out_dir="elsewhere", kappas=[0.0, 2.0])
        assert config.seed == 9
        assert config.out_dir == "elsewhere"
        assert config.ranking.kappas == (0.0, 2.0)


class TestIniParsing:
    def test_full_file(self, tmp_path):
        path = write_ini(
            tmp_path,
            """
[run]
seed = 11
out_dir = out

[synth]
n_flows = 500
attack_fraction = 0.25

[split]
mode = stratified
fractions = 0.6, 0.2, 0.2

[detector]
mode = train_flags_only
l2_c = 2.5
max_iters = 300

[heights]
alpha = 0.7
h_min = 0.1
h_max = 0.9

[ranking]
kappa = 0.0, 1.0, 2.0
cf_mode = categorical
uf_scale = 1.2

[evaluation]
cutoffs = 10, 100
bands = 0.2-0.4, 0.4-1.0
bootstrap_k = 50
bootstrap_resamples = 200
bootstrap_seed = 3
scenarios = noise
noise_sd = 0.1
sweep = yes
""",
        )
        config = load_config(path)
        assert config.seed == 11
        assert config.out_dir == "out"
        assert config.synth.n_flows == 500
        assert config.synth.attack_fraction == 0.25
        assert config.synth.seed == 11
        assert config.split.mode is SplitMode.STRATIFIED
        assert config.split.fractions == (0.6, 0.2, 0.2)
        assert config.detector.mode is DetectorMode.TRAIN_FLAGS_ONLY
        assert config.detector.l2_c == 2.5
        assert config.detector.max_iters == 300
        assert config.heights.alpha == 0.7
        assert config.heights.h_min == 0.1
        assert config.heights.h_max == 0.9
        assert config.ranking.kappas == (0.0, 1.0, 2.0)
        assert config.ranking.cf_mode is CfMode.CATEGORICAL
        assert config.ranking.uf_scale == 1.2
        assert config.evaluation.cutoffs == (10, 100)
        assert config.evaluation.bands == ((0.2, 0.4), (0.4, 1.0))
        assert config.evaluation.bootstrap_k == 50
        assert config.evaluation.bootstrap_resamples == 200
        assert config.evaluation.bootstrap_seed == 3
        assert config.evaluation.scenarios == (ScenarioKind.NOISE,)
        assert config.evaluation.noise_sd == 0.1
        assert config.evaluation.sweep is True

    def test_cli_args_beat_file(self, tmp_path):
        path = write_ini(tmp_path, "[run]\nseed = 11\nout_dir = out\n[ranking]\nkappa = 1.5\n")
        config = load_config(path, seed=99, out_dir="cli_out", kappas=[0.5])
        assert config.seed == 99
        assert config.synth.seed == 99
        assert config.out_dir == "cli_out"
        assert config.ranking.kappas == (0.5,)

    def test_empty_file_equals_defaults(self, tmp_path):
        path = write_ini(tmp_path, "")
        assert load_config(path) == load_config(None)

    def test_auto_split_mode_maps_to_none(self, tmp_path):
        path = write_ini(tmp_path, "[split]\nmode = auto\n")
        assert load_config(path).split.mode is None


class TestIniErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="config file does not exist"):
            load_config(tmp_path / "nope.ini")

    def test_unknown_section(self, tmp_path):
        path = write_ini(tmp_path, "[rankings]\nkappa = 1.0\n")
        with pytest.raises(ConfigError, match=r"unknown section \[rankings\]"):
            load_config(path)

    def test_unknown_key(self, tmp_path):
        path = write_ini(tmp_path, "[ranking]\nkapa = 1.0\n")
        with pytest.raises(ConfigError, match=r"unknown key\(s\) in \[ranking\]: kapa"):
            load_config(path)

    @pytest.mark.parametrize(
        "body, message",
        [
            ("[run]\nseed = forty-two\n", "bad value for run.seed"),
            ("[synth]\nattack_fraction = lots\n", "bad value for synth.attack_fraction"),
            ("[split]\nmode = weekly\n", "bad split.mode"),
            ("[split]\nfractions = 0.5, 0.5\n", "split.fractions needs three values"),
            ("[detector]\nmode = deep_net\n", "bad detector.mode"),
            ("[ranking]\ncf_mode = fuzzy\n", "bad ranking.cf_mode"),
            ("[evaluation]\nbands = 0.3:0.5\n", "bad evaluation.bands"),
            ("[evaluation]\nscenarios = meteor\n", "bad evaluation.scenarios"),
            ("[evaluation]\nsweep = maybe\n", "bad boolean for evaluation.sweep"),
        ],
    )
    def test_bad_values(self, tmp_path, body, message):
        path = write_ini(tmp_path, body)
        with pytest.raises(ConfigError, match=message):
            load_config(path)

    def test_invalid_synth_values_are_wrapped(self, tmp_path):
        path = write_ini(tmp_path, "[synth]\nn_flows = 0\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_csv_source_requires_existing_path(self, tmp_path):
        path = write_ini(tmp_path, "[dataset]\nsource = csv\npath = /no/such/flows.csv\n")
        with pytest.raises(ConfigError, match="dataset.path does not exist"):
            load_config(path)

    def test_csv_source_without_path(self, tmp_path):
        path = write_ini(tmp_path, "[dataset]\nsource = csv\n")
        with pytest.raises(ConfigError, match="dataset.source=csv requires dataset.path"):
            load_config(path)

    def test_missing_class_map_file(self, tmp_path):
        path = write_ini(tmp_path, "[dataset]\nclass_map = /no/such/map.csv\n")
        with pytest.raises(ConfigError, match="dataset.class_map does not exist"):
            load_config(path)

    def test_missing_catalog_file(self, tmp_path):
        path = write_ini(tmp_path, "[dataset]\ncatalog = /no/such/catalog.csv\n")
        with pytest.raises(ConfigError, match="dataset.catalog does not exist"):
            load_config(path)

    def test_external_scores_requires_existing_file(self, tmp_path):
        path = write_ini(
            tmp_path, "[detector]\nmode = external_scores\nscores_path = /no/such/scores.csv\n"
        )
        with pytest.raises(ConfigError, match="detector.scores_path does not exist"):
            load_config(path)

    def test_synth_path_ignored_when_source_synth(self, tmp_path):
        # the dataset path requirement only applies to the csv source
        path = write_ini(tmp_path, "[dataset]\nsource = synth\npath = /no/such/flows.csv\n")
        config = load_config(path)
        assert config.dataset.path == "/no/such/flows.csv"


class TestDataclassValidation:
    def test_dataset_source_must_be_known(self):
        with pytest.raises(ConfigError, match="dataset.source"):
            DatasetConfig(source="parquet")

    def test_external_mode_needs_scores_path(self):
        with pytest.raises(ConfigError, match="requires detector.scores_path"):
            DetectorConfig(mode=DetectorMode.EXTERNAL_SCORES)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kappas": ()},
            {"kappas": (1.0, -0.5)},
            {"uf_scale": 0.0},
            {"uf_scale": -1.0},
        ],
    )
    def test_ranking_config_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            RankingConfig(**kwargs)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"cutoffs": ()},
            {"cutoffs": (0, 10)},
            {"bootstrap_k": 0},
            {"bootstrap_resamples": 0},
            {"noise_sd": 0.0},
        ],
    )
    def test_evaluation_config_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            EvaluationConfig(**kwargs)

    def test_band_objects_close_only_the_top_band(self):
        bands = EvaluationConfig().band_objects()
        assert [b.closed for b in bands] == [False, False, True]
        assert bands[2].contains(1.0)
        assert not bands[1].contains(0.7)
        assert bands[1].contains(0.5)


class TestHashing:
    def test_hash_is_short_hex_and_deterministic(self):
        config = load_config(None)
        h = config_hash(config)
        assert len(h) == 12
        int(h, 16)
        assert config_hash(load_config(None)) == h

    def test_seed_changes_hash(self):
        assert config_hash(load_config(None, seed=1)) != config_hash(load_config(None, seed=2))

    def test_out_dir_does_not_change_hash(self):
        base = load_config(None)
        moved = dataclasses.replace(base, out_dir="somewhere/else")
        assert config_hash(moved) == config_hash(base)
        assert canonical_lines(moved) == canonical_lines(base)

    def test_detector_mode_flips_exactly_one_line(self):
        base = load_config(None)
        stress = with_detector_mode(base, DetectorMode.TRAIN_FLAGS_ONLY)
        before = canonical_lines(base)
        after = canonical_lines(stress)
        assert len(before) == len(after)
        diffs = [(b, a) for b, a in zip(before, after) if b != a]
        assert diffs == [("detector.mode=train_full", "detector.mode=train_flags_only")]
        assert config_hash(stress) != config_hash(base)

    def test_stamp_format(self):
        config = load_config(None, seed=5)
        assert artifact_stamp(config) == f"config_hash={config_hash(config)} seed=5"

"""Dataset loading, class mapping, normalization, splits, synthesis."""

from __future__ import annotations

import numpy as np
import pytest

from fuzztriage.alerts import UNKNOWN_CLASS
from fuzztriage.detector import DetectorReport, train_lr
from fuzztriage.errors import ConfigError, ParseError, ValidationError
from fuzztriage.ingestion import (
    ATTACK_CLASSES,
    DEFAULT_CLASS_MIX,
    FLAG_FEATURE_NAMES,
    STRONG_FEATURE_NAMES,
    WEEKDAYS,
    FlowDataset,
    NormStats,
    SplitMode,
    SplitSpec,
    SynthConfig,
    apply_normalization,
    binary_labels,
    class_counts,
    fit_normalization,
    load_class_map_override,
    load_csv,
    map_attack_types,
    normalize,
    split,
    synth_generate,
    write_flow_csv,
)


def write_rows(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


class TestFlowDataset:
    def test_shape_checks(self):
        with pytest.raises(ValidationError):
            FlowDataset(np.zeros(3), ("a",), ("x", "y", "z"))
        with pytest.raises(ValidationError):
            FlowDataset(np.zeros((2, 2)), ("a",), ("x", "y"))
        with pytest.raises(ValidationError):
            FlowDataset(np.zeros((2, 2)), ("a", "a"), ("x", "y"))
        with pytest.raises(ValidationError):
            FlowDataset(np.zeros((2, 2)), ("a", "b"), ("x",))
        with pytest.raises(ValidationError):
            FlowDataset(np.zeros((2, 2)), ("a", "b"), ("x", "y"), days=("Monday",))

    def test_take_preserves_alignment(self):
        ds = FlowDataset(
            np.arange(6.0).reshape(3, 2),
            ("a", "b"),
            ("x", "y", "z"),
            days=("Monday", "Tuesday", "Wednesday"),
        )
        sub = ds.take(np.array([2, 0]))
        assert np.array_equal(sub.features, [[4.0, 5.0], [0.0, 1.0]])
        assert sub.labels == ("z", "x")
        assert sub.days == ("Wednesday", "Monday")


class TestLoadCsv:
    def test_ten_clean_rows(self, tmp_path):
        path = tmp_path / "flows.csv"
        rows = [[i, i * 2, "BENIGN" if i % 2 else "DoS Hulk", "Monday"] for i in range(10)]
        write_rows(path, ["f1", "f2", "Label", "Day"], rows)
        ds, report = load_csv(path)
        assert report.rows_kept == 10
        assert report.rows_dropped == 0
        assert len(ds) == 10
        assert ds.feature_names == ("f1", "f2")
        assert ds.days is not None and set(ds.days) == {"Monday"}

    def test_non_finite_rows_dropped(self, tmp_path):
        path = tmp_path / "flows.csv"
        rows = [[1.0, 2.0, "BENIGN"] for _ in range(8)]
        rows.insert(3, ["Infinity", 2.0, "BENIGN"])
        rows.insert(6, [1.0, "NaN", "DoS Hulk"])
        write_rows(path, ["f1", "f2", "Label"], rows)
        ds, report = load_csv(path)
        assert report.rows_kept == 8
        assert report.rows_dropped == 2
        assert ds.days is None

    def test_non_numeric_rows_dropped(self, tmp_path):
        path = tmp_path / "flows.csv"
        write_rows(path, ["f1", "Label"], [[1.0, "BENIGN"], ["oops", "BENIGN"]])
        _, report = load_csv(path)
        assert report.rows_kept == 1
        assert report.rows_dropped == 1

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "flows.csv"
        path.write_text("f1,f2,Label\n")
        with pytest.raises(ParseError, match="no data rows"):
            load_csv(path)

    def test_missing_label_column(self, tmp_path):
        path = tmp_path / "flows.csv"
        write_rows(path, ["f1", "f2"], [[1.0, 2.0]])
        with pytest.raises(ParseError, match="label column"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError, match="not found"):
            load_csv(tmp_path / "absent.csv")

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "flows.csv"
        path.write_text("f1,f2,Label\n1.0,2.0,BENIGN\n1.0,BENIGN\n")
        with pytest.raises(ParseError, match="row 3"):
            load_csv(path)

    def test_all_rows_dropped_rejected(self, tmp_path):
        path = tmp_path / "flows.csv"
        write_rows(path, ["f1", "Label"], [["x", "BENIGN"], ["y", "BENIGN"]])
        with pytest.raises(ParseError, match="dropped"):
            load_csv(path)

    def test_comment_lines_skipped(self, tmp_path):
        path = tmp_path / "flows.csv"
        path.write_text("# config_hash=abc seed=1\nf1,Label\n1.0,BENIGN\n")
        ds, _ = load_csv(path)
        assert len(ds) == 1


class TestClassMapping:
    def test_known_raw_labels(self):
        mapped = map_attack_types(
            ["FTP-Patator", "DoS Hulk", "BENIGN", "Web Attack – Brute Force", "PortScan"]
        )
        assert mapped == ("BruteForce", "DoS", "benign", "WebAttack", "PortScan")

    def test_case_and_dash_insensitive(self):
        assert map_attack_types(["ssh-patator"]) == ("BruteForce",)
        assert map_attack_types(["DOS  GOLDENEYE"]) == ("DoS",)

    def test_unmapped_label_flagged(self):
        assert map_attack_types(["QuantumExfil"]) == (UNKNOWN_CLASS,)

    def test_override_wins(self):
        mapped = map_attack_types(["QuantumExfil"], {"quantumexfil": "Infiltration"})
        assert mapped == ("Infiltration",)

    def test_binary_labels(self):
        labels = binary_labels(("benign", "DoS", UNKNOWN_CLASS, "benign"))
        assert labels.tolist() == [0, 1, 1, 0]

    def test_override_file(self, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text("raw,class\nQuantum-Exfil,Infiltration\n")
        override = load_class_map_override(path)
        assert override == {"quantum exfil": "Infiltration"}

    def test_override_bad_header(self, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text("from,to\na,b\n")
        with pytest.raises(ParseError, match="raw,class"):
            load_class_map_override(path)

    def test_override_empty_field(self, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text("raw,class\nx,\n")
        with pytest.raises(ParseError, match="row 2"):
            load_class_map_override(path)


class TestNormalization:
    def test_min_max_scaling(self):
        stats = fit_normalization(np.array([[0.0], [5.0], [10.0]]))
        scaled = apply_normalization(np.array([[0.0], [5.0], [10.0]]), stats)
        np.testing.assert_allclose(scaled.ravel(), [0.0, 0.5, 1.0])

    def test_constant_feature_collapses_to_zero(self):
        stats = fit_normalization(np.array([[3.0], [3.0]]))
        scaled = apply_normalization(np.array([[3.0], [7.0]]), stats)
        np.testing.assert_allclose(scaled.ravel(), [0.0, 0.0])

    def test_out_of_range_clips(self):
        stats = fit_normalization(np.array([[0.0], [10.0]]))
        scaled = apply_normalization(np.array([[-5.0], [15.0]]), stats)
        np.testing.assert_allclose(scaled.ravel(), [0.0, 1.0])

    def test_feature_count_mismatch(self):
        stats = fit_normalization(np.array([[0.0, 1.0]]))
        with pytest.raises(ValidationError):
            apply_normalization(np.zeros((2, 3)), stats)

    def test_normalize_reuses_given_stats(self):
        train = FlowDataset(np.array([[0.0], [10.0]]), ("f",), ("a", "b"))
        other = FlowDataset(np.array([[5.0]]), ("f",), ("c",))
        _, stats = normalize(train)
        scaled, _ = normalize(other, stats)
        np.testing.assert_allclose(scaled.features.ravel(), [0.5])

    def test_norm_stats_shape_check(self):
        with pytest.raises(ValidationError):
            NormStats(np.zeros(2), np.zeros(3))


def labeled_dataset(n, attack_positions, days=None):
    features = np.arange(n * 2, dtype=float).reshape(n, 2)
    classes = ["DoS" if i in attack_positions else "benign" for i in range(n)]
    labels = tuple("DoS Hulk" if c == "DoS" else "BENIGN" for c in classes)
    ds = FlowDataset(features, ("f1", "f2"), labels, days=days)
    return ds, classes


class TestSplit:
    def test_day_based_selected_when_train_has_attacks(self):
        days = tuple(WEEKDAYS[i % 5] for i in range(20))
        attacks = {0, 1, 5, 6, 12, 17}  # Monday and Tuesday rows included
        ds, classes = labeled_dataset(20, attacks, days=days)
        result = split(ds, classes, SplitSpec())
        assert result.mode_used is SplitMode.DAY_BASED
        assert all(days[i] in ("Monday", "Tuesday") for i in result.train_idx)
        assert all(days[i] == "Wednesday" for i in result.val_idx)
        assert all(days[i] in ("Thursday", "Friday") for i in result.test_idx)

    def test_falls_back_when_train_days_are_benign(self):
        days = tuple(WEEKDAYS[i % 5] for i in range(40))
        attacks = {i for i in range(40) if days[i] == "Thursday"}
        ds, classes = labeled_dataset(40, attacks, days=days)
        result = split(ds, classes, SplitSpec())
        assert result.mode_used is SplitMode.STRATIFIED

    def test_stratified_partitions_exactly(self):
        ds, classes = labeled_dataset(40, set(range(8)))
        result = split(ds, classes, SplitSpec(mode=SplitMode.STRATIFIED))
        merged = np.sort(
            np.concatenate([result.train_idx, result.val_idx, result.test_idx])
        )
        assert np.array_equal(merged, np.arange(40))

    def test_stratified_respects_fractions_per_class(self):
        ds, classes = labeled_dataset(100, set(range(20)))
        result = split(ds, classes, SplitSpec(mode=SplitMode.STRATIFIED))
        train_classes = [classes[i] for i in result.train_idx]
        assert train_classes.count("DoS") == 10
        assert train_classes.count("benign") == 40

    def test_same_seed_reproduces(self):
        ds, classes = labeled_dataset(200, set(range(40)))
        a = split(ds, classes, SplitSpec(mode=SplitMode.STRATIFIED, seed=7))
        b = split(ds, classes, SplitSpec(mode=SplitMode.STRATIFIED, seed=7))
        assert np.array_equal(a.train_idx, b.train_idx)
        assert np.array_equal(a.val_idx, b.val_idx)
        assert np.array_equal(a.test_idx, b.test_idx)
        c = split(ds, classes, SplitSpec(mode=SplitMode.STRATIFIED, seed=8))
        assert not np.array_equal(a.train_idx, c.train_idx)

    def test_day_based_requires_day_tags(self):
        ds, classes = labeled_dataset(10, {0})
        with pytest.raises(ValidationError):
            split(ds, classes, SplitSpec(mode=SplitMode.DAY_BASED))

    def test_unknown_day_tag_rejected(self):
        ds, classes = labeled_dataset(2, {0}, days=("Monday", "Someday"))
        with pytest.raises(ValidationError, match="Someday"):
            split(ds, classes, SplitSpec(mode=SplitMode.DAY_BASED))

    def test_label_count_mismatch(self):
        ds, classes = labeled_dataset(10, {0})
        with pytest.raises(ValidationError):
            split(ds, classes[:-1], SplitSpec())

    def test_tiny_class_goes_to_train(self, caplog):
        import logging

        ds, classes = labeled_dataset(12, {3})
        with caplog.at_level(logging.WARNING):
            result = split(ds, classes, SplitSpec(mode=SplitMode.STRATIFIED))
        assert 3 in result.train_idx
        assert any("fewer than 3" in r.getMessage() for r in caplog.records)

    @pytest.mark.parametrize(
        "fractions", [(0.5, 0.2, 0.2), (0.5, -0.1, 0.6), (0.5, 0.5)]
    )
    def test_bad_fractions(self, fractions):
        with pytest.raises(ValidationError):
            SplitSpec(fractions=fractions)


class TestClassCounts:
    def test_largest_remainder_hand_case(self):
        config = SynthConfig(
            n_flows=100,
            attack_fraction=0.2,
            class_weights={"DoS": 1.0, "PortScan": 1.0, "Bot": 1.0},
        )
        assert class_counts(config) == {"Bot": 7, "DoS": 7, "PortScan": 6}

    def test_default_counts_sum(self):
        counts = class_counts(SynthConfig())
        assert sum(counts.values()) == 1000
        assert set(counts) == set(DEFAULT_CLASS_MIX)
        assert all(v > 0 for v in counts.values())


class TestSynthConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_flows": 0},
            {"attack_fraction": 1.5},
            {"separation": -1.0},
            {"attack_detectable_rate": 1.2},
            {"benign_outlier_rate": -0.1},
            {"class_weights": {}},
            {"class_weights": {"Ransomware": 1.0}},
            {"class_weights": {"DoS": -1.0}},
            {"class_weights": {"DoS": 1.0}, "class_flag_factor": {"Bot": 1.0}},
            {"class_flag_factor": dict(DEFAULT_CLASS_MIX, DoS=0.0)},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigError):
            SynthConfig(**kwargs)


class TestSynthGenerate:
    def test_schema_and_counts(self):
        config = SynthConfig(n_flows=200, seed=1)
        ds = synth_generate(config)
        assert len(ds) == 200
        assert ds.feature_names == STRONG_FEATURE_NAMES + FLAG_FEATURE_NAMES
        assert set(ds.days) <= set(WEEKDAYS)
        mapped = map_attack_types(ds.labels)
        assert UNKNOWN_CLASS not in mapped
        expected = class_counts(config)
        for cls in expected:
            assert mapped.count(cls) == expected[cls]
        assert mapped.count("benign") == 200 - sum(expected.values())

    def test_same_seed_is_byte_identical(self, tmp_path):
        config = SynthConfig(n_flows=150, seed=9)
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_flow_csv(synth_generate(config), first, header_comment="seed=9")
        write_flow_csv(synth_generate(config), second, header_comment="seed=9")
        assert first.read_bytes() == second.read_bytes()

    def test_different_seed_differs(self):
        a = synth_generate(SynthConfig(n_flows=100, seed=1))
        b = synth_generate(SynthConfig(n_flows=100, seed=2))
        assert not np.array_equal(a.features, b.features)

    def test_round_trips_through_csv(self, tmp_path):
        config = SynthConfig(n_flows=60, seed=3)
        ds = synth_generate(config)
        path = tmp_path / "synth.csv"
        write_flow_csv(ds, path)
        loaded, report = load_csv(path)
        assert report.rows_dropped == 0
        assert loaded.labels == ds.labels
        assert loaded.days == ds.days
        np.testing.assert_allclose(loaded.features, ds.features, rtol=1e-4, atol=1e-6)

    def test_zero_separation_removes_strong_signal(self):
        # with separation off, the strong columns carry nothing and the
        # detector lands near the random-guess ceiling for a 20% base rate
        d_strong = len(STRONG_FEATURE_NAMES)

        def strong_f1(separation):
            ds = synth_generate(SynthConfig(n_flows=600, seed=42, separation=separation))
            y = binary_labels(map_attack_types(ds.labels))
            X = ds.features[:, :d_strong]
            model = train_lr(X, y)
            return DetectorReport.from_predictions(y, model.predict(X)).f1

        noise_f1 = strong_f1(0.0)
        separated_f1 = strong_f1(3.2)
        assert noise_f1 < 0.45
        assert separated_f1 > noise_f1 + 0.3

    def test_attack_classes_cover_table(self):
        assert set(DEFAULT_CLASS_MIX) <= set(ATTACK_CLASSES)

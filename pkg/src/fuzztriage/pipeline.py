"""End-to-end orchestration: dataset to ranked queues to evaluation report.

Each stage is a pure function of the RunConfig, so any command can rebuild
its upstream stages deterministically; artifacts exist for the analyst, not
as hidden pipeline state. Every file written starts with a comment carrying
the config hash and seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .alerts import Alert, AttackClassProfile, PreparedAlert, assemble, load_catalog
from .calibration import CalibrationRow, build_height_table, per_class_counts, write_calibration_csv
from .config import DetectorMode, RunConfig, artifact_stamp, with_detector_mode
from .detector import (
    DetectorReport,
    TrainConfig,
    flags_only_subset,
    load_external_scores,
    platt_calibrate,
    scores_with_defaults,
    train_lr,
)
from .errors import ValidationError
from .evaluation import (
    BandResult,
    BootstrapResult,
    ScenarioResult,
    ScenarioSpec,
    SweepInputs,
    SweepReport,
    band_eval,
    ndcg_of_queue,
    paired_bootstrap,
    predicted_queue,
    relevance_by_id,
    scenario_eval,
    sensitivity_sweep,
)
from .ingestion import (
    FlowDataset,
    SplitResult,
    apply_normalization,
    binary_labels,
    fit_normalization,
    load_class_map_override,
    load_csv,
    map_attack_types,
    split as split_dataset,
    synth_generate,
    write_flow_csv,
)
from .ranking import Method, RankedQueue, RiskProfile, rank, write_queue_csv

logger = logging.getLogger(__name__)

BAND_K = 100
SCENARIO_K = 100
SWEEP_CUTOFFS = (10, 100)


def flow_ids(n: int) -> tuple[str, ...]:
    return tuple(f"flow-{i:05d}" for i in range(n))


@dataclass(frozen=True)
class PreparedData:
    dataset: FlowDataset
    classes: tuple[str, ...]
    ids: tuple[str, ...]
    split: SplitResult


def prepare_data(config: RunConfig) -> PreparedData:
    """Load or generate the dataset, map classes, and split."""
    if config.dataset.source == "synth":
        dataset = synth_generate(config.synth)
    else:
        dataset, report = load_csv(
            config.dataset.path,
            label_column=config.dataset.label_column,
            day_column=config.dataset.day_column,
        )
        if report.rows_dropped:
            logger.warning(
                "dropped %d rows with non-numeric or non-finite features", report.rows_dropped
            )
    override = (
        load_class_map_override(config.dataset.class_map) if config.dataset.class_map else None
    )
    classes = map_attack_types(dataset.labels, override)
    split = split_dataset(dataset, classes, config.split)
    return PreparedData(dataset, classes, flow_ids(len(dataset)), split)


@dataclass(frozen=True)
class DetectorOutput:
    mode: DetectorMode
    p_val: np.ndarray
    p_test: np.ndarray
    report: DetectorReport
    feature_names: tuple[str, ...]


def run_detector(config: RunConfig, prep: PreparedData) -> DetectorOutput:
    """Produce attack probabilities for the validation and test splits."""
    y = binary_labels(prep.classes)
    tr, va, te = prep.split.train_idx, prep.split.val_idx, prep.split.test_idx

    if config.detector.mode is DetectorMode.EXTERNAL_SCORES:
        scores = load_external_scores(config.detector.scores_path)
        p_val = np.asarray(scores_with_defaults([prep.ids[i] for i in va], scores))
        p_test = np.asarray(scores_with_defaults([prep.ids[i] for i in te], scores))
        report = DetectorReport.from_predictions(y[te], (p_test >= 0.5).astype(int))
        return DetectorOutput(config.detector.mode, p_val, p_test, report, ())

    names = prep.dataset.feature_names
    if config.detector.mode is DetectorMode.TRAIN_FLAGS_ONLY:
        keep = flags_only_subset(names)
    else:
        keep = list(range(len(names)))
    used_names = tuple(names[i] for i in keep)

    stats = fit_normalization(prep.dataset.features[tr][:, keep])
    X_tr = apply_normalization(prep.dataset.features[tr][:, keep], stats)
    X_va = apply_normalization(prep.dataset.features[va][:, keep], stats)
    X_te = apply_normalization(prep.dataset.features[te][:, keep], stats)

    train_config = TrainConfig(
        l2_c=config.detector.l2_c,
        max_iters=config.detector.max_iters,
        tol=config.detector.tol,
    )
    model = train_lr(X_tr, y[tr], train_config, feature_names=used_names)
    model = platt_calibrate(model, X_va, y[va])
    p_val = model.predict_proba(X_va)
    p_test = model.predict_proba(X_te)
    report = DetectorReport.from_predictions(y[te], (p_test >= 0.5).astype(int))
    return DetectorOutput(config.detector.mode, p_val, p_test, report, used_names)


def calibrate_heights(
    config: RunConfig, prep: PreparedData, detector_out: DetectorOutput
) -> dict[str, CalibrationRow]:
    """Per-class calibration table from validation-split predictions."""
    va = prep.split.val_idx
    if va.size == 0:
        raise ValidationError("validation split is empty; cannot calibrate heights")
    y_val = binary_labels(prep.classes)[va]
    yhat_val = (detector_out.p_val >= 0.5).astype(int)
    counts = per_class_counts([prep.classes[i] for i in va], y_val, yhat_val)
    return build_height_table(counts, config.heights)


def build_alerts(
    config: RunConfig,
    prep: PreparedData,
    detector_out: DetectorOutput,
    table: Mapping[str, CalibrationRow],
) -> tuple[list[PreparedAlert], dict[str, AttackClassProfile]]:
    """Turn the test split into prepared alerts with fuzzy severities."""
    te = prep.split.test_idx
    y_test = binary_labels(prep.classes)[te]
    alerts = [
        Alert(
            alert_id=prep.ids[i],
            attack_class=prep.classes[i],
            p=float(detector_out.p_test[j]),
            label=int(y_test[j]),
        )
        for j, i in enumerate(te)
    ]
    catalog = load_catalog(config.dataset.catalog)
    heights = {cls: row.h_class for cls, row in table.items()}
    records = assemble(
        alerts,
        catalog,
        heights,
        cf_mode=config.ranking.cf_mode,
        uf_scale=config.ranking.uf_scale,
    )
    return records, catalog


def _kappa_label(kappa: float) -> str:
    return format(kappa, ".12g")


def rank_all(config: RunConfig, records: Sequence[PreparedAlert]) -> dict[str, RankedQueue]:
    """All configured queues keyed by method name (risk-averse per kappa)."""
    queues: dict[str, RankedQueue] = {
        Method.SEVERITY_ONLY.value: rank(records, Method.SEVERITY_ONLY),
        Method.CONFIDENCE_ONLY.value: rank(records, Method.CONFIDENCE_ONLY),
        Method.WEIGHTED_SUM.value: rank(records, Method.WEIGHTED_SUM),
    }
    for kappa in config.ranking.kappas:
        queues[f"risk_averse_k{_kappa_label(kappa)}"] = rank(
            records, Method.RISK_AVERSE, RiskProfile(kappa)
        )
    return queues


@dataclass(frozen=True)
class MetricRow:
    method: str
    queue: str  # full | pred
    cutoff: int
    ndcg: float


@dataclass(frozen=True)
class EvalTables:
    detector: DetectorReport
    detector_mode: DetectorMode
    metrics: tuple[MetricRow, ...]
    bands: dict[str, tuple[BandResult, ...]]
    bootstrap: dict[str, BootstrapResult]
    scenarios: tuple[ScenarioResult, ...]
    sweep: SweepReport | None


def evaluate_all(
    config: RunConfig,
    prep: PreparedData,
    detector_out: DetectorOutput,
    table: Mapping[str, CalibrationRow],
    records: Sequence[PreparedAlert],
    catalog: Mapping[str, AttackClassProfile],
    queues: Mapping[str, RankedQueue],
) -> EvalTables:
    rel = relevance_by_id(records)
    first_kappa = config.ranking.kappas[0]
    ra_name = f"risk_averse_k{_kappa_label(first_kappa)}"

    metrics: list[MetricRow] = []
    for name, queue in queues.items():
        pred = predicted_queue(queue)
        for cutoff in config.evaluation.cutoffs:
            metrics.append(MetricRow(name, "full", cutoff, ndcg_of_queue(queue, rel, cutoff)))
            if len(pred):
                metrics.append(MetricRow(name, "pred", cutoff, ndcg_of_queue(pred, rel, cutoff)))

    bands = {
        name: tuple(band_eval(queue, rel, config.evaluation.band_objects(), BAND_K))
        for name, queue in queues.items()
    }

    bootstrap: dict[str, BootstrapResult] = {}
    ra_pred = predicted_queue(queues[ra_name])
    if len(ra_pred):
        for name, queue in queues.items():
            if name == ra_name:
                continue
            pred = predicted_queue(queue)
            bootstrap[name] = paired_bootstrap(
                pred,
                ra_pred,
                rel,
                k=config.evaluation.bootstrap_k,
                resamples=config.evaluation.bootstrap_resamples,
                seed=config.evaluation.bootstrap_seed,
            )

    specs = tuple(
        ScenarioSpec(kind, noise_sd=config.evaluation.noise_sd, seed=config.seed)
        for kind in config.evaluation.scenarios
    )
    scenarios = tuple(
        scenario_eval(records, specs, kappa=first_kappa, k=SCENARIO_K)
    )

    sweep = None
    if config.evaluation.sweep:
        inputs = SweepInputs(
            alerts=tuple(
                Alert(r.alert_id, r.attack_class, r.p, r.label) for r in records
            ),
            catalog=catalog,
            f1_by_class={cls: row.metrics.f1 for cls, row in table.items()},
            cf_mode=config.ranking.cf_mode,
        )
        sweep = sensitivity_sweep(
            inputs,
            defaults=config.heights,
            kappa=first_kappa,
            uf_scale=config.ranking.uf_scale,
            cutoffs=SWEEP_CUTOFFS,
        )

    return EvalTables(
        detector=detector_out.report,
        detector_mode=detector_out.mode,
        metrics=tuple(metrics),
        bands=bands,
        bootstrap=bootstrap,
        scenarios=scenarios,
        sweep=sweep,
    )


# --- artifact writers --------------------------------------------------------

def _out(config: RunConfig, *parts: str) -> Path:
    path = Path(config.out_dir).joinpath(*parts)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_splits(config: RunConfig, prep: PreparedData) -> list[Path]:
    stamp = artifact_stamp(config)
    written = []
    for name, idx in (
        ("train", prep.split.train_idx),
        ("validation", prep.split.val_idx),
        ("test", prep.split.test_idx),
    ):
        path = _out(config, "splits", f"{name}.csv")
        write_flow_csv(prep.dataset.take(idx), path, header_comment=stamp)
        written.append(path)
    return written


def write_calibration(config: RunConfig, table: Mapping[str, CalibrationRow]) -> Path:
    path = _out(config, "calibration", "heights.csv")
    write_calibration_csv(path, table, header_comment=artifact_stamp(config))
    return path


def write_queues(
    config: RunConfig, queues: Mapping[str, RankedQueue], records: Sequence[PreparedAlert]
) -> list[Path]:
    stamp = artifact_stamp(config)
    written = []
    for name, queue in queues.items():
        path = _out(config, "queues", f"queue_{name}.csv")
        write_queue_csv(path, queue, records, header_comment=stamp)
        written.append(path)
    return written


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.10g}"


def write_eval(config: RunConfig, tables: EvalTables) -> list[Path]:
    stamp = artifact_stamp(config)
    written = []

    path = _out(config, "eval", "detector.csv")
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {stamp}\n")
        fh.write("mode,accuracy,precision,recall,f1\n")
        d = tables.detector
        fh.write(
            f"{tables.detector_mode.value},{_fmt(d.accuracy)},{_fmt(d.precision)},"
            f"{_fmt(d.recall)},{_fmt(d.f1)}\n"
        )
    written.append(path)

    path = _out(config, "eval", "metrics.csv")
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {stamp}\n")
        fh.write("method,queue,cutoff,ndcg\n")
        for row in tables.metrics:
            fh.write(f"{row.method},{row.queue},{row.cutoff},{_fmt(row.ndcg)}\n")
    written.append(path)

    path = _out(config, "eval", "bands.csv")
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {stamp}\n")
        fh.write("method,band_lo,band_hi,count,ndcg\n")
        for name in tables.bands:
            for result in tables.bands[name]:
                fh.write(
                    f"{name},{_fmt(result.band.lo)},{_fmt(result.band.hi)},"
                    f"{result.count},{_fmt(result.ndcg)}\n"
                )
    written.append(path)

    path = _out(config, "eval", "bootstrap.csv")
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {stamp}\n")
        fh.write("method,baseline,k,delta,ci_low,ci_high,p_value,resamples\n")
        first_kappa = config.ranking.kappas[0]
        baseline = f"risk_averse_k{_kappa_label(first_kappa)}"
        for name, result in tables.bootstrap.items():
            fh.write(
                f"{name},{baseline},{result.k},{_fmt(result.delta)},{_fmt(result.ci_low)},"
                f"{_fmt(result.ci_high)},{_fmt(result.p_value)},{result.resamples}\n"
            )
    written.append(path)

    path = _out(config, "eval", "scenarios.csv")
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {stamp}\n")
        fh.write("scenario,method,k,ndcg_before,ndcg_after,change_pct\n")
        for row in tables.scenarios:
            fh.write(
                f"{row.scenario.value},{row.method.value},{row.k},"
                f"{_fmt(row.ndcg_before)},{_fmt(row.ndcg_after)},{_fmt(row.change_pct)}\n"
            )
    written.append(path)

    if tables.sweep is not None:
        path = _out(config, "eval", "sweep.csv")
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"# {stamp}\n")
            cutoff_cols = ",".join(f"ndcg_at{k}_pred" for k in tables.sweep.cutoffs)
            fh.write(f"kind,parameter,value,{cutoff_cols}\n")
            for point in tables.sweep.points:
                vals = ",".join(_fmt(v) for v in point.ndcg_by_cutoff)
                fh.write(f"point,{point.parameter},{_fmt(point.value)},{vals}\n")
            for name, spreads in tables.sweep.parameter_spread.items():
                vals = ",".join(_fmt(v) for v in spreads)
                fh.write(f"parameter_spread,{name},,{vals}\n")
            vals = ",".join(_fmt(v) for v in tables.sweep.spread_by_cutoff)
            fh.write(f"overall_spread,,,{vals}\n")
        written.append(path)

    written.append(write_summary(config, tables))
    return written


def write_summary(config: RunConfig, tables: EvalTables) -> Path:
    path = _out(config, "eval", "summary.txt")
    lines = [f"# {artifact_stamp(config)}", ""]
    d = tables.detector
    lines.append(
        f"detector ({tables.detector_mode.value}): accuracy={d.accuracy:.4f} "
        f"precision={d.precision:.4f} recall={d.recall:.4f} f1={d.f1:.4f}"
    )
    lines.append("")
    lines.append("NDCG_rel by method (queue@cutoff):")
    for row in tables.metrics:
        lines.append(f"  {row.method:28s} {row.queue}@{row.cutoff:<4d} {row.ndcg:.4f}")
    if tables.bootstrap:
        lines.append("")
        lines.append("paired bootstrap vs risk-averse (delta [95% CI], p):")
        for name, r in tables.bootstrap.items():
            lines.append(
                f"  {name:28s} {r.delta:+.4f} [{r.ci_low:+.4f}, {r.ci_high:+.4f}] p={r.p_value:.4g}"
            )
    if tables.scenarios:
        lines.append("")
        lines.append("miscalibration scenarios (NDCG before -> after):")
        for row in tables.scenarios:
            pct = "n/a" if row.change_pct is None else f"{row.change_pct:+.2f}%"
            lines.append(
                f"  {row.scenario.value:16s} {row.method.value:18s} "
                f"{row.ndcg_before:.4f} -> {row.ndcg_after:.4f} ({pct})"
            )
    if tables.sweep is not None:
        lines.append("")
        spread = ", ".join(
            f"@{k}={s:.4f}"
            for k, s in zip(tables.sweep.cutoffs, tables.sweep.spread_by_cutoff)
        )
        lines.append(f"sensitivity sweep spread: {spread}")
        for name, spreads in tables.sweep.parameter_spread.items():
            per = ", ".join(
                f"@{k}={s:.4f}" for k, s in zip(tables.sweep.cutoffs, spreads)
            )
            lines.append(f"  {name:12s} {per}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# --- commands ----------------------------------------------------------------

@dataclass(frozen=True)
class RunOutput:
    """Everything a command produced, for callers and tests."""

    config: RunConfig
    prep: PreparedData
    detector_out: DetectorOutput | None = None
    table: dict[str, CalibrationRow] | None = None
    records: list[PreparedAlert] | None = None
    queues: dict[str, RankedQueue] | None = None
    tables: EvalTables | None = None
    written: tuple[Path, ...] = ()


def cmd_prepare(config: RunConfig) -> RunOutput:
    prep = prepare_data(config)
    written = write_splits(config, prep)
    return RunOutput(config, prep, written=tuple(written))


def cmd_calibrate(config: RunConfig) -> RunOutput:
    prep = prepare_data(config)
    detector_out = run_detector(config, prep)
    table = calibrate_heights(config, prep, detector_out)
    written = write_splits(config, prep)
    written.append(write_calibration(config, table))
    return RunOutput(config, prep, detector_out, table, written=tuple(written))


def cmd_rank(config: RunConfig) -> RunOutput:
    prep = prepare_data(config)
    detector_out = run_detector(config, prep)
    table = calibrate_heights(config, prep, detector_out)
    records, _catalog = build_alerts(config, prep, detector_out, table)
    queues = rank_all(config, records)
    written = write_splits(config, prep)
    written.append(write_calibration(config, table))
    written.extend(write_queues(config, queues, records))
    return RunOutput(config, prep, detector_out, table, records, queues, written=tuple(written))


def cmd_evaluate(config: RunConfig) -> RunOutput:
    prep = prepare_data(config)
    detector_out = run_detector(config, prep)
    table = calibrate_heights(config, prep, detector_out)
    records, catalog = build_alerts(config, prep, detector_out, table)
    queues = rank_all(config, records)
    tables = evaluate_all(config, prep, detector_out, table, records, catalog, queues)
    written = write_splits(config, prep)
    written.append(write_calibration(config, table))
    written.extend(write_queues(config, queues, records))
    written.extend(write_eval(config, tables))
    return RunOutput(
        config, prep, detector_out, table, records, queues, tables, tuple(written)
    )


def cmd_stress(config: RunConfig) -> RunOutput:
    """Flags-only end-to-end run through the identical evaluate path."""
    return cmd_evaluate(with_detector_mode(config, DetectorMode.TRAIN_FLAGS_ONLY))

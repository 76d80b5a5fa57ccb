"""Flow dataset loading, class mapping, normalization, splitting, synthesis.

Handles CIC-IDS2017-shaped CSVs (one header row, numeric feature columns, a
raw attack-type label column, optionally a weekday column) and generates a
desk-scale synthetic benchmark with the same schema. Raw attack types map
onto eight attack classes plus benign; unmapped labels become a flagged
"unknown_novel" class rather than an error.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .alerts import UNKNOWN_CLASS
from .errors import ConfigError, ParseError, ValidationError

logger = logging.getLogger(__name__)

BENIGN_CLASS = "benign"

LABEL_COLUMN_DEFAULT = "Label"
DAY_COLUMN_DEFAULT = "Day"

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday")
TRAIN_DAYS = ("Monday", "Tuesday")
VALIDATION_DAYS = ("Wednesday",)
TEST_DAYS = ("Thursday", "Friday")


@dataclass(frozen=True)
class FlowDataset:
    """Immutable rectangular flow dataset.

    ``labels`` holds raw attack-type strings as they appear in the source
    file; class mapping is a separate step. ``days`` is optional weekday
    tagging used by the day-based split.
    """

    features: np.ndarray
    feature_names: tuple[str, ...]
    labels: tuple[str, ...]
    days: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 2:
            raise ValidationError(f"features must be 2-dimensional, got shape {feats.shape}")
        object.__setattr__(self, "features", feats)
        if len(self.feature_names) != feats.shape[1]:
            raise ValidationError(
                f"{len(self.feature_names)} feature names for {feats.shape[1]} columns"
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValidationError("feature names must be unique")
        if len(self.labels) != feats.shape[0]:
            raise ValidationError(f"{len(self.labels)} labels for {feats.shape[0]} rows")
        if self.days is not None and len(self.days) != feats.shape[0]:
            raise ValidationError(f"{len(self.days)} day tags for {feats.shape[0]} rows")

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def take(self, indices: np.ndarray) -> "FlowDataset":
        """Row subset in the given index order."""
        idx = np.asarray(indices, dtype=int)
        return FlowDataset(
            self.features[idx],
            self.feature_names,
            tuple(self.labels[i] for i in idx),
            None if self.days is None else tuple(self.days[i] for i in idx),
        )


@dataclass(frozen=True)
class LoadReport:
    rows_kept: int
    rows_dropped: int


def load_csv(
    path: str | Path,
    *,
    label_column: str = LABEL_COLUMN_DEFAULT,
    day_column: str | None = DAY_COLUMN_DEFAULT,
) -> tuple[FlowDataset, LoadReport]:
    """Load a flow CSV, dropping rows with non-numeric or non-finite features.

    The day column is optional even when named: if the header lacks it the
    dataset simply carries no day tags. A missing label column or a file with
    no data rows is an error.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [name.strip() for name in rows[0]]
    if label_column not in header:
        raise ParseError(f"{path}: missing label column {label_column!r}")
    label_idx = header.index(label_column)
    day_idx = header.index(day_column) if day_column and day_column in header else None
    feature_idx = [
        i for i in range(len(header)) if i != label_idx and i != day_idx
    ]
    if not feature_idx:
        raise ParseError(f"{path}: no feature columns")
    if len(rows) == 1:
        raise ParseError(f"{path}: no data rows")

    matrix: list[list[float]] = []
    labels: list[str] = []
    days: list[str] = []
    dropped = 0
    for row in rows[1:]:
        if len(row) != len(header):
            raise ParseError(f"{path}: row {len(matrix) + dropped + 2} has {len(row)} fields, expected {len(header)}")
        try:
            values = [float(row[i]) for i in feature_idx]
        except ValueError:
            dropped += 1
            continue
        if not all(np.isfinite(values)):
            dropped += 1
            continue
        matrix.append(values)
        labels.append(row[label_idx].strip())
        if day_idx is not None:
            days.append(row[day_idx].strip())
    if not matrix:
        raise ParseError(f"{path}: all {dropped} data rows were dropped")
    dataset = FlowDataset(
        np.asarray(matrix, dtype=float),
        tuple(header[i] for i in feature_idx),
        tuple(labels),
        tuple(days) if day_idx is not None else None,
    )
    return dataset, LoadReport(len(matrix), dropped)


def write_flow_csv(
    dataset: FlowDataset, path: str | Path, header_comment: str | None = None
) -> None:
    """Write a dataset in the same schema load_csv reads."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(dataset.feature_names) + [LABEL_COLUMN_DEFAULT]
    if dataset.days is not None:
        header.append(DAY_COLUMN_DEFAULT)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if header_comment is not None:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(dataset)):
            row = [f"{v:.6g}" for v in dataset.features[i]]
            row.append(dataset.labels[i])
            if dataset.days is not None:
                row.append(dataset.days[i])
            writer.writerow(row)


# --- attack-class mapping --------------------------------------------------

def _canon(raw: str) -> str:
    """Canonical key for a raw attack-type label: lowercase, dashes and
    whitespace runs collapsed to single spaces."""
    text = raw.lower()
    for dash in ("–", "—", "-"):
        text = text.replace(dash, " ")
    return " ".join(text.split())


DEFAULT_CLASS_MAP: dict[str, str] = {
    "ftp patator": "BruteForce",
    "ssh patator": "BruteForce",
    "web attack brute force": "WebAttack",
    "web attack xss": "WebAttack",
    "web attack sql injection": "WebAttack",
    "heartbleed": "Heartbleed",
    "dos hulk": "DoS",
    "dos goldeneye": "DoS",
    "dos slowloris": "DoS",
    "dos slowhttptest": "DoS",
    "ddos": "DDoS",
    "portscan": "PortScan",
    "bot": "Bot",
    "infiltration": "Infiltration",
    "benign": BENIGN_CLASS,
}

ATTACK_CLASSES = (
    "Bot",
    "BruteForce",
    "DDoS",
    "DoS",
    "Heartbleed",
    "Infiltration",
    "PortScan",
    "WebAttack",
)


def load_class_map_override(path: str | Path) -> dict[str, str]:
    """Read raw-label overrides from a two-column CSV (raw, class)."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"class map override not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows or [c.strip().lower() for c in rows[0]] != ["raw", "class"]:
        raise ParseError(f"{path}: expected header raw,class")
    override: dict[str, str] = {}
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ParseError(f"{path}: row {n} has {len(row)} fields, expected 2")
        raw, cls = row[0].strip(), row[1].strip()
        if not raw or not cls:
            raise ParseError(f"{path}: row {n} has an empty field")
        override[_canon(raw)] = cls
    return override


def map_attack_types(
    labels: Sequence[str], override: Mapping[str, str] | None = None
) -> tuple[str, ...]:
    """Map raw attack-type labels to class labels.

    Matching is case- and dash-insensitive. Labels not covered by the
    built-in table or the override map to the flagged unknown class.
    """
    table = dict(DEFAULT_CLASS_MAP)
    if override:
        table.update(override)
    return tuple(table.get(_canon(raw), UNKNOWN_CLASS) for raw in labels)


def binary_labels(classes: Sequence[str]) -> np.ndarray:
    """Ground-truth attack indicator: 1 for any non-benign class."""
    return np.asarray([0 if cls == BENIGN_CLASS else 1 for cls in classes], dtype=int)


# --- normalization -----------------------------------------------------------

@dataclass(frozen=True)
class NormStats:
    """Per-feature min/max computed on the training split."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        mins = np.asarray(self.mins, dtype=float)
        maxs = np.asarray(self.maxs, dtype=float)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ValidationError("mins and maxs must be 1-d arrays of equal length")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)


def fit_normalization(features: np.ndarray) -> NormStats:
    feats = np.asarray(features, dtype=float)
    return NormStats(feats.min(axis=0), feats.max(axis=0))


def apply_normalization(features: np.ndarray, stats: NormStats) -> np.ndarray:
    """Min-max scale into [0,1] with train statistics; out-of-range values
    clip and constant features collapse to 0.0."""
    feats = np.asarray(features, dtype=float)
    if feats.shape[1] != stats.mins.shape[0]:
        raise ValidationError(
            f"{feats.shape[1]} features but statistics cover {stats.mins.shape[0]}"
        )
    span = stats.maxs - stats.mins
    constant = span == 0.0
    safe_span = np.where(constant, 1.0, span)
    scaled = (feats - stats.mins) / safe_span
    scaled = np.where(constant, 0.0, scaled)
    return np.clip(scaled, 0.0, 1.0)


def normalize(dataset: FlowDataset, stats: NormStats | None = None) -> tuple[FlowDataset, NormStats]:
    """Normalize a dataset, fitting statistics on it unless given."""
    if stats is None:
        stats = fit_normalization(dataset.features)
    scaled = apply_normalization(dataset.features, stats)
    return FlowDataset(scaled, dataset.feature_names, dataset.labels, dataset.days), stats


# --- splitting ---------------------------------------------------------------

class SplitMode(str, Enum):
    DAY_BASED = "day_based"
    STRATIFIED = "stratified"


@dataclass(frozen=True)
class SplitSpec:
    """Split request. ``mode=None`` selects day-based when the day-based
    training split carries at least the threshold share of attacks, falling
    back to a seeded stratified split otherwise."""

    mode: SplitMode | None = None
    fractions: tuple[float, float, float] = (0.5, 0.2, 0.3)
    attack_share_threshold: float = 0.05
    seed: int = 42

    def __post_init__(self) -> None:
        if len(self.fractions) != 3 or any(f < 0.0 for f in self.fractions):
            raise ValidationError(f"fractions must be three non-negative reals, got {self.fractions!r}")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValidationError(f"fractions must sum to 1, got {self.fractions!r}")
        if not 0.0 <= self.attack_share_threshold <= 1.0:
            raise ValidationError(
                f"attack_share_threshold must lie in [0,1], got {self.attack_share_threshold!r}"
            )


@dataclass(frozen=True)
class SplitResult:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    mode_used: SplitMode


def _day_indices(days: Sequence[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    unknown = sorted({d for d in days} - set(WEEKDAYS))
    if unknown:
        raise ValidationError(f"unknown day tags: {', '.join(unknown)}")
    tags = np.asarray(days)
    return (
        np.flatnonzero(np.isin(tags, TRAIN_DAYS)),
        np.flatnonzero(np.isin(tags, VALIDATION_DAYS)),
        np.flatnonzero(np.isin(tags, TEST_DAYS)),
    )


def _stratified_indices(
    classes: Sequence[str], spec: SplitSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(spec.seed)
    train: list[np.ndarray] = []
    val: list[np.ndarray] = []
    test: list[np.ndarray] = []
    arr = np.asarray(classes)
    for cls in sorted(set(classes)):
        idx = np.flatnonzero(arr == cls)
        if idx.size < 3:
            logger.warning(
                "class %s has %d rows, fewer than 3; placing all in train", cls, idx.size
            )
            train.append(idx)
            continue
        idx = rng.permutation(idx)
        n_train = int(idx.size * spec.fractions[0])
        n_val = int(idx.size * spec.fractions[1])
        train.append(idx[:n_train])
        val.append(idx[n_train : n_train + n_val])
        test.append(idx[n_train + n_val :])

    def merge(parts: list[np.ndarray]) -> np.ndarray:
        if not parts:
            return np.asarray([], dtype=int)
        return np.sort(np.concatenate(parts).astype(int))

    return merge(train), merge(val), merge(test)


def split(dataset: FlowDataset, classes: Sequence[str], spec: SplitSpec) -> SplitResult:
    """Partition rows into train/validation/test.

    Day-based uses Monday+Tuesday for train, Wednesday for validation,
    Thursday+Friday for test, and is only viable when its training split
    contains enough attacks; stratified preserves class proportions.
    """
    if len(classes) != len(dataset):
        raise ValidationError(f"{len(classes)} class labels for {len(dataset)} rows")
    mode = spec.mode
    if mode is SplitMode.DAY_BASED and dataset.days is None:
        raise ValidationError("day-based split requested but dataset has no day tags")
    if mode is None:
        mode = SplitMode.STRATIFIED
        if dataset.days is not None:
            train_idx, _, _ = _day_indices(dataset.days)
            if train_idx.size:
                share = float(np.mean(binary_labels([classes[i] for i in train_idx])))
                if share >= spec.attack_share_threshold:
                    mode = SplitMode.DAY_BASED
    if mode is SplitMode.DAY_BASED:
        train_idx, val_idx, test_idx = _day_indices(dataset.days)
    else:
        train_idx, val_idx, test_idx = _stratified_indices(classes, spec)
    return SplitResult(train_idx, val_idx, test_idx, mode)


# --- synthetic benchmark -----------------------------------------------------

DEFAULT_CLASS_MIX: dict[str, float] = {
    "DoS": 0.17,
    "PortScan": 0.16,
    "DDoS": 0.15,
    "BruteForce": 0.14,
    "WebAttack": 0.12,
    "Bot": 0.11,
    "Heartbleed": 0.09,
    "Infiltration": 0.06,
}

# Raw attack-type labels emitted per class, cycled deterministically so the
# class-mapping path is exercised end to end.
_RAW_LABELS: dict[str, tuple[str, ...]] = {
    "BruteForce": ("FTP-Patator", "SSH-Patator"),
    "WebAttack": ("Web Attack - Brute Force", "Web Attack - XSS", "Web Attack - Sql Injection"),
    "Heartbleed": ("Heartbleed",),
    "DoS": ("DoS Hulk", "DoS GoldenEye", "DoS slowloris", "DoS Slowhttptest"),
    "DDoS": ("DDoS",),
    "PortScan": ("PortScan",),
    "Bot": ("Bot",),
    "Infiltration": ("Infiltration",),
}

STRONG_FEATURE_NAMES = (
    "Flow Duration",
    "Total Fwd Packets",
    "Total Backward Packets",
    "Flow Bytes/s",
    "Flow Packets/s",
    "Fwd Packet Length Mean",
    "Bwd Packet Length Mean",
    "Flow IAT Mean",
    "Fwd IAT Mean",
    "Bwd IAT Mean",
    "Packet Length Variance",
    "Average Packet Size",
    "Subflow Fwd Bytes",
    "Init Win Bytes Forward",
)

FLAG_FEATURE_NAMES = (
    "FIN Flag Count",
    "SYN Flag Count",
    "RST Flag Count",
    "PSH Flag Count",
    "ACK Flag Count",
    "URG Flag Count",
    "CWE Flag Count",
    "ECE Flag Count",
)

# Fixed loading pattern projecting the scalar flag activity level onto the
# eight flag features.
_FLAG_LOADINGS = np.asarray([1.0, 0.9, 0.8, 1.1, 0.7, 0.6, 0.9, 0.8])

# Per-class multiplier on the detectable flag level: aggressive attack
# families hammer TCP flags harder, so detector confidence carries a mild
# severity signal instead of being pure noise.
DEFAULT_CLASS_FLAG_FACTOR: dict[str, float] = {
    "Heartbleed": 1.70,
    "BruteForce": 1.10,
    "WebAttack": 1.08,
    "DDoS": 1.05,
    "Bot": 1.00,
    "DoS": 0.95,
    "Infiltration": 0.85,
    "PortScan": 0.70,
}


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic benchmark shape.

    The strong features separate attacks from benign traffic cleanly (scaled
    by ``separation``); the flag features carry a weak signal where most
    attacks are indistinguishable from benign background and a small benign
    subpopulation shows attack-like flag activity.
    """

    n_flows: int = 5000
    attack_fraction: float = 0.2
    seed: int = 42
    separation: float = 3.2
    class_weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_CLASS_MIX))
    attack_detectable_rate: float = 0.45
    attack_flag_level: float = 0.35
    attack_flag_sd: float = 0.06
    class_flag_factor: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_CLASS_FLAG_FACTOR)
    )
    benign_outlier_rate: float = 0.03
    benign_outlier_level: float = 0.55
    benign_outlier_sd: float = 0.08

    def __post_init__(self) -> None:
        if self.n_flows < 1:
            raise ConfigError(f"n_flows must be >= 1, got {self.n_flows!r}")
        if not 0.0 <= self.attack_fraction <= 1.0:
            raise ConfigError(f"attack_fraction must lie in [0,1], got {self.attack_fraction!r}")
        if self.separation < 0.0:
            raise ConfigError(f"separation must be >= 0, got {self.separation!r}")
        if not self.class_weights:
            raise ConfigError("class_weights must not be empty")
        unknown = sorted(set(self.class_weights) - set(_RAW_LABELS))
        if unknown:
            raise ConfigError(f"unknown attack classes in class_weights: {', '.join(unknown)}")
        if any(w < 0.0 for w in self.class_weights.values()) or sum(self.class_weights.values()) <= 0.0:
            raise ConfigError("class_weights must be non-negative with positive sum")
        missing = sorted(set(self.class_weights) - set(self.class_flag_factor))
        if missing:
            raise ConfigError(f"class_flag_factor missing classes: {', '.join(missing)}")
        if any(f <= 0.0 for f in self.class_flag_factor.values()):
            raise ConfigError("class_flag_factor values must be > 0")
        for name in ("attack_detectable_rate", "benign_outlier_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0,1], got {value!r}")


def class_counts(config: SynthConfig) -> dict[str, int]:
    """Exact per-class attack counts by largest-remainder apportionment."""
    n_attacks = round(config.n_flows * config.attack_fraction)
    total = sum(config.class_weights.values())
    names = sorted(config.class_weights)
    quotas = {cls: n_attacks * config.class_weights[cls] / total for cls in names}
    counts = {cls: int(quotas[cls]) for cls in names}
    shortfall = n_attacks - sum(counts.values())
    by_remainder = sorted(names, key=lambda cls: (counts[cls] - quotas[cls], cls))
    for cls in by_remainder[:shortfall]:
        counts[cls] += 1
    return counts


def synth_generate(config: SynthConfig = SynthConfig()) -> FlowDataset:
    """Generate the synthetic benchmark; byte-identical output per seed."""
    rng = np.random.default_rng(config.seed)
    counts = class_counts(config)
    n_attacks = sum(counts.values())
    n_benign = config.n_flows - n_attacks

    labels: list[str] = []
    attack_class_seq: list[str] = []
    for cls in sorted(counts):
        raw = _RAW_LABELS[cls]
        for i in range(counts[cls]):
            labels.append(raw[i % len(raw)])
            attack_class_seq.append(cls)
    labels.extend("BENIGN" for _ in range(n_benign))
    attack_mask = np.asarray([True] * n_attacks + [False] * n_benign)

    n, d_strong = config.n_flows, len(STRONG_FEATURE_NAMES)
    strong = rng.normal(0.0, 1.0, size=(n, d_strong))
    direction = np.ones(d_strong) / np.sqrt(d_strong)
    strong[attack_mask] += config.separation * direction

    # Scalar flag activity level per flow, then projection plus noise.
    level = np.empty(n)
    attack_rows = np.flatnonzero(attack_mask)
    benign_rows = np.flatnonzero(~attack_mask)
    detectable = rng.random(attack_rows.size) < config.attack_detectable_rate
    level_mean = np.asarray(
        [
            config.attack_flag_level * config.class_flag_factor[cls]
            for cls in attack_class_seq
        ]
    )
    level[attack_rows] = np.where(
        detectable,
        rng.normal(level_mean, config.attack_flag_sd),
        rng.normal(0.02, 0.05, size=attack_rows.size),
    )
    outlier = rng.random(benign_rows.size) < config.benign_outlier_rate
    level[benign_rows] = np.where(
        outlier,
        rng.normal(config.benign_outlier_level, config.benign_outlier_sd, size=benign_rows.size),
        rng.normal(0.0, 0.05, size=benign_rows.size),
    )
    flags = np.outer(level, _FLAG_LOADINGS) + rng.normal(
        0.0, 0.06, size=(n, len(FLAG_FEATURE_NAMES))
    )

    order = rng.permutation(n)
    features = np.hstack([strong, flags])[order]
    labels_out = tuple(labels[i] for i in order)
    days = tuple(WEEKDAYS[i % len(WEEKDAYS)] for i in range(n))
    return FlowDataset(
        features,
        STRONG_FEATURE_NAMES + FLAG_FEATURE_NAMES,
        labels_out,
        days,
    )

"""Queue quality evaluation with graded relevance.

Relevance of a true attack is its fuzzy core discounted by the class
uncertainty factor, ``core * (1 - uf)``; benign alerts have relevance zero.
Queues are scored with NDCG over exponential gains. On top of that sit the
analyst-facing views (detector-predicted queue, confidence bands), a paired
bootstrap for method comparisons, miscalibration scenarios, and a parameter
sensitivity sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .alerts import Alert, AttackClassProfile, CfMode, PreparedAlert, assemble
from .calibration import HeightParams, heights_from_f1, instance_height
from .errors import EvaluationError, ValidationError
from .ranking import Method, RankedQueue, RiskProfile, rank
from .sgfn import GaussianFuzzyNumber

PREDICTION_THRESHOLD = 0.5


def relevance(record: PreparedAlert) -> float:
    """Graded relevance: ``core * (1 - uf)`` for true attacks, else 0."""
    if record.label is None:
        raise EvaluationError(f"alert {record.alert_id!r} has no ground-truth label")
    return record.core * (1.0 - record.uf) if record.label == 1 else 0.0


def relevance_by_id(records: Sequence[PreparedAlert]) -> dict[str, float]:
    return {r.alert_id: relevance(r) for r in records}


def dcg_at_k(rels: Sequence[float], k: int) -> float:
    """Discounted cumulative gain over the first ``k`` positions."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k!r}")
    head = np.asarray(rels, dtype=float)[:k]
    if head.size == 0:
        return 0.0
    gains = np.exp2(head) - 1.0
    discounts = np.log2(np.arange(2, head.size + 2, dtype=float))
    return float(np.sum(gains / discounts))


def ndcg_at_k(rels: Sequence[float], k: int) -> float:
    """Normalized DCG; a queue with no relevant items scores 0.0."""
    ideal = dcg_at_k(sorted(rels, reverse=True), k)
    if ideal == 0.0:
        return 0.0
    return dcg_at_k(rels, k) / ideal


def queue_relevances(queue: RankedQueue, rel_by_id: Mapping[str, float]) -> list[float]:
    try:
        return [rel_by_id[entry.alert_id] for entry in queue]
    except KeyError as exc:
        raise EvaluationError(f"queue references unknown alert id {exc.args[0]!r}") from exc


def ndcg_of_queue(queue: RankedQueue, rel_by_id: Mapping[str, float], k: int) -> float:
    return ndcg_at_k(queue_relevances(queue, rel_by_id), k)


def _renumber(queue: RankedQueue, entries: Sequence) -> RankedQueue:
    return RankedQueue(
        queue.method,
        queue.kappa,
        tuple(replace(e, rank=i) for i, e in enumerate(entries, start=1)),
    )


def predicted_queue(
    queue: RankedQueue, threshold: float = PREDICTION_THRESHOLD
) -> RankedQueue:
    """Restrict a queue to detector-predicted attacks (p >= threshold),
    preserving order and renumbering ranks."""
    kept = [e for e in queue if e.explanation.p >= threshold]
    return _renumber(queue, kept)


# --- confidence bands ------------------------------------------------------


@dataclass(frozen=True)
class Band:
    """Probability band [lo, hi), right-closed when ``closed`` is set."""

    lo: float
    hi: float
    closed: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise ValidationError(f"band bounds must satisfy 0 <= lo < hi <= 1, got {self!r}")

    def contains(self, p: float) -> bool:
        return self.lo <= p <= self.hi if self.closed else self.lo <= p < self.hi


DEFAULT_BANDS = (Band(0.3, 0.5), Band(0.5, 0.7), Band(0.7, 1.0, closed=True))


@dataclass(frozen=True)
class BandResult:
    band: Band
    count: int
    ndcg: float | None


def band_eval(
    queue: RankedQueue,
    rel_by_id: Mapping[str, float],
    bands: Sequence[Band] = DEFAULT_BANDS,
    k: int = 100,
) -> list[BandResult]:
    """NDCG within each confidence band.

    The restriction keeps the method's own ordering (the band view is a
    subsequence of the queue). Empty bands report no score rather than zero.
    """
    results = []
    for band in bands:
        entries = [e for e in queue if band.contains(e.explanation.p)]
        if not entries:
            results.append(BandResult(band, 0, None))
            continue
        sub = _renumber(queue, entries)
        results.append(BandResult(band, len(entries), ndcg_of_queue(sub, rel_by_id, k)))
    return results


# --- paired bootstrap ------------------------------------------------------


@dataclass(frozen=True)
class BootstrapResult:
    delta: float
    ci_low: float
    ci_high: float
    p_value: float
    resamples: int
    k: int


def paired_bootstrap(
    queue_a: RankedQueue,
    queue_b: RankedQueue,
    rel_by_id: Mapping[str, float],
    *,
    k: int = 500,
    resamples: int = 1000,
    seed: int = 0,
) -> BootstrapResult:
    """Paired bootstrap over rank positions for NDCG@k of two queues.

    Each replicate draws k positions in 1..k with replacement and applies the
    *same* draw to both queues' top-k relevance sequences. The drawn positions
    are kept in rank order, so each replicate preserves the queue's own
    ordering over the resampled multiset; its ideal is that multiset sorted
    descending. Delta is the mean of the replicate differences (A minus B),
    the CI is the percentile interval, and the two-sided p-value comes from
    the shifted (null-centered) distribution, floored at 1/resamples.
    """
    if resamples < 1:
        raise ValidationError(f"resamples must be >= 1, got {resamples!r}")
    ids_a, ids_b = set(queue_a.ids()), set(queue_b.ids())
    if ids_a != ids_b:
        raise EvaluationError("paired bootstrap requires queues over the same alert universe")
    k_eff = min(k, len(queue_a))
    if k_eff < 1:
        raise EvaluationError("paired bootstrap requires non-empty queues")
    gains = []
    for queue in (queue_a, queue_b):
        rels = np.asarray(queue_relevances(queue, rel_by_id)[:k_eff], dtype=float)
        gains.append(np.exp2(rels) - 1.0)
    discounts = np.log2(np.arange(2, k_eff + 2, dtype=float))

    rng = np.random.default_rng(seed)
    # Sorting each draw keeps the queue's own rank order within the resample.
    idx = np.sort(rng.integers(0, k_eff, size=(resamples, k_eff)), axis=1)

    def replicate_ndcg(gain_vec: np.ndarray) -> np.ndarray:
        drawn = gain_vec[idx]  # (resamples, k_eff), in queue order
        dcg = (drawn / discounts).sum(axis=1)
        ideal = (np.sort(drawn, axis=1)[:, ::-1] / discounts).sum(axis=1)
        out = np.zeros(resamples)
        nonzero = ideal > 0.0
        out[nonzero] = dcg[nonzero] / ideal[nonzero]
        return out

    deltas = replicate_ndcg(gains[0]) - replicate_ndcg(gains[1])
    delta = float(deltas.mean())
    ci_low = float(np.percentile(deltas, 2.5))
    ci_high = float(np.percentile(deltas, 97.5))
    p_value = float(np.mean(np.abs(deltas - delta) >= abs(delta)))
    p_value = max(p_value, 1.0 / resamples)
    return BootstrapResult(delta, ci_low, ci_high, p_value, resamples, k_eff)


# --- miscalibration scenarios ---------------------------------------------


class ScenarioKind(str, Enum):
    OVERCONFIDENT = "overconfident"
    UNDERCONFIDENT = "underconfident"
    NOISE = "noise"


_SCENARIO_SCALES = {ScenarioKind.OVERCONFIDENT: 1.15, ScenarioKind.UNDERCONFIDENT: 0.85}


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    scale: float | None = None  # defaults to 1.15 / 0.85 by kind
    noise_sd: float = 0.2
    seed: int = 42

    def effective_scale(self) -> float:
        if self.scale is not None:
            return self.scale
        return _SCENARIO_SCALES.get(self.kind, 1.0)


def perturb(p: Sequence[float] | np.ndarray, spec: ScenarioSpec) -> np.ndarray:
    """Perturb a probability vector according to a miscalibration scenario.

    Overconfident multiplies by the scale and caps at 1; underconfident
    multiplies by the scale; noise adds seeded Gaussian noise. All results
    are clipped to [0, 1].
    """
    arr = np.asarray(p, dtype=float)
    if arr.size and not (np.all(arr >= 0.0) and np.all(arr <= 1.0)):
        raise ValidationError("probabilities must lie in [0, 1]")
    if spec.kind is ScenarioKind.NOISE:
        rng = np.random.default_rng(spec.seed)
        out = arr + rng.normal(0.0, spec.noise_sd, size=arr.shape)
    else:
        out = arr * spec.effective_scale()
    return np.clip(out, 0.0, 1.0)


def apply_scenario(
    records: Sequence[PreparedAlert], spec: ScenarioSpec
) -> list[PreparedAlert]:
    """Rebuild alerts under perturbed probabilities.

    The alert set is held fixed: cores, spreads, and class heights do not
    move; only p and the probability-capped instance height are recomputed.
    """
    perturbed = perturb([r.p for r in records], spec)
    out = []
    for record, p_new in zip(records, perturbed):
        fuzzy = GaussianFuzzyNumber(
            record.core, record.spread, instance_height(record.h_class, float(p_new))
        )
        out.append(replace(record, p=float(p_new), fuzzy=fuzzy))
    return out


@dataclass(frozen=True)
class ScenarioResult:
    scenario: ScenarioKind
    method: Method
    k: int
    ndcg_before: float
    ndcg_after: float

    @property
    def change_pct(self) -> float | None:
        if self.ndcg_before == 0.0:
            return None
        return 100.0 * (self.ndcg_after - self.ndcg_before) / self.ndcg_before


def scenario_eval(
    records: Sequence[PreparedAlert],
    scenarios: Sequence[ScenarioSpec],
    *,
    methods: Sequence[Method] = tuple(Method),
    kappa: float = 1.0,
    k: int = 100,
) -> list[ScenarioResult]:
    """NDCG@k before/after each scenario, per ranking method, on the full queue."""
    rel = relevance_by_id(records)
    profile = RiskProfile(kappa)
    before = {
        m: ndcg_of_queue(rank(records, m, profile), rel, k) for m in methods
    }
    results = []
    for spec in scenarios:
        shifted = apply_scenario(records, spec)
        for m in methods:
            after = ndcg_of_queue(rank(shifted, m, profile), rel, k)
            results.append(ScenarioResult(spec.kind, m, k, before[m], after))
    return results


# --- sensitivity sweep -----------------------------------------------------

DEFAULT_SWEEP_GRID: dict[str, tuple[float, ...]] = {
    "alpha": (0.5, 0.7, 0.9, 0.95),
    "h_min": (0.01, 0.05, 0.1),
    "h_max": (0.9, 0.95, 0.99),
    "uf_scale": (0.8, 1.0, 1.2),
    "kappa": (0.0, 0.5, 1.0, 1.5, 2.0),
}

_HEIGHT_PARAM_NAMES = ("alpha", "h_min", "h_max")


@dataclass(frozen=True)
class SweepInputs:
    """Everything needed to rebuild the ranked queue from scratch."""

    alerts: tuple[Alert, ...]
    catalog: Mapping[str, AttackClassProfile]
    f1_by_class: Mapping[str, float]
    cf_mode: CfMode = CfMode.CONTINUOUS


@dataclass(frozen=True)
class SweepPoint:
    parameter: str
    value: float
    ndcg_by_cutoff: tuple[float, ...]


@dataclass(frozen=True)
class SweepReport:
    cutoffs: tuple[int, ...]
    points: tuple[SweepPoint, ...]
    spread_by_cutoff: tuple[float, ...]
    parameter_spread: dict[str, tuple[float, ...]]


def _sweep_point(
    inputs: SweepInputs,
    height_params: HeightParams,
    uf_scale: float,
    kappa: float,
    rel_by_id: Mapping[str, float],
    cutoffs: Sequence[int],
    threshold: float,
) -> tuple[float, ...]:
    heights = heights_from_f1(inputs.f1_by_class, height_params)
    records = assemble(
        list(inputs.alerts), inputs.catalog, heights,
        cf_mode=inputs.cf_mode, uf_scale=uf_scale,
    )
    queue = predicted_queue(rank(records, Method.RISK_AVERSE, RiskProfile(kappa)), threshold)
    if len(queue) == 0:
        raise EvaluationError("sensitivity sweep: predicted queue is empty")
    return tuple(ndcg_of_queue(queue, rel_by_id, k) for k in cutoffs)


def sensitivity_sweep(
    inputs: SweepInputs,
    grid: Mapping[str, Sequence[float]] | None = None,
    *,
    defaults: HeightParams = HeightParams(),
    kappa: float = 1.0,
    uf_scale: float = 1.0,
    cutoffs: Sequence[int] = (10, 100),
    threshold: float = PREDICTION_THRESHOLD,
) -> SweepReport:
    """One-at-a-time sensitivity sweep of the risk-averse predicted queue.

    Each grid entry varies a single parameter while the others stay at their
    defaults. Relevance is computed once from the default assembly, so grid
    points are scored against a fixed target.
    """
    if grid is None:
        grid = DEFAULT_SWEEP_GRID
    for name in grid:
        if name not in (*_HEIGHT_PARAM_NAMES, "uf_scale", "kappa"):
            raise ValidationError(f"unknown sweep parameter {name!r}")
    base_records = assemble(
        list(inputs.alerts), inputs.catalog,
        heights_from_f1(inputs.f1_by_class, defaults),
        cf_mode=inputs.cf_mode, uf_scale=uf_scale,
    )
    rel = relevance_by_id(base_records)

    points: list[SweepPoint] = []
    parameter_spread: dict[str, tuple[float, ...]] = {}
    for name, values in grid.items():
        param_points: list[SweepPoint] = []
        for value in values:
            params = defaults
            scale, kap = uf_scale, kappa
            if name in _HEIGHT_PARAM_NAMES:
                params = replace(defaults, **{name: float(value)})
            elif name == "uf_scale":
                scale = float(value)
            else:
                kap = float(value)
            ndcgs = _sweep_point(inputs, params, scale, kap, rel, cutoffs, threshold)
            param_points.append(SweepPoint(name, float(value), ndcgs))
        points.extend(param_points)
        parameter_spread[name] = tuple(
            max(p.ndcg_by_cutoff[i] for p in param_points)
            - min(p.ndcg_by_cutoff[i] for p in param_points)
            for i in range(len(cutoffs))
        )
    spread = tuple(
        max(p.ndcg_by_cutoff[i] for p in points) - min(p.ndcg_by_cutoff[i] for p in points)
        for i in range(len(cutoffs))
    )
    return SweepReport(tuple(cutoffs), tuple(points), spread, parameter_spread)

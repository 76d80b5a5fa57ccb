"""Ranking methods: scores, ordering contracts, queue serialization."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import make_record, random_batch
from fuzztriage.errors import DomainError, ValidationError
from fuzztriage.ranking import (
    QUEUE_HEADER,
    Method,
    RankedQueue,
    RiskProfile,
    kappa_sweep,
    method_scores,
    minmax_norm,
    rank,
    write_queue_csv,
)


def reference_triple():
    # three alerts with hand-checked risk-averse scores at kappa=1:
    # 7.6785 > 7.2483 > 6.6318, so the confident high-core alert wins
    # and the low-height one drops to the bottom
    return [
        make_record("353856", 7.2504, 1.4706, 0.3796, 0.3796),
        make_record("192641", 7.3872, 1.4267, 0.7992, 0.9872),
        make_record("230833", 7.8000, 1.2480, 0.7992, 1.0000),
    ]


class TestMinMaxNorm:
    def test_two_point_span(self):
        np.testing.assert_allclose(minmax_norm([5.0, 10.0]), [0.0, 1.0])

    def test_midpoint(self):
        np.testing.assert_allclose(minmax_norm([5.0, 7.5, 10.0]), [0.0, 0.5, 1.0])

    def test_constant_maps_to_half(self):
        np.testing.assert_allclose(minmax_norm([7.0, 7.0, 7.0]), [0.5, 0.5, 0.5])

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            minmax_norm([])

    @pytest.mark.parametrize("bad", [float("inf"), float("nan")])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValidationError):
            minmax_norm([1.0, bad])


class TestRiskProfile:
    def test_default(self):
        assert RiskProfile().kappa == 1.0

    @pytest.mark.parametrize("bad", [-0.1, float("nan"), float("inf")])
    def test_bad_kappa(self, bad):
        with pytest.raises(DomainError):
            RiskProfile(bad)


class TestReferenceTriple:
    def test_risk_averse_scores(self):
        queue = rank(reference_triple(), Method.RISK_AVERSE, RiskProfile(1.0))
        assert queue.ids() == ("230833", "192641", "353856")
        scores = [a.score for a in queue]
        assert scores[0] == pytest.approx(7.6785, abs=5e-4)
        assert scores[1] == pytest.approx(7.2483, abs=5e-4)
        assert scores[2] == pytest.approx(6.6318, abs=5e-4)

    def test_severity_only_ignores_height(self):
        queue = rank(reference_triple(), Method.SEVERITY_ONLY)
        assert queue.ids() == ("230833", "192641", "353856")
        assert [a.score for a in queue] == [7.8000, 7.3872, 7.2504]

    def test_confidence_only_follows_p(self):
        queue = rank(reference_triple(), Method.CONFIDENCE_ONLY)
        assert queue.ids() == ("230833", "192641", "353856")
        assert [a.score for a in queue] == [1.0000, 0.9872, 0.3796]


class TestMethodScores:
    def test_weighted_sum_blends_normalized_halves(self):
        alerts = [
            make_record("a", 5.0, 0.75, 0.9, 0.0),
            make_record("b", 7.5, 1.10, 0.9, 0.5),
            make_record("c", 10.0, 1.50, 0.9, 1.0),
        ]
        np.testing.assert_allclose(
            method_scores(alerts, Method.WEIGHTED_SUM), [0.0, 0.5, 1.0]
        )

    def test_weighted_sum_constant_p_reduces_to_severity_shape(self):
        alerts = [
            make_record("a", 5.0, 0.75, 0.9, 0.7),
            make_record("b", 10.0, 1.50, 0.9, 0.7),
        ]
        np.testing.assert_allclose(
            method_scores(alerts, Method.WEIGHTED_SUM), [0.25, 0.75]
        )

    @pytest.mark.parametrize("seed", range(6))
    def test_kappa_zero_matches_severity_order(self, seed):
        alerts = random_batch(np.random.default_rng(seed), 40)
        ra = rank(alerts, Method.RISK_AVERSE, RiskProfile(0.0))
        so = rank(alerts, Method.SEVERITY_ONLY)
        assert ra.ids() == so.ids()


class TestRankMechanics:
    def test_empty_batch(self):
        queue = rank([], Method.SEVERITY_ONLY)
        assert len(queue) == 0
        assert queue.ids() == ()

    def test_duplicate_ids_rejected(self):
        alerts = [make_record("x", 5.0, 1.0, 0.9, 0.5), make_record("x", 6.0, 1.0, 0.9, 0.5)]
        with pytest.raises(ValidationError):
            rank(alerts, Method.SEVERITY_ONLY)

    @pytest.mark.parametrize("method", list(Method))
    def test_single_alert_rank_one(self, method):
        queue = rank([make_record("only", 6.0, 0.9, 0.63, 0.8)], method)
        assert len(queue) == 1
        assert queue.alerts[0].rank == 1
        assert queue.ids() == ("only",)

    def test_ranks_contiguous_from_one(self, rng):
        queue = rank(random_batch(rng, 25), Method.WEIGHTED_SUM)
        assert [a.rank for a in queue] == list(range(1, 26))

    def test_tie_breaks_ascending_id(self):
        alerts = [
            make_record("beta", 6.0, 0.9, 0.8, 0.4),
            make_record("alpha", 6.0, 0.9, 0.8, 0.9),
        ]
        queue = rank(alerts, Method.SEVERITY_ONLY)
        assert queue.ids() == ("alpha", "beta")

    @pytest.mark.parametrize("method", list(Method))
    def test_input_order_irrelevant(self, method, rng):
        alerts = random_batch(rng, 30)
        shuffled = [alerts[i] for i in rng.permutation(30)]
        assert rank(alerts, method).ids() == rank(shuffled, method).ids()

    def test_explanation_carries_inputs(self):
        record = make_record("e", 6.0, 0.9, 0.626, 0.75, cf=0.8, uf=0.15)
        entry = rank([record], Method.RISK_AVERSE, RiskProfile(1.5)).alerts[0]
        assert entry.explanation.core == 6.0
        assert entry.explanation.spread == 0.9
        assert entry.explanation.height == 0.626
        assert entry.explanation.p == 0.75
        assert entry.explanation.cf == 0.8
        assert entry.explanation.uf == 0.15
        assert entry.explanation.kappa == 1.5

    def test_kappa_none_outside_risk_averse(self):
        record = make_record("e", 6.0, 0.9, 0.626, 0.75)
        queue = rank([record], Method.CONFIDENCE_ONLY)
        assert queue.kappa is None
        assert queue.alerts[0].explanation.kappa is None


class TestKappaSweep:
    def test_low_height_alert_degrades_monotonically(self):
        alerts = [make_record("target", 9.5, 1.4, 0.05, 0.05)]
        alerts += [
            make_record(f"peer-{i}", 8.0 + 0.1 * i, 1.2, 0.95, 0.95) for i in range(8)
        ]
        ranks = []
        for queue in kappa_sweep(alerts, [0.0, 0.5, 1.0, 1.5, 2.0]):
            position = {a.alert_id: a.rank for a in queue}
            ranks.append(position["target"])
        assert ranks[0] == 1
        assert all(b >= a for a, b in zip(ranks, ranks[1:]))
        assert ranks[-1] > ranks[0]

    def test_single_kappa_matches_direct_call(self, rng):
        alerts = random_batch(rng, 20)
        swept = kappa_sweep(alerts, [1.0])
        direct = rank(alerts, Method.RISK_AVERSE, RiskProfile(1.0))
        assert len(swept) == 1
        assert swept[0].ids() == direct.ids()
        assert [a.score for a in swept[0]] == [a.score for a in direct]

    def test_full_height_neutralizes_kappa(self, rng):
        alerts = [
            make_record(f"a{i}", float(c), max(float(c) * 0.2, 1e-6), 1.0, 0.9)
            for i, c in enumerate(np.random.default_rng(3).uniform(1, 10, size=15))
        ]
        queues = kappa_sweep(alerts, [0.0, 1.0, 2.0])
        assert queues[0].ids() == queues[1].ids() == queues[2].ids()


class TestQueueCsv:
    def test_round_trip_shape(self, tmp_path, rng):
        records = random_batch(rng, 10)
        records[0] = make_record(records[0].alert_id, 5.0, 1.0, 0.9, 0.5, label=None)
        queue = rank(records, Method.RISK_AVERSE, RiskProfile(1.0))
        path = tmp_path / "queue.csv"
        write_queue_csv(path, queue, records, header_comment="config_hash=abc seed=7")
        lines = path.read_text().splitlines()
        assert lines[0] == "# config_hash=abc seed=7"
        assert lines[1] == ",".join(QUEUE_HEADER)
        assert len(lines) == 2 + len(records)
        first = lines[2].split(",")
        assert first[0] == "1"
        assert first[2] == "risk_averse"
        label_blank = [ln for ln in lines[2:] if ln.endswith(",")]
        assert len(label_blank) == 1

"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from fuzztriage.alerts import PreparedAlert
from fuzztriage.sgfn import GaussianFuzzyNumber


def make_record(
    alert_id: str,
    core: float,
    spread: float,
    height: float,
    p: float,
    label: int | None = 1,
    attack_class: str = "DoS",
    cf: float = 0.8,
    uf: float = 0.2,
    h_class: float | None = None,
) -> PreparedAlert:
    """PreparedAlert with explicit fuzzy parameters, bypassing assembly."""
    return PreparedAlert(
        alert_id=alert_id,
        attack_class=attack_class,
        p=p,
        cf=cf,
        uf=uf,
        h_class=height if h_class is None else h_class,
        fuzzy=GaussianFuzzyNumber(core, spread, height),
        label=label,
    )


def random_batch(rng: np.random.Generator, n: int) -> list[PreparedAlert]:
    """Batch of n alerts with randomized cores, heights, probabilities."""
    records = []
    for i in range(n):
        core = float(rng.uniform(0.5, 10.0))
        uf = float(rng.uniform(0.05, 0.5))
        records.append(
            make_record(
                alert_id=f"a{i:04d}",
                core=core,
                spread=max(core * uf, 1e-6),
                height=float(rng.uniform(0.05, 1.0)),
                p=float(rng.uniform(0.0, 1.0)),
                label=int(rng.integers(0, 2)),
                uf=uf,
            )
        )
    return records


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)

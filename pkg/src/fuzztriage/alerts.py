"""Alert model: from raw detector alerts to ranked-ready fuzzy numbers.

An alert is a claim ("this flow is a DoS attack, probability 0.83"). This
module attaches a severity profile to the claimed class, derives the fuzzy
core (CVSS scaled by a contextual factor), the spread (core times the class
uncertainty factor), and the height (class reliability capped by the alert's
own probability), producing one subnormal Gaussian fuzzy number per alert.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .calibration import (
    CVSS_DEFAULT,
    NOVEL_CLASS_HEIGHT,
    UF_UNKNOWN_DEFAULT,
    instance_height,
)
from .errors import ParseError, ValidationError
from .sgfn import GaussianFuzzyNumber

#: Class name given to alerts whose raw label cannot be mapped.
UNKNOWN_CLASS = "unknown_novel"

#: Spread assigned when the core is exactly zero (benign false positives),
#: keeping the fuzzy number well-formed without inventing severity.
SPREAD_FLOOR = 1e-6

_FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3
_UINT64 = 1 << 64


class Criticality(str, Enum):
    """Asset-criticality category attached to an alert by the operator."""

    CRITICAL = "critical"
    IMPORTANT = "important"
    NON_CRITICAL = "non_critical"
    ISOLATED = "isolated"


CRITICALITY_FACTORS: dict[Criticality, float] = {
    Criticality.CRITICAL: 1.0,
    Criticality.IMPORTANT: 0.8,
    Criticality.NON_CRITICAL: 0.5,
    Criticality.ISOLATED: 0.2,
}

CATEGORICAL_LEVELS = (0.2, 0.5, 0.8, 1.0)


class CfMode(str, Enum):
    """How contextual factors are derived when no criticality is given."""

    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Alert:
    """One detector alert: an id, a claimed class, and a probability."""

    alert_id: str
    attack_class: str
    p: float
    label: int | None = None
    criticality: Criticality | None = None

    def __post_init__(self) -> None:
        if not self.alert_id:
            raise ValidationError("alert_id must be non-empty")
        if not (0.0 <= self.p <= 1.0):
            raise ValidationError(f"p must lie in [0, 1], got {self.p!r}")
        if self.label not in (None, 0, 1):
            raise ValidationError(f"label must be 0, 1, or None, got {self.label!r}")


@dataclass(frozen=True)
class AttackClassProfile:
    """Severity profile of one attack class: base CVSS and uncertainty factor."""

    class_name: str
    cvss: float
    uf: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.cvss <= 10.0):
            raise ValidationError(f"cvss must lie in [0, 10], got {self.cvss!r}")
        if not (0.0 < self.uf <= 0.5):
            raise ValidationError(f"uf must lie in (0, 0.5], got {self.uf!r}")


@dataclass(frozen=True)
class ContextualFactor:
    """Environment scaling applied to the base CVSS score."""

    value: float
    mode: CfMode

    def __post_init__(self) -> None:
        if not (0.2 <= self.value <= 1.0):
            raise ValidationError(f"cf value must lie in [0.2, 1.0], got {self.value!r}")
        if self.mode is CfMode.CATEGORICAL and self.value not in CATEGORICAL_LEVELS:
            raise ValidationError(
                f"categorical cf must be one of {CATEGORICAL_LEVELS}, got {self.value!r}"
            )


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash (XOR then multiply, per byte)."""
    h = _FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV64_PRIME) % _UINT64
    return h


def contextual_factor(
    alert_id: str,
    attack_class: str,
    mode: CfMode = CfMode.CONTINUOUS,
    criticality: Criticality | None = None,
) -> ContextualFactor:
    """Derive the contextual factor for one alert.

    An explicit criticality category wins and yields its fixed categorical
    value. Otherwise the factor is derived deterministically from the alert
    identity: the FNV-1a hash of ``"id|class"`` mapped into [0.2, 1.0), either
    kept continuous or snapped to the nearest categorical level.
    """
    if criticality is not None:
        return ContextualFactor(CRITICALITY_FACTORS[criticality], CfMode.CATEGORICAL)
    u = fnv1a64(f"{alert_id}|{attack_class}".encode()) / _UINT64
    value = 0.2 + 0.8 * u
    if mode is CfMode.CATEGORICAL:
        value = min(CATEGORICAL_LEVELS, key=lambda level: abs(level - value))
    return ContextualFactor(value, mode)


def core_value(cvss: float, cf: float) -> float:
    """Fuzzy core: base CVSS scaled by the contextual factor."""
    if not (0.0 <= cvss <= 10.0):
        raise ValidationError(f"cvss must lie in [0, 10], got {cvss!r}")
    if not (0.2 <= cf <= 1.0):
        raise ValidationError(f"cf must lie in [0.2, 1.0], got {cf!r}")
    return cvss * cf


def spread_value(core: float, uf: float) -> float:
    """Fuzzy spread: core scaled by the class uncertainty factor.

    A zero core (benign or fully discounted alerts) gets the positive floor
    :data:`SPREAD_FLOOR` so the fuzzy number stays well-formed.
    """
    if not (core >= 0.0 and math.isfinite(core)):
        raise ValidationError(f"core must be finite and >= 0, got {core!r}")
    if not (0.0 < uf <= 0.5):
        raise ValidationError(f"uf must lie in (0, 0.5], got {uf!r}")
    spread = core * uf
    return spread if spread > 0.0 else SPREAD_FLOOR


def to_sgfn(
    alert: Alert,
    profile: AttackClassProfile,
    cf: ContextualFactor,
    height: float,
) -> GaussianFuzzyNumber:
    """Assemble the fuzzy number for one alert from its resolved parts."""
    core = core_value(profile.cvss, cf.value)
    return GaussianFuzzyNumber(core, spread_value(core, profile.uf), height)


# --- severity catalog ------------------------------------------------------

CATALOG_HEADER = ["class", "cvss", "uf"]
_DEFAULT_CATALOG_RESOURCE = "attack_class_profiles.csv"


def _parse_catalog(rows: Sequence[Sequence[str]], source: str) -> dict[str, AttackClassProfile]:
    catalog: dict[str, AttackClassProfile] = {}
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        try:
            name = row[0].strip()
            profile = AttackClassProfile(name, float(row[1]), float(row[2]))
        except (IndexError, ValueError, ValidationError) as exc:
            raise ParseError(f"{source}: bad catalog row {lineno}: {row!r} ({exc})") from exc
        if name in catalog:
            raise ParseError(f"{source}: duplicate catalog class {name!r} at row {lineno}")
        catalog[name] = profile
    return catalog


def load_catalog(path: str | Path | None = None) -> dict[str, AttackClassProfile]:
    """Load the class-severity catalog; ``None`` loads the bundled default."""
    if path is None:
        text = (
            resources.files("fuzztriage.data")
            .joinpath(_DEFAULT_CATALOG_RESOURCE)
            .read_text()
        )
        source = _DEFAULT_CATALOG_RESOURCE
        lines = text.splitlines()
    else:
        source = str(path)
        with open(path, newline="") as fh:
            lines = [line.rstrip("\n") for line in fh]
    lines = [line for line in lines if line and not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != CATALOG_HEADER:
        raise ParseError(f"{source}: expected header {CATALOG_HEADER}, got {header}")
    return _parse_catalog(list(reader), source)


def resolve_profile(
    attack_class: str, catalog: Mapping[str, AttackClassProfile]
) -> tuple[AttackClassProfile, bool]:
    """Look up a class profile, falling back to defaults for unknown classes.

    Returns the profile and a flag that is True when the class was not in the
    catalog (novel from the severity model's point of view).
    """
    profile = catalog.get(attack_class)
    if profile is not None:
        return profile, False
    return AttackClassProfile(attack_class, CVSS_DEFAULT, UF_UNKNOWN_DEFAULT), True


# --- alert CSV schema ------------------------------------------------------

ALERT_HEADER = ["id", "attack_class", "p", "label", "criticality"]


def load_alerts_csv(path: str | Path) -> list[Alert]:
    """Read alerts from the ``id,attack_class,p,label,criticality`` schema."""
    alerts: list[Alert] = []
    seen: set[str] = set()
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader, None)
    if header != ALERT_HEADER:
        raise ParseError(f"{path}: expected header {ALERT_HEADER}, got {header}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(ALERT_HEADER):
            raise ParseError(f"{path}: row {lineno} has {len(row)} fields, expected 5")
        alert_id, attack_class, p_text, label_text, crit_text = (f.strip() for f in row)
        try:
            p = float(p_text)
            label = int(label_text) if label_text else None
            criticality = Criticality(crit_text) if crit_text else None
            alert = Alert(alert_id, attack_class, p, label, criticality)
        except (ValueError, ValidationError) as exc:
            raise ParseError(f"{path}: bad alert row {lineno}: {exc}") from exc
        if alert_id in seen:
            raise ParseError(f"{path}: duplicate alert id {alert_id!r} at row {lineno}")
        seen.add(alert_id)
        alerts.append(alert)
    return alerts


def write_alerts_csv(
    path: str | Path, alerts: Sequence[Alert], header_comment: str | None = None
) -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(ALERT_HEADER)
        for a in alerts:
            writer.writerow(
                [
                    a.alert_id,
                    a.attack_class,
                    f"{a.p:.10g}",
                    "" if a.label is None else a.label,
                    "" if a.criticality is None else a.criticality.value,
                ]
            )


# --- batch assembly --------------------------------------------------------


@dataclass(frozen=True)
class PreparedAlert:
    """An alert with every ranked-ready quantity resolved and frozen."""

    alert_id: str
    attack_class: str
    p: float
    cf: float
    uf: float
    h_class: float
    fuzzy: GaussianFuzzyNumber
    label: int | None = None
    novel: bool = False

    @property
    def core(self) -> float:
        return self.fuzzy.core

    @property
    def spread(self) -> float:
        return self.fuzzy.spread

    @property
    def height(self) -> float:
        return self.fuzzy.height


def assemble(
    alerts: Sequence[Alert],
    catalog: Mapping[str, AttackClassProfile],
    heights: Mapping[str, float],
    *,
    cf_mode: CfMode = CfMode.CONTINUOUS,
    uf_scale: float = 1.0,
) -> list[PreparedAlert]:
    """Resolve every alert into a :class:`PreparedAlert`.

    ``heights`` maps calibrated classes to their class heights; classes absent
    from it are treated as novel and given the neutral height 0.5 before the
    per-alert probability cap. ``uf_scale`` globally rescales the uncertainty
    factors used for spread construction.
    """
    if not (uf_scale > 0.0 and math.isfinite(uf_scale)):
        raise ValidationError(f"uf_scale must be positive and finite, got {uf_scale!r}")
    prepared: list[PreparedAlert] = []
    for alert in alerts:
        profile, unknown = resolve_profile(alert.attack_class, catalog)
        uf = profile.uf * uf_scale
        if not (0.0 < uf <= 0.5):
            raise ValidationError(
                f"scaled uf {uf!r} for class {alert.attack_class!r} outside (0, 0.5]"
            )
        h_class = heights.get(alert.attack_class)
        novel = unknown or h_class is None
        if h_class is None:
            h_class = NOVEL_CLASS_HEIGHT
        cf = contextual_factor(alert.alert_id, alert.attack_class, cf_mode, alert.criticality)
        core = core_value(profile.cvss, cf.value)
        fuzzy = GaussianFuzzyNumber(
            core, spread_value(core, uf), instance_height(h_class, alert.p)
        )
        prepared.append(
            PreparedAlert(
                alert_id=alert.alert_id,
                attack_class=alert.attack_class,
                p=alert.p,
                cf=cf.value,
                uf=uf,
                h_class=h_class,
                fuzzy=fuzzy,
                label=alert.label,
                novel=novel,
            )
        )
    return prepared

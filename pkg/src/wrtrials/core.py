"""Domain types, stratification, and pair formation shared by every analysis.

A cohort is a plain list of :class:`PatientRecord`.  All records are frozen
dataclasses, so cohorts can be shared freely between concurrently running
replications as long as each replication owns its own random generator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration (bad rates, mixture not summing to one, ...)."""


class DegenerateResultError(RuntimeError):
    """An analysis could not produce a test statistic (all ties, V=0, ...)."""


class Arm(enum.IntEnum):
    CONTROL = 0
    TREATMENT = 1


class WinStatus(enum.Enum):
    """Outcome of one pairwise comparison, seen from the treatment side."""

    WIN = 1
    TIE = 0
    LOSS = -1

    def mirrored(self) -> "WinStatus":
        """Status after swapping the two patients' roles."""
        return WinStatus(-self.value)


@dataclass(frozen=True)
class BinaryOutcome:
    """Death indicator and hospitalization indicator (1 = event occurred)."""

    y_death: int
    x_hosp: int

    def __post_init__(self):
        if self.y_death not in (0, 1) or self.x_hosp not in (0, 1):
            raise ValueError("binary outcome components must be 0/1")


@dataclass(frozen=True)
class SurvivalOutcome:
    """Time to death and time to hospitalization, both strictly positive."""

    e_death: float
    e_hosp: float

    def __post_init__(self):
        if not (self.e_death > 0 and self.e_hosp > 0):
            raise ValueError("survival times must be strictly positive")


@dataclass(frozen=True)
class ContinuousOutcome:
    """Baseline level and times to improvement on three components."""

    y_base: float
    y: tuple[float, float, float]


Outcome = BinaryOutcome | SurvivalOutcome | ContinuousOutcome


@dataclass(frozen=True)
class PatientRecord:
    id: int
    arm: Arm
    covariates: tuple[int, int]
    stratum: int
    outcome: Outcome


@dataclass(frozen=True)
class MatchedPair:
    treatment_id: int
    control_id: int
    stratum: int


@dataclass(frozen=True)
class PairingResult:
    pairs: list[MatchedPair]
    n_unpaired_treatment: int
    n_unpaired_control: int


def stratify(covariates: tuple[int, int]) -> int:
    """Map a (x_cov1, x_cov2) pattern to its stratum index.

    The encoding 2*x_cov1 + x_cov2 is fixed so that cohorts written to CSV
    by one process can be re-analyzed by another without renumbering.
    """
    x1, x2 = covariates
    if x1 not in (0, 1) or x2 not in (0, 1):
        raise ValueError(f"covariates must be 0/1, got {covariates!r}")
    return 2 * x1 + x2


def form_matched_pairs(
    cohort: list[PatientRecord],
    rng: np.random.Generator,
    stratified: bool = True,
) -> PairingResult:
    """Form one-to-one treatment/control pairs, uniformly at random.

    Within each stratum (or globally when ``stratified`` is false) the two
    arms are shuffled and zipped; the surplus of the larger arm is left
    unpaired.  Deterministic given the generator state.

    Raises ``DegenerateResultError`` when no stratum can contribute a pair.
    """
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for rec in cohort:
        key = rec.stratum if stratified else 0
        slot = groups.setdefault(key, ([], []))
        slot[rec.arm == Arm.TREATMENT].append(rec.id)

    pairs: list[MatchedPair] = []
    unpaired_t = unpaired_c = 0
    for key in sorted(groups):
        controls, treatments = groups[key]
        t_ids = [treatments[i] for i in rng.permutation(len(treatments))]
        c_ids = [controls[i] for i in rng.permutation(len(controls))]
        m = min(len(t_ids), len(c_ids))
        pairs.extend(
            MatchedPair(treatment_id=t, control_id=c, stratum=key)
            for t, c in zip(t_ids[:m], c_ids[:m])
        )
        unpaired_t += len(t_ids) - m
        unpaired_c += len(c_ids) - m

    if not pairs:
        raise DegenerateResultError("no pairs formable: an arm is empty in every stratum")
    return PairingResult(pairs, unpaired_t, unpaired_c)


def all_cross_pairs(cohort, stratified=True):
    """Yield every (treatment_id, control_id, stratum) cross-arm pair.

    When stratified, pairs are restricted to a common stratum; otherwise all
    treatment x control combinations are produced (stratum reported as 0).
    """
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for rec in cohort:
        key = rec.stratum if stratified else 0
        slot = groups.setdefault(key, ([], []))
        slot[rec.arm == Arm.TREATMENT].append(rec.id)
    for key in sorted(groups):
        controls, treatments = groups[key]
        for t in treatments:
            for c in controls:
                yield (t, c, key)

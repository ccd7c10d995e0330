"""Confidence model: shrinkage noisy-or aggregation, mutex penalty, trusted override.

For a triple with evidence records (c_i, f_i) the aggregate is

    C_agg = 1 - prod_i (1 - lambda * c_i) ** f_i

and the stored confidence divides by (m + 1) where m counts mutually
exclusive competitors. Any trusted-source evidence (or validated status)
forces the confidence to exactly 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from dysect.kb.types import Evidence, Triple, ValidationError


@dataclass
class ConfidenceConfig:
    lam: float = 0.75  # shrinkage factor, in (0, 1]
    trusted_sources: set[str] = field(default_factory=set)

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValidationError(f"lambda must be in (0,1], got {self.lam}")


def aggregate(evidence: list[Evidence], cfg: ConfidenceConfig) -> float:
    """Conservative noisy-or over evidence; 0.0 for an empty list."""
    prod = 1.0
    exact_one = False
    for ev in evidence:
        term = 1.0 - cfg.lam * ev.local_confidence
        if term == 0.0:
            exact_one = True
        prod *= term**ev.frequency
    value = 1.0 - prod
    if value >= 1.0 and not exact_one:
        # the true product is positive but underflowed; stay strictly below 1
        value = math.nextafter(1.0, 0.0)
    return value


def is_trusted(triple: Triple, cfg: ConfidenceConfig) -> bool:
    if triple.status == "validated":
        return True
    return any(ev.source in cfg.trusted_sources for ev in triple.evidence)


def final_confidence(triple: Triple, mutex_count: int, cfg: ConfidenceConfig) -> float:
    """Stored confidence C(t): trusted override, else aggregate / (m + 1)."""
    if mutex_count < 0:
        raise ValidationError(f"mutex_count must be >= 0, got {mutex_count}")
    if is_trusted(triple, cfg):
        return 1.0
    return aggregate(triple.evidence, cfg) / (mutex_count + 1)


def count_mutex_violations(triple: Triple, kb) -> int:
    """Number of stored competitors (s, p, o') conflicting with t under a mutex set.

    Delegates to the KB, which owns the concept hierarchy needed to
    resolve each object's concept and its ancestors.
    """
    return kb.count_mutex_violations(triple)

"""Volume-eligibility gates (double conditioning).

A candle's volume must clear one of four minimum-volume rules before the
price/volume thresholds are even consulted; this is what keeps tiny
post-dormancy trades from flooding the detector with flags.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import MissingContext
from .rolling import ContextArrays, RollingContext

__all__ = ["RuleKind", "EligibilityRule", "is_eligible", "eligible_mask",
           "DEFAULT_RULES"]


class RuleKind(str, enum.Enum):
    TOTAL_VOLUME_30D = "total_volume_30d"
    AVG_DAILY = "avg_daily"
    EWMA = "ewma"
    EWMA_VOLATILITY = "ewma_volatility"


@dataclass(frozen=True)
class EligibilityRule:
    """Parameters of one double-conditioning rule.

    Both conditions must hold with strict inequality:
      total_volume_30d: v > frac_primary * V_tot  and  v > frac_max * V_max
      avg_daily:        v > frac_primary * V_avg  and  v > frac_max * V_max
      ewma:             v > frac_primary * EWMA_d and  v > frac_max * V_max
      ewma_volatility:  v > frac_primary * EWMA_d + alpha * sigma_daily
                                                  and  v > frac_max * V_max
    """

    kind: RuleKind
    frac_primary: float
    frac_max: float = 0.60
    d_span: int = 10
    alpha: float = 2.0

    def __post_init__(self):
        if not 0 < self.frac_primary <= 1:
            raise ValueError(f"frac_primary out of range: {self.frac_primary}")
        if not 0 < self.frac_max <= 1:
            raise ValueError(f"frac_max out of range: {self.frac_max}")
        if self.d_span < 1:
            raise ValueError(f"d_span must be >= 1: {self.d_span}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0: {self.alpha}")

    @property
    def uses_ewma(self) -> bool:
        return self.kind in (RuleKind.EWMA, RuleKind.EWMA_VOLATILITY)


def default_rule(kind: RuleKind, d_span: int = 10, alpha: float = 2.0) -> EligibilityRule:
    frac = 0.30 if kind is RuleKind.TOTAL_VOLUME_30D else 0.70
    return EligibilityRule(kind=kind, frac_primary=frac, d_span=d_span, alpha=alpha)


DEFAULT_RULES = tuple(default_rule(kind) for kind in RuleKind)


def is_eligible(v: float, ctx: RollingContext, rule: EligibilityRule) -> bool:
    """Apply one gate to a single candle volume."""
    if rule.uses_ewma and ctx.complete_days < 1:
        raise MissingContext("no complete trailing day for EWMA baseline")
    if rule.kind is RuleKind.TOTAL_VOLUME_30D:
        primary = rule.frac_primary * ctx.v_tot_30d
    elif rule.kind is RuleKind.AVG_DAILY:
        primary = rule.frac_primary * ctx.v_avg_daily
    elif rule.kind is RuleKind.EWMA:
        primary = rule.frac_primary * ctx.ewma_d
    else:
        primary = rule.frac_primary * ctx.ewma_d + rule.alpha * ctx.sigma_daily
    return v > primary and v > rule.frac_max * ctx.v_max_30d


def eligible_mask(volume: np.ndarray, ctx: ContextArrays,
                  rule: EligibilityRule) -> np.ndarray:
    """Vectorized gate over a whole series.

    Candles lacking the context a rule needs (no complete trailing day for
    the EWMA kinds) come out ineligible rather than raising.
    """
    if rule.kind is RuleKind.TOTAL_VOLUME_30D:
        primary = rule.frac_primary * ctx.v_tot_30d
    elif rule.kind is RuleKind.AVG_DAILY:
        primary = rule.frac_primary * ctx.v_avg_daily
    elif rule.kind is RuleKind.EWMA:
        primary = rule.frac_primary * ctx.ewma_d
    else:
        primary = rule.frac_primary * ctx.ewma_d + rule.alpha * ctx.sigma_daily
    ok = (volume > primary) & (volume > rule.frac_max * ctx.v_max_30d)
    if rule.uses_ewma:
        ok &= ctx.complete_days >= 1
    return ok

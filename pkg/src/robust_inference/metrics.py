"""Exact error measures for one case.

Every measure is an expectation under the true joint, computed by summing
over evidential states; nothing is sampled.  Undefined values (RE with no
decisions, d' with zero spread) are reported as NaN.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .model import JointDistribution
from .procedures import RelativeBeliefTable

POOLED = "pooled"
AVERAGE_OF_SDS = "average-of-sds"
POOLINGS = (POOLED, AVERAGE_OF_SDS)

METRICS = ("mse", "min_mse", "re", "pe", "pc", "dprime")


@dataclass(frozen=True)
class DecisionThresholds:
    upper: float = 0.65
    lower: float = 0.35

    def __post_init__(self):
        if not 0.0 < self.lower < self.upper < 1.0:
            raise ValueError(
                f"thresholds need 0 < lower < upper < 1, got lower={self.lower}, upper={self.upper}"
            )


@dataclass(frozen=True)
class MetricRecord:
    mse: float
    min_mse: float
    re: float
    pe: float
    pc: float
    dprime: float

    def as_dict(self) -> dict[str, float | None]:
        return {k: (None if isinstance(v, float) and math.isnan(v) else v)
                for k, v in asdict(self).items()}


def _rb(rb) -> np.ndarray:
    return rb.rb if isinstance(rb, RelativeBeliefTable) else np.asarray(rb, dtype=float)


def _split(truth: JointDistribution, rb: np.ndarray):
    p_true, p_false = truth.split_by_hypothesis()
    if rb.shape != p_true.shape:
        raise ValueError(f"relative belief table has {rb.size} entries, truth has {p_true.size} states")
    return p_true, p_false


def expected_mse(rb, truth: JointDistribution) -> float:
    """Expected Brier score of the relative beliefs under the true joint."""
    r = _rb(rb)
    p_true, p_false = _split(truth, r)
    # dividing by the summed mass removes roundoff in the joint, so a
    # constant 0.5 table scores exactly 0.25
    return float(np.sum(p_true * (1.0 - r) ** 2 + p_false * r ** 2) / np.sum(p_true + p_false))


def min_possible_mse(truth: JointDistribution) -> float:
    """Brier score attained by reporting the true posterior in every state."""
    p_true, p_false = truth.split_by_hypothesis()
    total = p_true + p_false
    ok = total > 0
    return float(np.sum(p_true[ok] * p_false[ok] / total[ok]))


def pe_pc(rb, truth: JointDistribution, th: DecisionThresholds = DecisionThresholds()) -> tuple[float, float]:
    """Probability of a wrong and of a right declaration.

    A state declares H=T when ``rb > upper`` and H=F when ``rb < lower``;
    anything in between declares nothing.  The printed formulas this follows
    read::

        Pe = P(RB(H=T) > U | H=F) P(H=F) + P(RB(H=F) < L | H=T) P(H=T)
        Pc = P(RB(H=F) > U | H=F) P(H=F) + P(RB(H=T) < L | H=T) P(H=T)

    Taken literally the second term of Pc counts an error, so the usual
    signal-detection reading is used instead.
    """
    r = _rb(rb)
    p_true, p_false = _split(truth, r)
    say_true = r > th.upper
    say_false = r < th.lower
    pe = np.sum(p_false[say_true]) + np.sum(p_true[say_false])
    pc = np.sum(p_true[say_true]) + np.sum(p_false[say_false])
    return float(pe), float(pc)


def relative_error(pe: float, pc: float) -> float:
    total = pe + pc
    return pe / total if total > 0 else math.nan


def conditional_moments(rb, truth: JointDistribution):
    """Mean and variance of RB given H=T and given H=F."""
    r = _rb(rb)
    p_true, p_false = _split(truth, r)
    out = []
    for w in (p_true, p_false):
        w = w / w.sum()
        mu = float(np.sum(w * r))
        out.append((mu, float(np.sum(w * (r - mu) ** 2))))
    return out


def dprime(rb, truth: JointDistribution, pooling: str = POOLED) -> float:
    """Separation of the RB distributions under H=T and H=F.

    ``(mu_T - mu_F) / s`` with ``s = sqrt((var_T + var_F) / 2)`` for
    ``pooling="pooled"`` or the mean of the two standard deviations for
    ``"average-of-sds"``.  NaN when ``s == 0``.
    """
    (mu_t, var_t), (mu_f, var_f) = conditional_moments(rb, truth)
    if pooling == POOLED:
        s = math.sqrt((var_t + var_f) / 2.0)
    elif pooling == AVERAGE_OF_SDS:
        s = (math.sqrt(var_t) + math.sqrt(var_f)) / 2.0
    else:
        raise ValueError(f"unknown pooling {pooling!r}")
    # rounding leaves ~1e-17 spread on constant tables
    if s <= 1e-12:
        return math.nan
    return (mu_t - mu_f) / s


def dprime_from_rates(pe: float, pc: float) -> float:
    """Sensitivity from decision rates, ``z(1 - Pe) + z(Pc)``.

    For symmetric thresholds this approximates the separation of the two
    RB distributions.  Infinite when a rate is 0 or 1.
    """
    return float(norm.ppf(1.0 - pe) + norm.ppf(pc))


def evaluate(rb, truth: JointDistribution, th: DecisionThresholds = DecisionThresholds(),
             *, pooling: str = POOLED, min_mse: float | None = None) -> MetricRecord:
    pe, pc = pe_pc(rb, truth, th)
    return MetricRecord(
        mse=expected_mse(rb, truth),
        min_mse=min_possible_mse(truth) if min_mse is None else min_mse,
        re=relative_error(pe, pc),
        pe=pe,
        pc=pc,
        dprime=dprime(rb, truth, pooling),
    )

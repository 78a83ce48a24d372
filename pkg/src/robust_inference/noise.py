"""Calibration-error regimes that turn a true model into belief values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    P_MAX,
    P_MIN,
    PROTOTYPICAL,
    ChainParameters,
    Topology,
    to_joint,
)

MARGINALIZED = "marginalized"
DIRECT = "direct"
FREQUENCY = "frequency"
REGIMES = (MARGINALIZED, DIRECT, FREQUENCY)


def error_window(p, error_range: float):
    """Clipped uniform window ``[lo, hi]`` around ``p``.

    Both ends are clipped to the clamp bounds, which for ``p`` inside the
    bounds is the same as ``lo = max(P_MIN, p - r/2)``,
    ``hi = min(P_MAX, p + r/2)``.
    """
    half = error_range / 2.0
    return (np.clip(np.subtract(p, half), P_MIN, P_MAX),
            np.clip(np.add(p, half), P_MIN, P_MAX))


def perturb_value(p, error_range: float, rng: np.random.Generator):
    """Draw a belief uniformly from the clipped window around ``p``.

    Works elementwise on arrays; one uniform is consumed per element.
    """
    if error_range < 0:
        raise ValueError(f"error range must be nonnegative, got {error_range}")
    lo, hi = error_window(p, error_range)
    u = rng.random(np.shape(p))
    out = lo + (hi - lo) * u
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class DirectInputs:
    """Independently assessed inputs for the prior/likelihood procedures.

    ``likelihoods[j] = (B(x_j=T | H=T), B(x_j=T | H=F))`` for the j-th
    evidence variable of the topology.
    """

    prior: float
    likelihoods: np.ndarray


@dataclass(frozen=True, eq=False)
class BeliefModel:
    regime: str
    chain: ChainParameters
    direct: DirectInputs | None = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if (self.regime == DIRECT) != (self.direct is not None):
            raise ValueError("direct inputs are required for, and only for, the direct regime")


def true_inputs(truth: ChainParameters, topology: Topology = PROTOTYPICAL):
    """Exact prior and per-evidence likelihood pairs of a chain model."""
    joint = to_joint(truth, topology)
    prior = joint.marginal({0: True})
    lik = np.array([
        (joint.marginal({v: True}, {0: True}), joint.marginal({v: True}, {0: False}))
        for v in topology.evidence
    ])
    return prior, lik


def perturb_marginalized(truth: ChainParameters, error_range: float,
                         rng: np.random.Generator) -> BeliefModel:
    chain = ChainParameters(perturb_value(truth.values, error_range, rng), truth.n_vars)
    return BeliefModel(MARGINALIZED, chain)


def perturb_direct(truth: ChainParameters, error_range: float, rng: np.random.Generator,
                   topology: Topology = PROTOTYPICAL) -> BeliefModel:
    """Perturb the chain for Proper Bayes, then assess prior and likelihoods directly.

    The chain draws come first so that, on a shared stream, Proper Bayes sees
    exactly the same beliefs as under the marginalized regime.
    """
    chain = ChainParameters(perturb_value(truth.values, error_range, rng), truth.n_vars)
    prior, lik = true_inputs(truth, topology)
    direct = DirectInputs(
        prior=perturb_value(prior, error_range, rng),
        likelihoods=perturb_value(lik, error_range, rng),
    )
    return BeliefModel(DIRECT, chain, direct)


def perturb_frequency(belief_chain: ChainParameters, error_range: float,
                      rng: np.random.Generator) -> tuple[BeliefModel, ChainParameters]:
    """Beliefs are primary; the effective truth is drawn around each belief.

    Returns the belief model and the effective-truth chain that metrics use.
    """
    truth = ChainParameters(perturb_value(belief_chain.values, error_range, rng),
                            belief_chain.n_vars)
    return BeliefModel(FREQUENCY, belief_chain), truth

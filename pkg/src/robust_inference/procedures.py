"""The five point-valued inference procedures.

Each procedure maps a belief model to a relative belief ``RB(H=T | e)`` for
every evidential state ``e`` of the topology.  The four simplified procedures
all read the same inputs, a prior ``B(H=T)`` and per-evidence likelihoods
``B(x=T | H=T)``, ``B(x=T | H=F)``.  For an observed value ``x=F`` the factor
is the complement, so the likelihood ratio tracks the evidential state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PROTOTYPICAL, Topology, to_joint
from .noise import BeliefModel

PROPER_BAYES = "proper_bayes"
NAIVE_BAYES = "naive_bayes"
STRONG_NAIVE_BAYES = "strong_naive_bayes"
SIMPLE_LINEAR = "simple_linear"
STRONG_LINEAR = "strong_linear"

# table column order
PROCEDURES = (SIMPLE_LINEAR, STRONG_LINEAR, NAIVE_BAYES, STRONG_NAIVE_BAYES, PROPER_BAYES)

DISPLAY_NAMES = {
    SIMPLE_LINEAR: "Simple Linear",
    STRONG_LINEAR: "Strong Linear",
    NAIVE_BAYES: "Naive Bayes",
    STRONG_NAIVE_BAYES: "Strong Bayes",
    PROPER_BAYES: "Proper Bayes",
}

# likelihood-ratio deadband shared by strong naive Bayes and strong linear
LR_LOW = 2.0 / 3.0
LR_HIGH = 3.0 / 2.0

PER_OBSERVED_VALUE = "per-observed-value"
PER_ITEM = "per-item"
DROP_MODES = (PER_OBSERVED_VALUE, PER_ITEM)


@dataclass(frozen=True, eq=False)
class RelativeBeliefTable:
    procedure: str
    rb: np.ndarray
    topology: Topology = PROTOTYPICAL

    def __post_init__(self):
        rb = np.array(self.rb, dtype=float)
        if rb.shape != (self.topology.n_evidential_states,):
            raise ValueError(f"expected {self.topology.n_evidential_states} entries, got {rb.shape}")
        rb.setflags(write=False)
        object.__setattr__(self, "rb", rb)

    def as_dict(self) -> dict[tuple[bool, ...], float]:
        """Map each evidential state (tuple of truth values) to its RB."""
        states = self.topology.evidential_states()
        return {tuple(s.values()): float(v) for s, v in zip(states, self.rb)}


def procedure_inputs(model: BeliefModel, topology: Topology = PROTOTYPICAL):
    """Prior and likelihood pairs consumed by the simplified procedures.

    Directly assessed values are used when present; otherwise they are
    marginals of the belief joint.
    """
    if model.direct is not None:
        return model.direct.prior, np.asarray(model.direct.likelihoods, dtype=float)
    joint = to_joint(model.chain, topology)
    bits = topology.state_bits
    h = bits[:, 0] == 1
    m = joint.mass
    prior = m[h].sum()
    lik = np.empty((len(topology.evidence), 2))
    for j, v in enumerate(topology.evidence):
        x = bits[:, v] == 1
        lik[j, 0] = m[h & x].sum() / prior
        lik[j, 1] = m[~h & x].sum() / (1.0 - prior)
    return float(prior), lik


def _observed(topology: Topology) -> np.ndarray:
    """``(n_evidential_states, n_evidence)`` 0/1 matrix of observed values."""
    n = len(topology.evidence)
    e = np.arange(topology.n_evidential_states)
    return (e[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1


def _observed_factors(lik: np.ndarray, topology: Topology):
    obs = _observed(topology).astype(bool)
    f_true = np.where(obs, lik[:, 0], 1.0 - lik[:, 0])
    f_false = np.where(obs, lik[:, 1], 1.0 - lik[:, 1])
    return f_true, f_false


def _naive(prior: float, f_true: np.ndarray, f_false: np.ndarray) -> np.ndarray:
    num = prior * np.prod(f_true, axis=1)
    return num / (num + (1.0 - prior) * np.prod(f_false, axis=1))


def proper_bayes(model: BeliefModel, topology: Topology = PROTOTYPICAL) -> RelativeBeliefTable:
    # latent variables are summed out of both the H=T and H=F masses
    b_true, b_false = to_joint(model.chain, topology).split_by_hypothesis()
    return RelativeBeliefTable(PROPER_BAYES, b_true / (b_true + b_false), topology)


def naive_bayes(model: BeliefModel, topology: Topology = PROTOTYPICAL, *, inputs=None) -> RelativeBeliefTable:
    prior, lik = inputs if inputs is not None else procedure_inputs(model, topology)
    f_true, f_false = _observed_factors(lik, topology)
    return RelativeBeliefTable(NAIVE_BAYES, _naive(prior, f_true, f_false), topology)


def strong_naive_bayes(model: BeliefModel, topology: Topology = PROTOTYPICAL, *,
                       drop: str = PER_OBSERVED_VALUE, inputs=None) -> RelativeBeliefTable:
    """Naive Bayes without the items whose likelihood ratio is weak.

    An item is dropped when its ratio lies strictly inside ``(2/3, 3/2)``.
    With ``drop="per-observed-value"`` the ratio of the observed value is
    tested per state; ``"per-item"`` tests the ``x=T`` ratio once per item.
    With every item dropped the result is the prior.
    """
    if drop not in DROP_MODES:
        raise ValueError(f"unknown drop mode {drop!r}")
    prior, lik = inputs if inputs is not None else procedure_inputs(model, topology)
    f_true, f_false = _observed_factors(lik, topology)
    if drop == PER_OBSERVED_VALUE:
        lr = f_true / f_false
    else:
        lr = np.broadcast_to(lik[:, 0] / lik[:, 1], f_true.shape)
    weak = (lr > LR_LOW) & (lr < LR_HIGH)
    rb = _naive(prior, np.where(weak, 1.0, f_true), np.where(weak, 1.0, f_false))
    return RelativeBeliefTable(STRONG_NAIVE_BAYES, rb, topology)


def _vote(x, up, down):
    return (np.asarray(x) > up).astype(int) - (np.asarray(x) < down).astype(int)


def _linear(name, prior, lik, topology, prior_band, lr_band) -> RelativeBeliefTable:
    f_true, f_false = _observed_factors(lik, topology)
    lr = f_true / f_false
    score = _vote(prior, prior_band[1], prior_band[0]) + _vote(lr, lr_band[1], lr_band[0]).sum(axis=1)
    # normalization is fixed at (SL+5)/10 whatever the number of evidence items
    return RelativeBeliefTable(name, (score + 5) / 10.0, topology)


def simple_linear(model: BeliefModel, topology: Topology = PROTOTYPICAL, *, inputs=None) -> RelativeBeliefTable:
    """Count pros and cons: one vote from the prior, one per evidence item."""
    prior, lik = inputs if inputs is not None else procedure_inputs(model, topology)
    return _linear(SIMPLE_LINEAR, prior, lik, topology, (0.5, 0.5), (1.0, 1.0))


def strong_linear(model: BeliefModel, topology: Topology = PROTOTYPICAL, *, inputs=None) -> RelativeBeliefTable:
    prior, lik = inputs if inputs is not None else procedure_inputs(model, topology)
    return _linear(STRONG_LINEAR, prior, lik, topology, (0.3, 0.7), (LR_LOW, LR_HIGH))


def run_procedures(model: BeliefModel, topology: Topology = PROTOTYPICAL,
                   procedures=PROCEDURES, *, drop: str = PER_OBSERVED_VALUE) -> dict[str, RelativeBeliefTable]:
    """Evaluate the selected procedures, sharing the prior/likelihood inputs."""
    inputs = None
    out = {}
    for name in procedures:
        if name == PROPER_BAYES:
            out[name] = proper_bayes(model, topology)
            continue
        if inputs is None:
            inputs = procedure_inputs(model, topology)
        if name == NAIVE_BAYES:
            out[name] = naive_bayes(model, topology, inputs=inputs)
        elif name == STRONG_NAIVE_BAYES:
            out[name] = strong_naive_bayes(model, topology, drop=drop, inputs=inputs)
        elif name == SIMPLE_LINEAR:
            out[name] = simple_linear(model, topology, inputs=inputs)
        elif name == STRONG_LINEAR:
            out[name] = strong_linear(model, topology, inputs=inputs)
        else:
            raise ValueError(f"unknown procedure {name!r}")
    return out

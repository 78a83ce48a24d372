"""Discrete probability models over one hypothesis and a chain of binary nodes.

Variables are numbered ``0..n-1`` with the hypothesis at index 0.  A world
state is packed into an integer with variable 0 as the most significant bit,
so ``mass[i]`` of a 5-variable joint belongs to the assignment
``H, A, B, C, D = bits(i)``.

A chain model stores ``P(X_k = T | X_0 .. X_{k-1})`` for every context, laid
out flat: ``1 + 2 + 4 + ... + 2**(n-1)`` entries, contexts within a block are
packed the same way as world states (X_0 most significant).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

# clamp bounds for every assessed (and every sampled true) probability
P_MIN = 0.00001
P_MAX = 0.99999

HYPOTHESIS = "hypothesis"
EVIDENCE = "evidence"
LATENT = "latent"

VARIABLE_NAMES = ("H", "A", "B", "C", "D")


class ZeroConditioningMass(ValueError):
    """Conditioning event has no probability mass."""


@dataclass(frozen=True)
class Topology:
    """Roles of the chain variables.

    The hierarchical network keeps the full 5-node chain but hides ``A``.
    """

    name: str
    roles: tuple[str, ...]
    names: tuple[str, ...] = VARIABLE_NAMES

    def __post_init__(self):
        if self.roles.count(HYPOTHESIS) != 1 or self.roles[0] != HYPOTHESIS:
            raise ValueError("variable 0 must be the only hypothesis variable")
        bad = set(self.roles) - {HYPOTHESIS, EVIDENCE, LATENT}
        if bad:
            raise ValueError(f"unknown variable roles: {sorted(bad)}")
        if len(self.names) < len(self.roles):
            raise ValueError("not enough variable names for topology")

    @property
    def n_vars(self) -> int:
        return len(self.roles)

    @property
    def n_states(self) -> int:
        return 1 << self.n_vars

    @property
    def n_params(self) -> int:
        return (1 << self.n_vars) - 1

    @cached_property
    def evidence(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r == EVIDENCE)

    @property
    def n_evidential_states(self) -> int:
        return 1 << len(self.evidence)

    @cached_property
    def state_bits(self) -> np.ndarray:
        """``(n_states, n_vars)`` 0/1 matrix, row ``i`` unpacks world state ``i``."""
        idx = np.arange(self.n_states)
        shifts = np.arange(self.n_vars - 1, -1, -1)
        bits = (idx[:, None] >> shifts[None, :]) & 1
        bits.setflags(write=False)
        return bits

    @cached_property
    def evidence_index(self) -> np.ndarray:
        """Evidential-state index of every world state."""
        idx = np.zeros(self.n_states, dtype=np.intp)
        for v in self.evidence:
            idx = idx * 2 + self.state_bits[:, v]
        idx.setflags(write=False)
        return idx

    def evidential_states(self) -> list[dict[str, bool]]:
        """Readable assignments for evidential states, in index order."""
        out = []
        n = len(self.evidence)
        for e in range(self.n_evidential_states):
            out.append({
                self.names[v]: bool((e >> (n - 1 - j)) & 1)
                for j, v in enumerate(self.evidence)
            })
        return out

    def variable(self, name: str) -> int:
        return self.names.index(name)


PROTOTYPICAL = Topology("prototypical", (HYPOTHESIS, EVIDENCE, EVIDENCE, EVIDENCE, EVIDENCE))
HIERARCHICAL = Topology("hierarchical", (HYPOTHESIS, LATENT, EVIDENCE, EVIDENCE, EVIDENCE))


def _block_offsets(n_vars: int) -> list[int]:
    return [(1 << k) - 1 for k in range(n_vars + 1)]


@dataclass(frozen=True, eq=False)
class ChainParameters:
    """Flat vector of chain conditionals ``P(X_k=T | context)``."""

    values: np.ndarray
    n_vars: int = 5

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != ((1 << self.n_vars) - 1,):
            raise ValueError(
                f"expected {(1 << self.n_vars) - 1} chain entries, got shape {v.shape}"
            )
        if np.any((v < 0) | (v > 1)) or not np.all(np.isfinite(v)):
            raise ValueError("chain entries must be probabilities")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def table(self, k: int) -> np.ndarray:
        """Conditionals of variable ``k``, one per packed context of ``X_0..X_{k-1}``."""
        off = _block_offsets(self.n_vars)
        return self.values[off[k]:off[k + 1]]

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, ChainParameters):
            return NotImplemented
        return self.n_vars == other.n_vars and np.array_equal(self.values, other.values)

    __hash__ = None


def sample_true_model(rng: np.random.Generator, topology: Topology = PROTOTYPICAL) -> ChainParameters:
    """Draw every chain entry independently and uniformly.

    Draws land in ``[P_MIN, P_MAX]`` so that a zero-width perturbation window
    returns the true value unchanged.
    """
    u = rng.random(topology.n_params)
    return ChainParameters(P_MIN + (P_MAX - P_MIN) * u, topology.n_vars)


def _chain_mass(values: np.ndarray, n_vars: int) -> np.ndarray:
    mass = np.ones(1)
    off = _block_offsets(n_vars)
    for k in range(n_vars):
        p = values[off[k]:off[k + 1]]
        nxt = np.empty(2 * mass.size)
        nxt[0::2] = mass * (1.0 - p)
        nxt[1::2] = mass * p
        mass = nxt
    return mass


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Dense table of world-state masses for one topology."""

    mass: np.ndarray
    topology: Topology = PROTOTYPICAL

    def __post_init__(self):
        m = np.array(self.mass, dtype=float)
        if m.shape != (self.topology.n_states,):
            raise ValueError(f"expected {self.topology.n_states} masses, got {m.shape}")
        if np.any(m < 0):
            raise ValueError("negative mass")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    def _mask(self, event: Mapping[int | str, bool] | None) -> np.ndarray:
        bits = self.topology.state_bits
        mask = np.ones(self.topology.n_states, dtype=bool)
        for var, val in (event or {}).items():
            v = self.topology.variable(var) if isinstance(var, str) else var
            mask &= bits[:, v] == int(bool(val))
        return mask

    def probability(self, event: Mapping[int | str, bool] | None = None) -> float:
        return float(self.mass[self._mask(event)].sum())

    def marginal(self, target: Mapping[int | str, bool],
                 given: Mapping[int | str, bool] | None = None) -> float:
        """``P(target | given)`` by summing masses.

        Variables may be given by index or by name (``"H"``, ``"A"``, ...).
        Raises :class:`ZeroConditioningMass` if ``given`` has no mass.
        """
        g = self._mask(given)
        denom = self.mass[g].sum()
        if denom <= 0:
            raise ZeroConditioningMass(f"P({dict(given or {})}) = 0")
        return float(self.mass[g & self._mask(target)].sum() / denom)

    def split_by_hypothesis(self, topology: Topology | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Masses ``P(e, H=T)`` and ``P(e, H=F)`` per evidential state ``e``.

        Latent variables are summed out.  ``topology`` overrides which
        variables count as evidence (same variable count required).
        """
        topo = topology or self.topology
        h = topo.state_bits[:, 0].astype(float)
        n = topo.n_evidential_states
        idx = topo.evidence_index
        p_true = np.bincount(idx, weights=self.mass * h, minlength=n)
        p_false = np.bincount(idx, weights=self.mass * (1.0 - h), minlength=n)
        return p_true, p_false

    def posterior_table(self, topology: Topology | None = None) -> np.ndarray:
        """``P(H=T | e)`` for every evidential state; NaN where ``P(e) = 0``."""
        p_true, p_false = self.split_by_hypothesis(topology)
        total = p_true + p_false
        out = np.full(total.shape, np.nan)
        ok = total > 0
        out[ok] = p_true[ok] / total[ok]
        return out

    def to_chain(self) -> ChainParameters:
        """Recover chain conditionals; contexts with zero mass get 0.5."""
        n = self.topology.n_vars
        vals = []
        for k in range(n):
            # marginal over X_0..X_k, packed
            m = self.mass.reshape((1 << (k + 1), -1)).sum(axis=1)
            ctx = m[0::2] + m[1::2]
            with np.errstate(invalid="ignore", divide="ignore"):
                p = np.where(ctx > 0, m[1::2] / np.where(ctx > 0, ctx, 1.0), 0.5)
            vals.append(p)
        return ChainParameters(np.concatenate(vals), n)

    def to_csv(self) -> str:
        """Debug dump: one row per world state with its bits and mass."""
        buf = io.StringIO()
        names = self.topology.names[:self.topology.n_vars]
        buf.write(",".join(names) + ",mass\n")
        for bits, m in zip(self.topology.state_bits, self.mass):
            buf.write(",".join("T" if b else "F" for b in bits) + f",{m!r}\n")
        return buf.getvalue()


def to_joint(params: ChainParameters, topology: Topology = PROTOTYPICAL) -> JointDistribution:
    """Chain-rule expansion of ``params`` into a dense joint."""
    if params.n_vars != topology.n_vars:
        raise ValueError("chain and topology disagree on variable count")
    return JointDistribution(_chain_mass(params.values, params.n_vars), topology)


def marginal(joint: JointDistribution, target, given=None) -> float:
    return joint.marginal(target, given)


def posterior_table(joint: JointDistribution, topology: Topology | None = None) -> np.ndarray:
    return joint.posterior_table(topology)

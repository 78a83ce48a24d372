"""Monte Carlo sweeps over error ranges.

Every case draws from its own Philox stream.  The key is the master seed and
the counter block is addressed by ``(case index, error range)``, so a case's
numbers never depend on which other cases ran, in what order, or in which
process.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from . import metrics as M
from .model import (
    HIERARCHICAL,
    PROTOTYPICAL,
    ChainParameters,
    JointDistribution,
    Topology,
    sample_true_model,
    to_joint,
)
from .noise import (
    BeliefModel,
    perturb_direct,
    perturb_frequency,
    perturb_marginalized,
)
from .procedures import (
    DROP_MODES,
    PER_OBSERVED_VALUE,
    PROCEDURES,
    RelativeBeliefTable,
    run_procedures,
)

PROTOTYPICAL_SCENARIO = "prototypical"
DIRECT_SCENARIO = "direct"
FREQUENCY_SCENARIO = "frequency"
HIERARCHICAL_SCENARIO = "hierarchical"
SCENARIOS = (PROTOTYPICAL_SCENARIO, DIRECT_SCENARIO, FREQUENCY_SCENARIO, HIERARCHICAL_SCENARIO)

RATES = "rates"
CASES = "cases"
AGGREGATES = (RATES, CASES)

# column order of the per-case record arrays
FIELDS = ("mse", "min_mse", "re", "pe", "pc", "dprime")
_COL = {f: i for i, f in enumerate(FIELDS)}

HIST_BIN_WIDTH = 0.05

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid sweep settings; ``field`` names the offending config field."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


def scenario_topology(scenario: str) -> Topology:
    return HIERARCHICAL if scenario == HIERARCHICAL_SCENARIO else PROTOTYPICAL


def default_ranges(scenario: str) -> tuple[float, ...]:
    step = 0.5 if scenario in (FREQUENCY_SCENARIO, HIERARCHICAL_SCENARIO) else 0.2
    n = int(round(2.0 / step))
    return tuple(round(i * step, 10) for i in range(n + 1))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = PROTOTYPICAL_SCENARIO
    cases: int = 1000
    ranges: tuple[float, ...] | None = None
    thresholds: M.DecisionThresholds = field(default_factory=M.DecisionThresholds)
    master_seed: int = 0
    procedures: tuple[str, ...] = PROCEDURES
    dprime_pooling: str = M.POOLED
    strong_naive_drop: str = PER_OBSERVED_VALUE
    paired_cases: bool = False
    aggregate: str = RATES
    first_case: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}", "scenario")
        if self.ranges is None:
            object.__setattr__(self, "ranges", default_ranges(self.scenario))
        else:
            object.__setattr__(self, "ranges", tuple(float(r) for r in self.ranges))
        if isinstance(self.cases, bool) or not isinstance(self.cases, (int, np.integer)) or self.cases < 1:
            raise ConfigError(f"cases must be a positive integer, got {self.cases!r}", "cases")
        if self.first_case < 0:
            raise ConfigError("first_case must be nonnegative", "first_case")
        r = self.ranges
        if not r:
            raise ConfigError("ranges must be nonempty", "ranges")
        if any(not math.isfinite(x) or x < 0 for x in r):
            raise ConfigError(f"ranges must be finite and nonnegative, got {r}", "ranges")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ConfigError(f"ranges must be strictly increasing, got {r}", "ranges")
        if not 0 <= self.master_seed <= _MASK64:
            raise ConfigError("master seed must fit in 64 unsigned bits", "master_seed")
        unknown = set(self.procedures) - set(PROCEDURES)
        if unknown or not self.procedures:
            raise ConfigError(f"unknown procedures: {sorted(unknown)}" if unknown else "no procedures selected",
                              "procedures")
        # keep the canonical column order whatever order was requested
        object.__setattr__(self, "procedures", tuple(p for p in PROCEDURES if p in self.procedures))
        if self.dprime_pooling not in M.POOLINGS:
            raise ConfigError(f"unknown d' pooling {self.dprime_pooling!r}", "dprime_pooling")
        if self.strong_naive_drop not in DROP_MODES:
            raise ConfigError(f"unknown strong naive drop mode {self.strong_naive_drop!r}", "strong_naive_drop")
        if self.aggregate not in AGGREGATES:
            raise ConfigError(f"unknown aggregate {self.aggregate!r}", "aggregate")

    @property
    def topology(self) -> Topology:
        return scenario_topology(self.scenario)

    def echo(self) -> dict:
        return {
            "scenario": self.scenario,
            "cases": int(self.cases),
            "ranges": list(self.ranges),
            "upper": self.thresholds.upper,
            "lower": self.thresholds.lower,
            "master_seed": int(self.master_seed),
            "procedures": list(self.procedures),
            "dprime_pooling": self.dprime_pooling,
            "strong_naive_drop": self.strong_naive_drop,
            "paired_cases": self.paired_cases,
            "aggregate": self.aggregate,
            "first_case": int(self.first_case),
        }


def _range_word(error_range: float) -> int:
    return int(round(error_range * 1_000_000))


def case_rng(master_seed: int, case_index: int, error_range: float, paired: bool = False) -> np.random.Generator:
    """Counter-based stream for one case.

    Scenarios deliberately share streams, so at the same seed every scenario
    starts from the same true (or, for the frequency regime, belief) model.
    """
    word = 0 if paired else _range_word(error_range)
    bitgen = np.random.Philox(key=[master_seed & _MASK64, 0], counter=[0, case_index, word, 0])
    return np.random.Generator(bitgen)


@dataclass(frozen=True, eq=False)
class CaseOutcome:
    truth: ChainParameters
    truth_joint: JointDistribution
    belief: BeliefModel
    tables: dict[str, RelativeBeliefTable]
    records: dict[str, M.MetricRecord]


def evaluate_case(config: ScenarioConfig, error_range: float, case_index: int) -> CaseOutcome:
    rng = case_rng(config.master_seed, case_index, error_range, config.paired_cases)
    topo = config.topology
    drawn = sample_true_model(rng, topo)
    if config.scenario == FREQUENCY_SCENARIO:
        belief, truth = perturb_frequency(drawn, error_range, rng)
    elif config.scenario == DIRECT_SCENARIO:
        truth = drawn
        belief = perturb_direct(truth, error_range, rng, topo)
    else:
        truth = drawn
        belief = perturb_marginalized(truth, error_range, rng)
    joint = to_joint(truth, topo)
    tables = run_procedures(belief, topo, config.procedures, drop=config.strong_naive_drop)
    floor = M.min_possible_mse(joint)
    records = {
        name: M.evaluate(t, joint, config.thresholds, pooling=config.dprime_pooling, min_mse=floor)
        for name, t in tables.items()
    }
    return CaseOutcome(truth, joint, belief, tables, records)


def run_case(scenario: str, error_range: float, case_index: int, master_seed: int,
             **options) -> dict[str, M.MetricRecord]:
    """Metrics of every selected procedure for one case.

    ``options`` are any other :class:`ScenarioConfig` fields.
    """
    config = ScenarioConfig(scenario=scenario, cases=1, master_seed=master_seed,
                            ranges=(error_range,), **options)
    return evaluate_case(config, error_range, case_index).records


def _run_block(args):
    config, error_range, case_indices = args
    n_proc = len(config.procedures)
    out = np.empty((n_proc, len(case_indices), len(FIELDS)))
    for j, c in enumerate(case_indices):
        recs = evaluate_case(config, error_range, c).records
        for i, name in enumerate(config.procedures):
            r = recs[name]
            out[i, j] = (r.mse, r.min_mse, r.re, r.pe, r.pc, r.dprime)
    return out


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    n: int
    excluded: int = 0


def _mean_influence(x: np.ndarray):
    ok = ~np.isnan(x)
    if not ok.any():
        return math.nan, np.full(x.shape, np.nan)
    m = float(np.mean(x[ok]))
    psi = np.where(ok, x - m, np.nan)
    return m, psi


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Per-case metric arrays plus aggregation.

    ``data[p]`` has shape ``(n_ranges, cases, len(FIELDS))`` for procedure
    ``p``; rows follow case index, so reductions are order-stable.
    """

    config: ScenarioConfig
    data: dict[str, np.ndarray]

    @property
    def ranges(self) -> tuple[float, ...]:
        return self.config.ranges

    @property
    def procedures(self) -> tuple[str, ...]:
        return self.config.procedures

    def values(self, metric: str, range_index: int, procedure: str) -> np.ndarray:
        return self.data[procedure][range_index, :, _COL[metric]]

    def influence(self, metric: str, range_index: int, procedure: str, aggregate: str | None = None):
        """Aggregate value and per-case influence terms.

        The standard error is ``std(psi) / sqrt(n)``; for a paired comparison
        of two cells use the difference of their influence arrays.
        ``re`` and ``dprime`` under the ``rates`` aggregate are functions of
        the mean Pe and Pc and are linearized around them.
        """
        agg = aggregate or self.config.aggregate
        if metric in ("re", "dprime") and agg == RATES:
            pe = self.values("pe", range_index, procedure)
            pc = self.values("pc", range_index, procedure)
            a, b = float(np.mean(pe)), float(np.mean(pc))
            if metric == "re":
                s = a + b
                if s <= 0:
                    return math.nan, np.full(pe.shape, np.nan)
                value = a / s
                da, db = b / s ** 2, -a / s ** 2
            else:
                za, zb = norm.ppf(1.0 - a), norm.ppf(b)
                value = float(za + zb)
                if not math.isfinite(value):
                    return value, np.full(pe.shape, np.nan)
                da, db = -1.0 / norm.pdf(za), 1.0 / norm.pdf(zb)
            return value, da * (pe - a) + db * (pc - b)
        return _mean_influence(self.values(metric, range_index, procedure))

    def estimate(self, metric: str, range_index: int, procedure: str, aggregate: str | None = None) -> Estimate:
        value, psi = self.influence(metric, range_index, procedure, aggregate)
        ok = ~np.isnan(psi)
        n = int(ok.sum())
        se = float(np.std(psi[ok], ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        raw = self.values(metric, range_index, procedure)
        return Estimate(value, se, n, int(np.isnan(raw).sum()))

    def mean(self, metric: str, range_index: int, procedure: str, aggregate: str | None = None) -> float:
        return self.influence(metric, range_index, procedure, aggregate)[0]

    def diff(self, metric: str, range_index: int, a: str, b: str, aggregate: str | None = None) -> Estimate:
        """Paired difference ``a - b`` over the same cases."""
        va, pa = self.influence(metric, range_index, a, aggregate)
        vb, pb = self.influence(metric, range_index, b, aggregate)
        d = pa - pb
        ok = ~np.isnan(d)
        n = int(ok.sum())
        se = float(np.std(d[ok], ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        return Estimate(va - vb, se, n)

    def min_mse(self, range_index: int) -> Estimate:
        return self.estimate("min_mse", range_index, self.procedures[0])

    def table(self, metric: str, aggregate: str | None = None) -> np.ndarray:
        """``(n_ranges, n_procedures)`` matrix of aggregate values."""
        return np.array([[self.mean(metric, i, p, aggregate) for p in self.procedures]
                         for i in range(len(self.ranges))])


def _blocks(config: ScenarioConfig, chunk: int):
    idx = list(range(config.first_case, config.first_case + config.cases))
    for r in config.ranges:
        for s in range(0, len(idx), chunk):
            yield config, r, idx[s:s + chunk]


def run_sweep(config: ScenarioConfig, workers: int = 1, chunk: int = 250) -> SweepResult:
    """Evaluate ``config.cases`` cases at every error range.

    ``workers > 1`` spreads blocks of cases over processes; the result is
    bit-identical to a serial run.
    """
    if workers < 1:
        raise ConfigError("workers must be at least 1")
    blocks = list(_blocks(config, chunk))
    if workers == 1:
        parts = [_run_block(b) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, blocks))
    per_range = math.ceil(config.cases / chunk)
    data = {}
    for i, name in enumerate(config.procedures):
        rows = []
        for k in range(len(config.ranges)):
            rows.append(np.concatenate([p[i] for p in parts[k * per_range:(k + 1) * per_range]]))
        data[name] = np.stack(rows)
    return SweepResult(config, data)


@dataclass(frozen=True, eq=False)
class HistogramData:
    """RB distribution under H=T and H=F, pooled over cases."""

    scenario: str
    error_range: float
    procedure: str
    edges: np.ndarray
    mass_true: np.ndarray
    mass_false: np.ndarray
    moments: tuple[tuple[float, float], tuple[float, float]]

    def dprime(self) -> float:
        """Pooled-sd separation computed from the bin centres."""
        c = (self.edges[:-1] + self.edges[1:]) / 2
        out = []
        for w in (self.mass_true, self.mass_false):
            mu = float(np.sum(w * c))
            out.append((mu, float(np.sum(w * (c - mu) ** 2))))
        (mt, vt), (mf, vf) = out
        return (mt - mf) / math.sqrt((vt + vf) / 2)


def bin_index(rb: np.ndarray, width: float = HIST_BIN_WIDTH) -> np.ndarray:
    n = int(round(1.0 / width))
    # rounding first so grid values such as 0.6 land in their own bin
    idx = np.floor(np.round(np.asarray(rb) / width, 9)).astype(int)
    return np.clip(idx, 0, n - 1)


def emit_histogram_data(config: ScenarioConfig, error_range: float, procedure: str,
                        width: float = HIST_BIN_WIDTH) -> HistogramData:
    """Probability-weighted histogram of RB values pooled over all cases.

    ``moments`` holds the exact (unbinned) pooled mean and variance under
    H=T and H=F.
    """
    if procedure not in PROCEDURES:
        raise ConfigError(f"unknown procedure {procedure!r}")
    cfg = replace(config, procedures=(procedure,))
    n_bins = int(round(1.0 / width))
    acc_t = np.zeros(n_bins)
    acc_f = np.zeros(n_bins)
    raw = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]  # weight, sum, sum of squares
    for c in range(cfg.first_case, cfg.first_case + cfg.cases):
        out = evaluate_case(cfg, error_range, c)
        rb = out.tables[procedure].rb
        p_true, p_false = out.truth_joint.split_by_hypothesis()
        b = bin_index(rb, width)
        acc_t += np.bincount(b, weights=p_true, minlength=n_bins)
        acc_f += np.bincount(b, weights=p_false, minlength=n_bins)
        for k, w in enumerate((p_true, p_false)):
            raw[k][0] += w.sum()
            raw[k][1] += np.sum(w * rb)
            raw[k][2] += np.sum(w * rb * rb)
    moments = []
    for w, s, s2 in raw:
        mu = s / w
        moments.append((mu, s2 / w - mu * mu))
    edges = np.round(np.arange(n_bins + 1) * width, 10)
    return HistogramData(config.scenario, error_range, procedure, edges,
                         acc_t / acc_t.sum(), acc_f / acc_f.sum(), tuple(moments))

import numpy as np
import pytest

from robust_inference.model import EVIDENCE, HYPOTHESIS, ChainParameters, Topology

# two-variable network used by hand-arithmetic fixtures
PAIR = Topology("pair", (HYPOTHESIS, EVIDENCE), names=("H", "A"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def conditionally_independent_chain(rng, n_vars=5):
    """Chain whose evidence conditionals depend on H only."""
    vals = [np.array([rng.uniform(0.05, 0.95)])]
    for k in range(1, n_vars):
        ctx = np.arange(1 << k)
        h_bit = (ctx >> (k - 1)) & 1
        p_true, p_false = rng.uniform(0.05, 0.95, size=2)
        vals.append(np.where(h_bit == 1, p_true, p_false))
    return ChainParameters(np.concatenate(vals), n_vars)


def flip_hypothesis(chain: ChainParameters) -> ChainParameters:
    """Relabel H=T <-> H=F throughout a chain."""
    n = chain.n_vars
    out = [1.0 - chain.table(0)]
    for k in range(1, n):
        t = chain.table(k)
        ctx = np.arange(1 << k)
        out.append(t[ctx ^ (1 << (k - 1))])
    return ChainParameters(np.concatenate(out), n)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])

import numpy as np
import pytest

from fairbayes import GroupSpec, generate_synthetic


def synth(groups, n_total, seed, sep=1.0, d=3, privileged=(("A",),)):
    """groups: iterable of (values, base_rate, feature_offset, weight)."""
    weight = sum(g[3] for g in groups)
    specs = [
        GroupSpec(tuple(v), int(n_total * w / weight), rate, [[off] * d, [off + sep] * d])
        for v, rate, off, w in groups
    ]
    return generate_synthetic(specs, seed=seed, privileged=privileged)


# one privileged majority, one non-privileged group slightly above it, several below;
# features shift with group the way census covariates do
INCOME_RACE_LIKE = [
    (("A",), 0.45, 0.5, 6),
    (("As",), 0.50, 0.6, 2),
    (("B",), 0.30, -0.3, 1),
    (("N",), 0.25, -0.5, 0.5),
    (("O",), 0.17, -0.8, 1.5),
]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_group_biased():
    return synth([(("A",), 0.8, 0.0, 1), (("B",), 0.2, 0.0, 1)], 4000, seed=7)


ACCEPTANCE_LINES: list = []


def record_criterion(number, name, ok, detail=""):
    """``ok`` is True/False, or the string "SKIP"."""
    status = ok if isinstance(ok, str) else "PASS" if ok else "FAIL"
    line = f"criterion {number} [{status}] {name}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

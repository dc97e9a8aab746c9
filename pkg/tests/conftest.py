import re
import sys
from pathlib import Path

import numpy as np
import pytest

from followgraph.roster import CandidateRoster, FollowMatrix

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def make_roster(n_dem: int, n_rep: int) -> CandidateRoster:
    records = [(f"D{i}", f"Dem {i}", "D") for i in range(n_dem)]
    records += [(f"R{i}", f"Rep {i}", "R") for i in range(n_rep)]
    return CandidateRoster.from_records(records)


def random_matrix(rng: np.random.Generator, n_users: int, n_candidates: int,
                  density: float = 0.3) -> FollowMatrix:
    """Random follow matrix in which every user follows at least one candidate."""
    n_dem = n_candidates // 2
    roster = make_roster(n_dem, n_candidates - n_dem)
    dense = rng.random((n_users, n_candidates)) < density
    empty = ~dense.any(axis=1)
    dense[empty, rng.integers(0, n_candidates, size=int(empty.sum()))] = True
    return FollowMatrix.from_dense(roster, dense)


@pytest.fixture
def primaries_roster():
    return CandidateRoster.from_records([
        ("Clinton", "Hillary Clinton", "D"),
        ("Sanders", "Bernie Sanders", "D"),
        ("Trump", "Donald Trump", "R"),
        ("Cruz", "Ted Cruz", "R"),
        ("Rubio", "Marco Rubio", "R"),
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(20160301)


@pytest.fixture
def scenarios_dir():
    return SCENARIOS


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    verdicts = dict(getattr(module, "VERDICTS", {}))
    # Criteria that raised before recording a verdict still get a FAIL line.
    for report in terminalreporter.stats.get("failed", []):
        match = re.search(r"test_acceptance\.py::test_(\d+)_", report.nodeid)
        if match and int(match.group(1)) not in verdicts:
            n = int(match.group(1))
            verdicts[n] = f"FAIL criterion {n:2d}: raised before completing ({report.nodeid})"
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(verdicts):
        terminalreporter.write_line(verdicts[number])

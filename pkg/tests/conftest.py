import json
import os
import pathlib
import sys

import numpy as np
import pytest

HERE = pathlib.Path(__file__).parent
sys.path.insert(0, str(HERE))

from fluxanneal.ising import IsingProblem  # noqa: E402


@pytest.fixture(scope="session")
def golden():
    with open(HERE / "golden" / "values.json") as fh:
        return json.load(fh)


def random_problem(n, seed, field_scale=1.0, sparse=False):
    rng = np.random.default_rng(seed)
    J = rng.uniform(-1, 1, (n, n))
    J = np.triu(J, 1)
    J = J + J.T
    h = field_scale * rng.uniform(-1, 1, n)
    return IsingProblem(J, h, sparse=sparse)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("FLUXANNEAL_BENCHMARK") == "1":
        return
    skip = pytest.mark.skip(reason="set FLUXANNEAL_BENCHMARK=1 to run the multi-hour benchmark")
    for item in items:
        if "benchmark" in item.keywords:
            item.add_marker(skip)


# acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  "
                                    f"{title}  [{detail}]")

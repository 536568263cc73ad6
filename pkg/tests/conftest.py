import functools
import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cgpt_sense.cgpt import compute_cgpt  # noqa: E402
from cgpt_sense.dictionary import build_dictionary, default_specs  # noqa: E402
from cgpt_sense.geometry import ShapeSpec, build_target  # noqa: E402

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def frozen():
    return json.loads((Path(__file__).parent / "oracle_values.json").read_text())


@pytest.fixture(scope="session")
def specs():
    return default_specs()


@pytest.fixture(scope="session")
def dictionary():
    return build_dictionary()


@functools.lru_cache(maxsize=None)
def cached_cgpt(key: str, n: int = 512, K: int = 5):
    return compute_cgpt(build_target(default_specs()[key], n), K)


def disk(radius=1.0, k=2.0, n=512, **kw):
    return build_target(ShapeSpec("Circle", {"radius": radius}, k1=k, **kw), n)


def rel(a, b):
    return (a - b).norm() / b.norm()


def random_motion(rng, smin=0.3, smax=2.0):
    from cgpt_sense.geometry import RigidMotion

    return RigidMotion(tuple(rng.uniform(-1.0, 1.0, 2)), float(rng.uniform(0, 2 * np.pi)), float(rng.uniform(smin, smax)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

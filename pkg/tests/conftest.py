import json
import os

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
BENCH = os.path.join(ROOT, "benchmarks")


@pytest.fixture(scope="session")
def bench_dir():
    return BENCH


@pytest.fixture(scope="session")
def encode_inputs():
    with open(os.path.join(BENCH, "encode", "inputs.json")) as fh:
        return json.load(fh)


def bench_path(*parts):
    return os.path.join(BENCH, *parts)

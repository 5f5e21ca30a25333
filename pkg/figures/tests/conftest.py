import json
import os

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fpath():
    """Resolve a committed fixture file to its absolute path."""

    def resolve(name: str) -> str:
        return os.path.join(FIXTURES, name)

    return resolve


@pytest.fixture
def make_job(tmp_path):
    """Serialize a job dict next to tmp outputs; fixture paths are absolute."""

    def write(spec: dict, name: str = "job.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(spec), encoding="utf-8")
        return str(path)

    return write


@pytest.fixture
def dynamics_job(tmp_path, fpath, make_job):
    spec = {
        "panels": [
            {"kind": "energy", "csv": fpath("dynamics.csv")},
        ],
        "output": str(tmp_path / "fig.png"),
    }
    return make_job(spec)

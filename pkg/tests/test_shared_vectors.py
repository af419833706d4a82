"""The cost formula shared with the browser client: both sides must agree."""

import json
from pathlib import Path

import numpy as np
import pytest

from nirb.problems import cost_function_eval, impedance_penalty

VECTORS = Path(__file__).parent.parent / "frontend" / "tests" / "data" / "cost_vectors.json"


def test_cost_vectors_reproduce():
    data = json.loads(VECTORS.read_text())
    assert len(data["cost"]) >= 10
    for case in data["cost"]:
        qoi = np.array([complex(re, im) for re, im in case["qoi"]])
        value = cost_function_eval(qoi, case["weights"], case["penalty"])
        expected = float(case["expected"])
        assert value == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_penalty_vectors_reproduce():
    data = json.loads(VECTORS.read_text())
    for case in data["penalty"]:
        value = impedance_penalty(
            case["mu"], case["coefficients"], case["exponents"],
            scale=case["scale"], offset=case["offset"],
        )
        assert value == pytest.approx(float(case["expected"]), rel=1e-12)

import json
import math
import os
import subprocess

import numpy as np
import pytest

import qcp


def phase_pair(theta):
    return np.eye(2, dtype=complex), np.diag([1.0, np.exp(1j * theta)])


def test_gap_phase_pair():
    u0, u1 = phase_pair(math.pi / 10)
    g = qcp.gap(u0, u1)
    assert g["gamma"] == pytest.approx(math.sin(math.pi / 20), abs=1e-12)
    assert not g["origin_enclosed"]


def test_formula_and_model():
    assert qcp.max_success_probability([0.5] * 4) == pytest.approx(0.6, abs=1e-14)
    p = qcp.outcome_model([0.5] * 4)
    assert p.shape == (5, 5)
    assert np.allclose(p.sum(axis=0), 1.0, atol=1e-12)


def test_strategy_matches_formula():
    u0, u1 = phase_pair(0.7)
    g = qcp.gap(u0, u1)["gamma"]
    s = qcp.strategy(u0, u1, 3)
    assert s["success"] == pytest.approx((3 * g + 1) / 4, abs=1e-10)
    assert np.allclose(s["born"], s["model"], atol=1e-10)


def test_separable_below_formula():
    u0, u1 = phase_pair(math.pi / 10)
    g = qcp.gap(u0, u1)["gamma"]
    assert qcp.separable_baseline(u0, u1, 1) == pytest.approx((1 + g) / 2, abs=1e-6)
    assert qcp.separable_baseline(u0, u1, 3) < (3 * g + 1) / 4 - 1e-4


def test_certify_n2():
    u0, u1 = phase_pair(math.pi / 10)
    c = qcp.certify(u0, u1, 2)
    assert c["verdict"]
    assert c["eta"] == pytest.approx(c["q"], abs=1e-8)


def test_mle_and_simulate():
    assert qcp.mle_estimate([3, 5, 9]) == (5, 5, 5)
    assert qcp.mle_estimate([4, 2]) == (2, 4, 2)
    rate, lo, hi = qcp.simulate([1.0, 1.0], 100, 3)
    assert rate == 1.0 and lo <= rate <= hi


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        qcp.mle_estimate([])


def test_hamiltonian_success():
    spec = {
        "t_start": 0.0,
        "t_end": 4 * math.pi / 5,
        "H0": {"kind": "constant", "offset": [0, 0, 0]},
        "H1": {"kind": "constant", "offset": [0, 0, 0.5]},
    }
    cand = [k * math.pi / 5 for k in range(5)]
    p = qcp.hamiltonian_success_probability(json.dumps(spec), cand)
    assert p == pytest.approx((4 * math.sin(math.pi / 10) + 1) / 5, abs=1e-8)


@pytest.mark.skipif("QCP_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_gamma_json():
    data = os.environ["QCP_TEST_DATA"]
    out = subprocess.run(
        [os.environ["QCP_CLI"], "gamma", "--u0", f"{data}/identity2.json", "--u1", f"{data}/phase_pi10.json"],
        check=True,
        capture_output=True,
        text=True,
    ).stdout
    assert json.loads(out)["gamma"] == pytest.approx(0.15643447, abs=1e-8)

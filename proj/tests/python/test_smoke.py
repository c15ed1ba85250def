import math

import numpy as np
import pytest

import synthint


def factor_model(seed, n=12, t=20, t0=14, d=3):
    rng = np.random.default_rng(seed)
    u, v, w = (rng.uniform(0.5, 1.5, size=(k, 3)) for k in (n, t, d))
    outcomes = [u @ np.diag(w[k]) @ v.T for k in range(d)]
    assign = [i % d for i in range(n)]
    observed = np.vstack([np.concatenate([outcomes[0][i, :t0], outcomes[assign[i]][i, t0:]]) for i in range(n)])
    return outcomes, assign, observed


def test_run_si_recovers_factor_model():
    outcomes, assign, observed = factor_model(3)
    ids = [f"u{i}" for i in range(len(assign))]
    labels = ["d0", "d1", "d2"]
    cf, failures = synthint.run_si(observed, 14, ids, [labels[a] for a in assign], labels, synthint.SvtConfig.fixed(3))
    assert failures == []
    assert len(cf) == 36
    for (unit, label), traj in cf.items():
        truth = outcomes[int(label[1:])][int(unit[1:]), 14:]
        np.testing.assert_allclose(traj, truth, rtol=1e-8)


def test_svt_and_weights():
    matrix, rank, spectrum = synthint.svt(np.diag([2.0, 1.0]), synthint.SvtConfig.fixed(1))
    np.testing.assert_allclose(matrix, np.diag([2.0, 0.0]), atol=1e-14)
    assert rank == 1
    np.testing.assert_allclose(spectrum, [2.0, 1.0])
    assert synthint.select_rank(np.array([10.0, 1.0, 0.1]), synthint.SvtConfig.energy(0.9)) == 1

    weights, rmse = synthint.fit_weights(np.array([2.0, 2.0]), np.ones((2, 2)))
    np.testing.assert_allclose(weights, [1.0, 1.0], atol=1e-14)
    assert rmse == pytest.approx(0.0, abs=1e-14)
    pred = synthint.predict_counterfactual(np.array([0.5, 0.5]), np.array([[2.0, 4.0], [4.0, 8.0]]))
    np.testing.assert_allclose(pred, [3.0, 6.0])


def test_exponential_fit_and_peak():
    t = np.arange(6)
    fit = synthint.fit_exponential(2.0 * np.exp(0.5 * t))
    assert fit.a == pytest.approx(2.0, rel=1e-10)
    assert fit.b == pytest.approx(0.5, abs=1e-10)
    day, value, source = synthint.project_peak(fit, 2.0 * np.exp(0.5 * t), 3)
    assert (day, source) == (8.0, "projected")
    assert value == pytest.approx(2.0 * math.exp(4.0), rel=1e-10)


def test_alignment_and_buckets():
    row = synthint.align_to_event([10, 40, 40, 30], synthint.AlignmentSpec(80, 1, 2))
    assert row["day0_index"] == 2
    assert row["values"] == [40.0, 40.0, 30.0]
    memo3 = synthint.BucketSpec.memo3()
    assert memo3.labels == ["low", "moderate", "severe"]
    assert [memo3.label_for_score(s) for s in (0.2, -0.10, -0.39, -0.40)] == ["low", "moderate", "moderate", "severe"]


def test_errors_carry_their_code():
    with pytest.raises(synthint.SynthIntError, match="^NeverReachedThreshold"):
        synthint.align_to_event([1, 1], synthint.AlignmentSpec(80, 1, 1))
    with pytest.raises(synthint.SynthIntError, match="InsufficientPositivePoints"):
        synthint.fit_exponential(np.array([0.0, -1.0]))


def test_csv_parsers():
    panel, rejected = synthint.parse_deaths_csv("country,date,new_deaths\nA,2020-03-01,1\nA,2020-03-03,-2\n")
    assert rejected == 1
    assert panel["A"] == {"start": "2020-03-01", "values": [1.0]}
    mobility, rejected = synthint.parse_mobility_csv("country,date,category,pct_change\nA,2020-03-01,parks,-10\n")
    assert rejected == 0
    assert mobility["A"]["parks"]["values"] == [-10.0]


def test_artifact_hash_round_trip(memo3_run):
    text, doc = memo3_run
    assert synthint.artifact_hash(text) == doc["content_hash"]
    with pytest.raises(synthint.SynthIntError, match="HashMismatch"):
        synthint.artifact_hash(text.replace('"C01"', '"C99"', 1))

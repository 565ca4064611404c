import numpy as np
import pytest

from avsrd.estimator import EstimationExperiment, plugin_estimate, validate_bound
from avsrd.prob import DistortionMatrix
from avsrd.rd import rate_distortion

HAM2 = DistortionMatrix.hamming(2)


def test_plugin_estimate_is_rate_of_the_type():
    xs = [0, 0, 0, 1]
    assert plugin_estimate(xs, HAM2, 0.1) == pytest.approx(rate_distortion([0.75, 0.25], HAM2, 0.1).rate)


def test_plugin_estimate_infeasible_type():
    d = np.array([[1.0, 2.0], [0.0, 1.0]])
    assert plugin_estimate([0, 0, 0], d, 0.5) == np.inf


def test_validation_report(tmp_path):
    exp = EstimationExperiment([0.75, 0.25], HAM2, 0.1, 0.1, 0.1, n_values=[10, 100], replicas=200, seed=3)
    rep = validate_bound(exp)
    assert [r.n for r in rep.rows] == sorted([10, 100, exp.certified_n()])
    assert rep.holds
    # deviation frequency shrinks with n
    assert rep.row_at(10).empirical_deviation_prob >= rep.row_at(exp.certified_n()).empirical_deviation_prob
    csv = rep.to_csv().splitlines()
    assert csv[0] == "n,empirical_deviation_prob,theoretical_bound"
    assert len(csv) == 4
    again = validate_bound(exp)
    assert again.to_csv() == rep.to_csv()


def test_small_n_counts_infeasible_estimates_as_deviations():
    d = np.array([[1.0, 2.0], [0.0, 1.0]])  # D_min(q) = q(0)
    exp = EstimationExperiment([0.5, 0.5], d, 0.55, 0.1, 0.5, n_values=[2], replicas=400,
                               seed=0, include_certified=False)
    rep = validate_bound(exp)
    # P(type(0) = 1 on two draws) = 1/4 and such samples are infeasible at D = 0.55
    assert rep.rows[0].empirical_deviation_prob >= 0.2


def test_experiment_validation():
    with pytest.raises(ValueError):
        EstimationExperiment([0.5, 0.5], HAM2, 0.1, 1.0, 0.1)
    with pytest.raises(ValueError):
        EstimationExperiment([0.5, 0.5], HAM2, 0.1, 0.1, 0.0)
    with pytest.raises(ValueError):
        EstimationExperiment([0.5, 0.5], HAM2, 0.1, 0.1, 0.1, replicas=0)
    exp = EstimationExperiment([0.5, 0.5], HAM2, 0.1, 0.1, 0.1, n_values=[0], include_certified=False)
    with pytest.raises(ValueError):
        validate_bound(exp)

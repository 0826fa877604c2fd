import math

import numpy as np
import pandas as pd
import pytest

from cvauc.core import empirical_auc
from cvauc.exceptions import InvalidInputError, NumericalFailureError, TrialFailureAbort
from cvauc.schemas.study import StudyConfig
from cvauc.services import simulation
from tests.conftest import fixed_linear


def failing_trainer(spec, train1, train2, context=None):
    raise NumericalFailureError("Covariance is singular after ridge", context)


def test_generate_dataset_is_deterministic(small_study):
    first = simulation.generate_dataset(small_study, 4)
    second = simulation.generate_dataset(small_study, 4)
    np.testing.assert_array_equal(first.class1, second.class1)
    np.testing.assert_array_equal(first.class2, second.class2)
    other = simulation.generate_dataset(small_study, 5)
    assert not np.array_equal(first.class1, other.class1)


def test_generate_dataset_shifts_class2():
    cfg = StudyConfig(n1=2000, n2=2000, p=3, c=1.5, K=2, seed=8)
    data = simulation.generate_dataset(cfg, 0)
    np.testing.assert_allclose(data.class1.mean(axis=0), 0.0, atol=0.1)
    np.testing.assert_allclose(data.class2.mean(axis=0), 1.5, atol=0.1)


def test_generate_dataset_needs_seed():
    cfg = StudyConfig(n1=4, n2=4, K=2)
    with pytest.raises(InvalidInputError):
        simulation.generate_dataset(cfg, 0)


def test_default_separation_gives_auc_near_080():
    cfg = StudyConfig(n1=10, n2=10, p=4, K=2)
    assert simulation.bayes_auc(cfg) == pytest.approx(0.80, abs=0.005)


def test_bayes_auc_matches_monte_carlo():
    cfg = StudyConfig(n1=20000, n2=20000, p=4, K=2, seed=14)
    data = simulation.generate_dataset(cfg, 0)
    # the optimal rule for a mean shift along the diagonal scores by -sum(x)
    auc = empirical_auc(-data.class1.sum(axis=1), -data.class2.sum(axis=1))
    assert simulation.bayes_auc(cfg) == pytest.approx(0.80, abs=0.005)
    assert auc == pytest.approx(simulation.bayes_auc(cfg), abs=0.01)


def test_no_separation_gives_chance_auc():
    cfg = StudyConfig(n1=20, n2=20, p=2, c=0.0, K=2, seed=15)
    aucs = [
        simulation.conditional_auc(cfg, simulation.generate_dataset(cfg, trial), trial)
        for trial in range(30)
    ]
    assert np.mean(aucs) == pytest.approx(0.5, abs=0.02)


def test_separation_for_bayes_auc_084():
    cfg = StudyConfig(n1=10, n2=10, p=2, c=0.9945, K=10)
    assert simulation.bayes_auc(cfg) == pytest.approx(0.84, abs=1e-3)


def test_permutation_ratio_values():
    assert simulation.permutation_ratio(2) == pytest.approx(0.5, rel=1e-12)
    assert simulation.permutation_ratio(4) == pytest.approx(0.0234375, rel=1e-12)
    ratios = [simulation.permutation_ratio(n) for n in range(2, 41, 2)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert simulation.permutation_ratio(200) > 0.0


@pytest.mark.parametrize("n", [3, 0, -2, 2.0, True])
def test_permutation_ratio_rejects_bad_n(n):
    with pytest.raises(InvalidInputError):
        simulation.permutation_ratio(n)


def test_run_trial_returns_all_metrics(small_study):
    outcome = simulation.run_trial(small_study, 0)
    assert outcome.error is None
    expected = set(simulation.SE_TARGETS) | set(simulation.POINT_ESTIMATORS)
    assert expected <= set(outcome.values)
    assert 0.0 <= outcome.values["auc_cvkm"] <= 1.0
    assert outcome.values["sd_if_cvkm"] >= 0.0


def test_matched_pairing_skips_full_only_estimators(small_study):
    cfg = small_study.model_copy(update={"pairing": "matched", "estimators": ["cvkr"]})
    outcome = simulation.run_trial(cfg, 0)
    assert "sqrt_var2_cvkr" in outcome.values
    assert "sqrt_var1_cvkr" not in outcome.values
    assert "sqrt_var3_cvk" not in outcome.values
    assert "auc_cvkm" not in outcome.values


def test_run_trial_true_auc():
    cfg = StudyConfig(n1=6, n2=6, K=2, R=1, n_mc=2, seed=3, estimators=["cvkr"])
    outcome = simulation.run_trial(cfg, 1)
    assert 0.0 <= outcome.values["true_auc"] <= 1.0


def test_run_trials_is_deterministic(small_study):
    first, failed = simulation.run_trials(small_study)
    second, _ = simulation.run_trials(small_study)
    assert failed == 0
    assert first["trial"].tolist() == list(range(small_study.n_mc))
    pd.testing.assert_frame_equal(first, second)


def test_study_report_identities(small_study):
    report = simulation.run_study(small_study)
    assert report.n_trials == small_study.n_mc
    true_sd = {point.name: point.true_sd for point in report.points}
    assert set(true_sd) == {"auc_cvkm", "auc_cvk", "auc_cvkr"}
    assert len(report.se_estimators) == len(simulation.SE_TARGETS) + len(simulation.CROSS_TARGETS)
    by_name = {se.name: se for se in report.se_estimators}
    cross = by_name["sd_if_cvkm_vs_cvkr"]
    assert cross.target == "auc_cvkr"
    assert cross.mean == by_name["sd_if_cvkm"].mean
    assert cross.normalized_mean == pytest.approx(cross.mean / true_sd["auc_cvkr"], rel=1e-12)
    for se in report.se_estimators:
        assert se.rms ** 2 == pytest.approx(se.bias ** 2 + se.sd ** 2, abs=1e-12)
        scale = true_sd[se.target]
        assert se.normalized_mean == pytest.approx(se.mean / scale, rel=1e-12)
        assert se.normalized_bias == pytest.approx(se.bias / scale, rel=1e-12)
        assert se.normalized_rms == pytest.approx(se.rms / scale, rel=1e-12)
        assert se.mc_se == pytest.approx(se.sd / math.sqrt(small_study.n_mc))


def test_all_trials_failing_aborts():
    cfg = StudyConfig(n1=4, n2=4, K=2, M=10, n_mc=3, seed=1, true_auc=False)
    with pytest.raises(TrialFailureAbort) as info:
        simulation.run_trials(cfg, trainer=failing_trainer)
    assert info.value.failed == 3
    assert info.value.first_errors


def test_isolated_failure_is_dropped(monkeypatch, small_study):
    generate = simulation.generate_dataset

    def flaky(cfg, trial_index):
        if trial_index == 2:
            raise NumericalFailureError("Singular covariance", {"trial": trial_index})
        return generate(cfg, trial_index)

    monkeypatch.setattr(simulation, "generate_dataset", flaky)
    monkeypatch.setattr(simulation.settings, "max_failure_rate", 0.5)
    trials, failed = simulation.run_trials(small_study)
    assert failed == 1
    assert 2 not in trials["trial"].tolist()
    assert simulation.summarize_trials(small_study, trials, failed).n_failed == 1


def test_fold_products():
    centered = np.array([1.0, 2.0, -1.0, 3.0])
    fold_ids = np.array([0, 0, 1, 1])
    within, cross = simulation._fold_products(centered, fold_ids, 2)
    assert within == pytest.approx(2 * (1 * 2 + -1 * 3))
    assert cross == pytest.approx(2 * (1 * -1 + 1 * 3 + 2 * -1 + 2 * 3))


def test_components_with_fixed_rule_have_no_covariance():
    # a rule that ignores the training data makes errors independent across observations
    cfg = StudyConfig(n1=20, n2=20, p=2, K=2, n_mc=60, seed=5, true_auc=False)
    report = simulation.estimate_components(cfg, trainer=fixed_linear)
    assert report.n == 40
    assert report.fold_size == 20
    assert abs(report.omega) < 0.02
    assert abs(report.gamma) < 0.02
    assert report.sigma2 == pytest.approx(report.mu * (1 - report.mu), rel=0.05)
    assert report.predicted_bias == -report.gamma
    assert report.se_mc_var == pytest.approx(report.mc_var * math.sqrt(2 / 59))


def test_components_drop_failed_trials(monkeypatch):
    generate = simulation.generate_dataset

    def flaky(cfg, trial_index):
        if trial_index == 1:
            raise NumericalFailureError("Singular covariance", {"trial": trial_index})
        return generate(cfg, trial_index)

    monkeypatch.setattr(simulation, "generate_dataset", flaky)
    monkeypatch.setattr(simulation.settings, "max_failure_rate", 0.5)
    cfg = StudyConfig(n1=10, n2=10, p=2, K=2, n_mc=10, seed=6, true_auc=False)
    report = simulation.estimate_components(cfg, trainer=fixed_linear)
    assert report.n_trials == 9
    assert report.n_failed == 1
    assert report.se_mc_var == pytest.approx(report.mc_var * math.sqrt(2 / 8))


def test_components_abort_when_trials_fail():
    cfg = StudyConfig(n1=10, n2=10, p=2, K=2, n_mc=4, seed=6, true_auc=False)
    with pytest.raises(TrialFailureAbort):
        simulation.estimate_components(cfg, trainer=failing_trainer)

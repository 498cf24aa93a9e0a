"""EM estimation of the copula-mixture parameters."""

import numpy as np
import pytest

from copcd.copula import CopulaMixtureModel, sample_clayton_pairs, sample_mixture
from copcd.dependence import TAIL_CLAYTON, TAIL_CLAYTON_SURVIVAL
from copcd.emfit import (
    STATUS_CONVERGED,
    EmConfig,
    e_step,
    fit,
    log_likelihood,
    m_step,
)


def assert_monotone(trace, slack=1e-9):
    ll = trace.log_likelihoods()
    assert (np.diff(ll) >= -slack).all(), f"likelihood decreased: {ll}"


def test_config_validation():
    with pytest.raises(ValueError):
        EmConfig(eps=0.0)
    with pytest.raises(ValueError):
        EmConfig(theta_max=-1.0)
    with pytest.raises(ValueError):
        EmConfig(grid_rho=1)


def test_grids_cover_open_intervals():
    cfg = EmConfig()
    rho = cfg.rho_grid()
    theta = cfg.theta_grid()
    assert len(rho) == 99 and 0 < rho[0] and rho[-1] < 1
    assert len(theta) == 200 and 0 < theta[0] and theta[-1] == cfg.theta_max


def test_log_likelihood_single_point_hand_value():
    val = log_likelihood([0.5], [0.5], rho=0.8, theta=1.0, w=0.3,
                         tail_mode=TAIL_CLAYTON)
    assert val == pytest.approx(np.log(1.329630), abs=1e-5)
    assert val == pytest.approx(0.28490, abs=1e-4)


def test_log_likelihood_independence_is_zero():
    rng = np.random.default_rng(0)
    u, v = rng.uniform(0.05, 0.95, (2, 50))
    assert log_likelihood(u, v, rho=1e-9, theta=1.0, w=1.0,
                          tail_mode=TAIL_CLAYTON) == pytest.approx(0.0, abs=1e-8)


def test_log_likelihood_matches_direct_recomputation():
    from copcd.copula import mixture_logpdf_params

    rng = np.random.default_rng(1)
    u, v = rng.uniform(0.05, 0.95, (2, 200))
    got = log_likelihood(u, v, 0.6, 2.0, 0.4, TAIL_CLAYTON_SURVIVAL)
    direct = mixture_logpdf_params(u, v, 0.6, 2.0, 0.4, TAIL_CLAYTON_SURVIVAL)
    assert got == pytest.approx(direct.sum() / len(u), abs=1e-12)


def test_e_step_degenerate_weights():
    u = np.array([0.3, 0.7])
    v = np.array([0.4, 0.6])
    assert e_step(u, v, 0.5, 1.0, 1.0, TAIL_CLAYTON).tolist() == [1.0, 1.0]
    assert e_step(u, v, 0.5, 1.0, 0.0, TAIL_CLAYTON).tolist() == [0.0, 0.0]


def test_e_step_hand_value():
    gamma = e_step([0.5], [0.5], rho=0.8, theta=1.0, w=0.3,
                   tail_mode=TAIL_CLAYTON)
    expected = 0.3 * (1 / np.sqrt(0.36)) / 1.3296296
    assert gamma[0] == pytest.approx(expected, abs=1e-6)
    assert gamma[0] == pytest.approx(0.37605, abs=1e-4)


def test_m_step_weight_is_mean_responsibility():
    rng = np.random.default_rng(2)
    u, v = rng.uniform(0.05, 0.95, (2, 100))
    w, _, _ = m_step(u, v, np.ones(100), TAIL_CLAYTON, EmConfig(), 0.5, 0.5)
    assert w == 1.0
    gamma = rng.random(100)
    w2, _, _ = m_step(u, v, gamma, TAIL_CLAYTON, EmConfig(), 0.5, 0.5)
    assert w2 == pytest.approx(gamma.mean(), abs=1e-12)


def test_m_step_recovers_gaussian_correlation():
    model = CopulaMixtureModel(rho=0.8, theta=1.0, w=1.0, n_train=1)
    u, v = sample_mixture(model, 5000, seed=3)
    _, rho, _ = m_step(u, v, np.ones(5000), TAIL_CLAYTON, EmConfig(), 0.5, 0.5)
    assert 0.77 <= rho <= 0.83


def test_m_step_recovers_clayton_theta():
    rng = np.random.default_rng(4)
    u, v = sample_clayton_pairs(2.0, 5000, rng)
    _, _, theta = m_step(u, v, np.zeros(5000), TAIL_CLAYTON, EmConfig(), 0.5, 0.5)
    assert 1.7 <= theta <= 2.3


def test_fit_huge_eps_stops_after_one_update():
    rng = np.random.default_rng(5)
    u, v = rng.uniform(0.05, 0.95, (2, 100))
    _, trace = fit(u, v, TAIL_CLAYTON, EmConfig(eps=10.0))
    assert trace.status == STATUS_CONVERGED
    assert len(trace.rows) == 2  # initialization plus exactly one iteration


def test_fit_pure_gaussian_data_weights_gaussian_component():
    # the default eps=0.01 stops before the weight separates; parameter
    # recovery checks run the same EM to tighter convergence
    config = EmConfig(eps=1e-4, max_iters=500)
    wins = 0
    for seed in range(10):
        model = CopulaMixtureModel(rho=0.8, theta=1.0, w=1.0, n_train=1)
        u, v = sample_mixture(model, 5000, seed=100 + seed)
        (rho, theta, w), trace = fit(u, v, TAIL_CLAYTON, config)
        assert_monotone(trace)
        if w >= 0.8:
            wins += 1
    assert wins >= 6  # 10-seed majority


def test_fit_is_deterministic():
    model = CopulaMixtureModel(rho=0.7, theta=2.0, w=0.5, n_train=1)
    u, v = sample_mixture(model, 2000, seed=6)
    a, trace_a = fit(u, v, TAIL_CLAYTON)
    b, trace_b = fit(u, v, TAIL_CLAYTON)
    assert a == b
    assert trace_a.rows == trace_b.rows


def test_fit_monotone_on_survival_data():
    model = CopulaMixtureModel(rho=0.6, theta=3.0, w=0.4,
                               tail_mode=TAIL_CLAYTON_SURVIVAL, n_train=1)
    u, v = sample_mixture(model, 3000, seed=7)
    (rho, theta, w), trace = fit(u, v, TAIL_CLAYTON_SURVIVAL)
    assert_monotone(trace)
    assert 0.0 <= w <= 1.0


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit([0.5] * 5, [0.5] * 5, TAIL_CLAYTON)  # too few samples
    with pytest.raises(ValueError):
        fit([0.0] * 20, [0.5] * 20, TAIL_CLAYTON)  # boundary pseudo-obs
    with pytest.raises(ValueError):
        fit([0.5] * 20, [0.5] * 20, "gumbel")


def test_trace_csv_export(tmp_path):
    rng = np.random.default_rng(8)
    u, v = rng.uniform(0.05, 0.95, (2, 50))
    _, trace = fit(u, v, TAIL_CLAYTON)
    path = tmp_path / "trace.csv"
    trace.write_csv(str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("iteration,log_likelihood,rho,theta,w")
    assert len(lines) == len(trace.rows) + 1

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from mra.errors import ConfigurationError
from mra.metrics import crps_normal, gaussian_log_score, log_score, rmspe, score


def test_rmspe_example():
    assert rmspe([0, 0], [3, 4]) == pytest.approx(3.5355339059327378, rel=1e-15)


def test_rmspe_two_pass_reference():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal(1000), rng.standard_normal(1000)
    mse = math.fsum((x - y) ** 2 for x, y in zip(a, b)) / len(a)
    assert rmspe(a, b) == pytest.approx(math.sqrt(mse), rel=1e-13)
    perm = rng.permutation(1000)
    assert rmspe(a[perm], b[perm]) == pytest.approx(rmspe(a, b), rel=1e-13)
    assert rmspe(a, a) == 0.0


def test_crps_standard_normal_at_mean():
    assert crps_normal(0.0, 1.0, 0.0) == pytest.approx(0.23369497725510913, rel=1e-12)


def test_crps_zero_sd_is_absolute_error():
    assert crps_normal(1.0, 0.0, -2.5) == 3.5
    np.testing.assert_allclose(crps_normal([0, 0], [1e-12, 0], [1, 1]), [1, 1], atol=1e-11)


def test_crps_matches_integral():
    mu, sd, y = 0.3, 1.7, -0.4
    f = lambda x: (norm.cdf(x, mu, sd) - (x >= y)) ** 2
    val = integrate.quad(f, -40, y)[0] + integrate.quad(f, y, 40)[0]
    assert crps_normal(mu, sd, y) == pytest.approx(val, rel=1e-8)


@settings(max_examples=200, deadline=None)
@given(mu=st.floats(-1e3, 1e3), sd=st.one_of(st.just(0.0), st.floats(1e-6, 1e3)), y=st.floats(-1e3, 1e3))
def test_crps_nonnegative(mu, sd, y):
    assert crps_normal(mu, sd, y) >= -1e-12 * max(1.0, sd)


def test_log_score_identity():
    assert log_score(-123.4, -123.4) == {"difference": 0.0, "ratio": 1.0}
    assert math.isnan(log_score(1.0, 0.0)["ratio"])


def test_gaussian_log_score():
    assert gaussian_log_score([0, 1], [1, 2], [0, 1]) == pytest.approx(
        norm.logpdf(0) + norm.logpdf(0, scale=2))


def test_score_report():
    rep = score([0, 0], [1, 1], [3, 4])
    assert rep.count == 2 and rep.rmspe == pytest.approx(3.5355339059327378)
    assert set(rep.to_dict()) == {"rmspe", "crps_mean", "log_score", "count"}


def test_errors():
    with pytest.raises(ConfigurationError):
        rmspe([1, 2], [1])
    with pytest.raises(ConfigurationError):
        rmspe([], [])
    with pytest.raises(ConfigurationError):
        crps_normal(0, -1, 0)


def test_crps_degenerate_limit():
    assert crps_normal(0.7, 1e-12, 0.7) < 1e-11
    assert crps_normal(0.0, 1e-12, 2.0) == pytest.approx(2.0, abs=1e-11)


def test_toy_exact_log_score():
    from mra import oracle
    from mra.covariance import CovarianceModel
    from mra.geometry import Domain, KnotStrategy, make_tree
    from mra.inference import loglikelihood

    model = CovarianceModel("exponential", 1.0, 0.25, 0.0)
    S = oracle.regular_grid(54).reshape(-1, 1)
    y = oracle.simulate_dense(model, S, seed=3)
    tree = make_tree(Domain.unit(1), (3, 3, 3), KnotStrategy("child-boundaries", 2), S, y)
    rel = log_score(loglikelihood(tree, model), oracle.exact_loglik(model, S, y))
    assert abs(rel["difference"]) < 1e-6


@pytest.mark.slow
def test_full_scale_worse_than_exact_at_30720():
    from mra.cli import simulate_data
    from mra.config import ExperimentConfig
    from mra.experiments import competitor_loglik

    cfg = ExperimentConfig()
    model = cfg.model.build()
    S, y, spacing = simulate_data(cfg, 0, 30720)
    ref, _, s1 = competitor_loglik("dl-exact", model, cfg.partition.domain, S, y, cfg, spacing)
    fsa, _, s2 = competitor_loglik("fsa-fast", model, cfg.partition.domain, S, y, cfg, spacing)
    assert s1 == s2 == "ok"
    assert log_score(fsa, ref)["difference"] < 0

import numpy as np
import pytest

from hierlogit import (
    BadDimensionsError,
    OutOfDomainError,
    SingularDesignError,
    SynthConfig,
    compute_shares,
    estimate_linear,
    generate_market,
    regression_rows,
    validate_params,
)


def _pipeline(config):
    tree, delta, covariates = generate_market(config)
    params = validate_params(config.sigma1, config.sigma2)
    table, _ = compute_shares(tree, delta, params)
    return estimate_linear(regression_rows(table), covariates)


def test_generate_market_dimensions():
    tree, delta, covariates = generate_market(
        SynthConfig(2, 2, 2, beta=(1.0, -2.0), seed=1)
    )
    assert tree.n_groups == 2
    assert tree.n_subgroups == 4
    assert tree.n_products == 8
    assert covariates.shape == (8, 2)
    assert len(delta) == 8


def test_generate_market_zero_noise_is_linear():
    config = SynthConfig(2, 3, 2, beta=(0.5, 1.5, -1.0), xi_scale=0.0, seed=9)
    _, delta, covariates = generate_market(config)
    np.testing.assert_array_equal(delta.values, covariates @ np.array(config.beta))


def test_generate_market_reproducible():
    config = SynthConfig(3, 2, 2, beta=(1.0,), xi_scale=0.4, seed=77)
    tree_a, delta_a, x_a = generate_market(config)
    tree_b, delta_b, x_b = generate_market(config)
    assert tree_a.products == tree_b.products
    np.testing.assert_array_equal(delta_a.values, delta_b.values)
    np.testing.assert_array_equal(x_a, x_b)


def test_generate_market_validation():
    with pytest.raises(BadDimensionsError):
        generate_market(SynthConfig(0, 2, 2, beta=(1.0,)))
    with pytest.raises(BadDimensionsError):
        generate_market(SynthConfig(2, 2, 2, beta=()))
    with pytest.raises(BadDimensionsError):
        generate_market(SynthConfig(2, 2, 2, beta=(1.0,), x_range=(1.0, 0.0)))
    with pytest.raises(OutOfDomainError):
        generate_market(SynthConfig(2, 2, 2, beta=(1.0,), xi_scale=-0.1))


def test_exact_fit_recovers_truth():
    result = _pipeline(
        SynthConfig(2, 2, 2, beta=(1.0, -2.0), sigma1=0.5, sigma2=0.25, xi_scale=0.0, seed=42)
    )
    np.testing.assert_allclose(result.beta_hat, [1.0, -2.0], rtol=0, atol=1e-8)
    assert result.sigma1_hat == pytest.approx(0.5, abs=1e-8)
    assert result.sigma2_hat == pytest.approx(0.25, abs=1e-8)
    assert result.residual_norm <= 1e-10


def test_exact_fit_zero_sigmas():
    result = _pipeline(
        SynthConfig(2, 2, 3, beta=(0.7, 0.3), sigma1=0.0, sigma2=0.0, xi_scale=0.0, seed=5)
    )
    assert result.sigma1_hat == pytest.approx(0.0, abs=1e-8)
    assert result.sigma2_hat == pytest.approx(0.0, abs=1e-8)


def test_single_subgroup_groups_are_singular():
    # one subgroup per group makes s_{h|g} = 1 everywhere, so x2 = 0
    with pytest.raises(SingularDesignError):
        _pipeline(SynthConfig(3, 1, 3, beta=(1.0,), sigma1=0.3, sigma2=0.2, seed=6))


def test_too_few_rows_rejected():
    with pytest.raises(SingularDesignError):
        _pipeline(SynthConfig(1, 1, 2, beta=(1.0,), sigma1=0.1, sigma2=0.1, seed=2))


def test_misaligned_covariates_rejected():
    config = SynthConfig(2, 2, 2, beta=(1.0,), sigma1=0.4, sigma2=0.2, seed=3)
    tree, delta, covariates = generate_market(config)
    table, _ = compute_shares(tree, delta, validate_params(0.4, 0.2))
    rows = regression_rows(table)
    with pytest.raises(BadDimensionsError):
        estimate_linear(rows, covariates[:-1])

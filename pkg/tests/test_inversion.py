import numpy as np
import pytest

from hierlogit import (
    DegenerateShareError,
    NoConvergenceError,
    OutOfDomainError,
    ShareTable,
    berry_invert,
    build_hierarchy,
    compute_shares,
    numeric_invert,
    regression_rows,
    validate_params,
)

from helpers import balanced_tree, random_instance


def test_closed_form_symmetric_singleton():
    tree = build_hierarchy([("g1", "h1", "p1")])
    table, _ = compute_shares(tree, [0.0], validate_params(0.5, 0.25))
    assert berry_invert(table, validate_params(0.5, 0.25)).values[0] == pytest.approx(0.0, abs=1e-15)


def test_closed_form_plain_logit_log_ratio():
    # sigma = 0: delta_j = log(s_j / s_0) with no correction terms
    tree = build_hierarchy([("g1", "h1", "p1"), ("g1", "h1", "p2")])
    table = ShareTable.from_joint(tree, [1 / 3, 1 / 3], 1 / 3)
    delta = berry_invert(table, validate_params(0.0, 0.0)).values
    np.testing.assert_allclose(delta, [0.0, 0.0], atol=1e-14)


def test_closed_form_round_trip_2x2x2():
    rng = np.random.default_rng(43)
    tree = balanced_tree(2, 2, 2)
    params = validate_params(0.5, 0.25)
    for _ in range(20):
        delta = rng.uniform(-3, 3, 8)
        table, _ = compute_shares(tree, delta, params)
        np.testing.assert_allclose(berry_invert(table, params).values, delta, rtol=0, atol=1e-10)


def test_round_trips_both_directions():
    rng = np.random.default_rng(47)
    for _ in range(50):
        tree, delta, params = random_instance(rng, dlo=-6, dhi=6)
        table, _ = compute_shares(tree, delta, params)
        # shares -> delta -> shares, through the observed-data constructor
        observed = ShareTable.from_joint(tree, table.joint, table.outside)
        recovered = berry_invert(observed, params).values
        np.testing.assert_allclose(recovered, delta, rtol=0, atol=1e-10)
        table2, _ = compute_shares(tree, recovered, params)
        np.testing.assert_allclose(table2.joint, table.joint, rtol=0, atol=1e-10)
        assert table2.outside == pytest.approx(table.outside, abs=1e-10)


def test_inversion_rejects_degenerate_table():
    tree = build_hierarchy([("g1", "h1", "p1"), ("g1", "h1", "p2")])
    bad = ShareTable(
        hierarchy=tree,
        joint=np.array([0.5, 0.0]),
        cond_product=np.array([1.0, 0.0]),
        cond_subgroup=np.array([1.0]),
        group=np.array([0.5]),
        outside=0.5,
        log_joint=np.array([np.log(0.5), -np.inf]),
        log_cond_product=np.array([0.0, -np.inf]),
        log_cond_subgroup=np.array([0.0]),
        log_group=np.array([np.log(0.5)]),
        log_outside=np.log(0.5),
    )
    params = validate_params(0.3, 0.2)
    with pytest.raises(DegenerateShareError):
        berry_invert(bad, params)
    with pytest.raises(DegenerateShareError):
        regression_rows(bad)


def test_regression_rows_symmetric_singleton():
    tree = build_hierarchy([("g1", "h1", "p1")])
    table, _ = compute_shares(tree, [0.0], validate_params(0.4, 0.1))
    (row,) = regression_rows(table)
    assert row.product_id == "p1"
    assert row.y == pytest.approx(0.0, abs=1e-15)
    assert row.x1 == pytest.approx(0.0, abs=1e-15)
    assert row.x2 == pytest.approx(0.0, abs=1e-15)


def test_regression_rows_identical_pair():
    tree = build_hierarchy([("g1", "h1", "p1"), ("g1", "h1", "p2")])
    table, _ = compute_shares(tree, [0.7, 0.7], validate_params(0.0, 0.0))
    rows = regression_rows(table)
    for row in rows:
        assert row.x1 == pytest.approx(np.log(0.5), abs=1e-14)
        assert row.x2 == pytest.approx(0.0, abs=1e-15)


def test_regression_rows_satisfy_identity():
    rng = np.random.default_rng(53)
    for _ in range(30):
        tree, delta, params = random_instance(rng, dlo=-5, dhi=5)
        table, _ = compute_shares(tree, delta, params)
        rows = regression_rows(table)
        assert [r.product_id for r in rows] == list(tree.products)
        implied = np.array(
            [r.y - params.sigma1 * r.x1 - params.sigma2 * r.x2 for r in rows]
        )
        np.testing.assert_allclose(implied, delta, rtol=0, atol=1e-12)


def test_newton_symmetric_singleton_converges_fast():
    tree = build_hierarchy([("g1", "h1", "p1")])
    params = validate_params(0.5, 0.25)
    table, _ = compute_shares(tree, [0.0], params)
    # the plain-logit starting point is already exact here
    delta = numeric_invert(tree, table, params, tol=1e-10, max_iter=3).values
    assert delta[0] == pytest.approx(0.0, abs=1e-10)


def test_newton_plain_logit_pair():
    tree = build_hierarchy([("g1", "h1", "p1"), ("g1", "h1", "p2")])
    params = validate_params(0.0, 0.0)
    table, _ = compute_shares(tree, [1.3, -0.4], params)
    delta = numeric_invert(tree, table, params, tol=1e-12, max_iter=50).values
    log_ratio = table.log_joint - table.log_outside
    np.testing.assert_allclose(delta, log_ratio, atol=1e-10)
    np.testing.assert_allclose(delta, [1.3, -0.4], atol=1e-10)


def test_newton_matches_closed_form_12_products():
    tree = balanced_tree(2, 2, 3)
    params = validate_params(0.6, 0.3)
    rng = np.random.default_rng(59)
    for _ in range(10):
        delta = rng.uniform(-3, 3, 12)
        table, _ = compute_shares(tree, delta, params)
        newton = numeric_invert(tree, table, params, tol=1e-12, max_iter=50).values
        closed = berry_invert(table, params).values
        np.testing.assert_allclose(newton, closed, rtol=0, atol=1e-8)


def test_newton_validates_tol_and_reports_no_convergence():
    tree = balanced_tree(2, 2, 2)
    params = validate_params(0.5, 0.25)
    table, _ = compute_shares(tree, np.linspace(-1, 1, 8), params)
    with pytest.raises(OutOfDomainError):
        numeric_invert(tree, table, params, tol=0.0)
    with pytest.raises(NoConvergenceError) as info:
        numeric_invert(tree, table, params, tol=1e-12, max_iter=0)
    assert info.value.residual is not None
    assert np.isfinite(info.value.residual)

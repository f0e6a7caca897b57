"""Synthetic markets and the linear estimating equation.

``generate_market`` builds a balanced tree with mean utilities
delta = X beta + xi, and ``estimate_linear`` fits the inverted share
identity y = X beta + sigma1 x1 + sigma2 x2 by least squares. With
xi_scale = 0 and exact model shares the identity holds without error, so
the fit is interpolation and recovers (beta, sigma1, sigma2) to machine
precision. With xi_scale > 0 the identity still holds in delta, but x1
and x2 are correlated with xi, so plain least squares is biased; fixing
that needs instruments and is out of scope here.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BadDimensionsError, OutOfDomainError, SingularDesignError
from .hierarchy import ChoiceHierarchy, UtilityVector, build_hierarchy

__all__ = ["SynthConfig", "EstimationResult", "generate_market", "estimate_linear"]

# pivot ratio below which the design is declared rank deficient
_PIVOT_RTOL = 1e-10


@dataclass(frozen=True)
class SynthConfig:
    """Balanced-tree market dimensions and data-generating parameters."""

    n_groups: int
    n_subgroups_per_group: int
    n_products_per_subgroup: int
    beta: tuple
    x_range: tuple = (0.0, 1.0)
    xi_scale: float = 0.0
    sigma1: float = 0.0
    sigma2: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class EstimationResult:
    """Least-squares fit of the share identity."""

    beta_hat: np.ndarray
    sigma1_hat: float
    sigma2_hat: float
    residual_norm: float


def generate_market(config: SynthConfig):
    """Balanced synthetic market: hierarchy, utilities, and covariates.

    Returns ``(hierarchy, UtilityVector, X)`` with X of shape
    (n_products, len(beta)) drawn uniformly on ``x_range``, xi drawn
    normal(0, xi_scale), and delta = X beta + xi. Reproducible by seed.

    Raises
    ------
    BadDimensionsError
        On nonpositive tree dimensions, an empty beta, or an inverted
        x_range.
    OutOfDomainError
        On negative xi_scale.
    """
    dims = (config.n_groups, config.n_subgroups_per_group, config.n_products_per_subgroup)
    if any(int(d) < 1 for d in dims):
        raise BadDimensionsError(f"tree dimensions {dims} must all be >= 1")
    beta = np.atleast_1d(np.asarray(config.beta, dtype=float))
    if beta.ndim != 1 or beta.size < 1 or not np.all(np.isfinite(beta)):
        raise BadDimensionsError("beta must be a nonempty finite vector")
    lo, hi = (float(v) for v in config.x_range)
    if not lo <= hi:
        raise BadDimensionsError(f"x_range {config.x_range!r} must satisfy lo <= hi")
    xi_scale = float(config.xi_scale)
    if xi_scale < 0.0:
        raise OutOfDomainError(f"xi_scale={xi_scale!r} must be nonnegative")

    rows = [
        (f"g{g}", f"h{h}", f"g{g}h{h}p{p}")
        for g in range(1, int(config.n_groups) + 1)
        for h in range(1, int(config.n_subgroups_per_group) + 1)
        for p in range(1, int(config.n_products_per_subgroup) + 1)
    ]
    hierarchy = build_hierarchy(rows, market_id="synthetic")

    rng = np.random.default_rng(int(config.seed))
    covariates = rng.uniform(lo, hi, size=(hierarchy.n_products, beta.size))
    xi = rng.normal(0.0, xi_scale, size=hierarchy.n_products)
    delta = covariates @ beta + xi
    return hierarchy, UtilityVector(delta), covariates


def estimate_linear(rows, covariates) -> EstimationResult:
    """Least squares of y on (X, x1, x2) over the supplied regression rows.

    ``rows`` (from ``regression_rows``) and the covariate matrix must be
    aligned product for product. Solved through a column-pivoted QR of the
    design matrix; a pivot collapsing below 1e-10 of the largest signals
    collinear regressors, e.g. x2 identically zero when every group has a
    single subgroup.

    Raises
    ------
    SingularDesignError
        On rank-deficient designs or too few rows to identify all
        coefficients.
    """
    rows = list(rows)
    covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
    n = len(rows)
    if covariates.shape[0] != n:
        raise BadDimensionsError(
            f"{n} regression rows but {covariates.shape[0]} covariate rows"
        )
    n_coef = covariates.shape[1] + 2
    if n < n_coef:
        raise SingularDesignError(
            f"{n} rows cannot identify {n_coef} coefficients"
        )

    design = np.column_stack(
        [covariates, [r.x1 for r in rows], [r.x2 for r in rows]]
    )
    y = np.array([r.y for r in rows])

    q, r, perm = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or not np.all(np.isfinite(diag)) or diag.min() <= _PIVOT_RTOL * diag.max():
        raise SingularDesignError("design matrix is rank deficient (collinear regressors)")

    coef_pivoted = scipy.linalg.solve_triangular(r, q.T @ y)
    coef = np.empty(n_coef)
    coef[perm] = coef_pivoted
    residual_norm = float(np.linalg.norm(y - design @ coef))
    return EstimationResult(
        beta_hat=coef[:-2],
        sigma1_hat=float(coef[-2]),
        sigma2_hat=float(coef[-1]),
        residual_norm=residual_norm,
    )

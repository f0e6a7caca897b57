"""Inclusive values and choice probabilities for the two-level logit tree.

All aggregation runs through max-shifted log-sum-exp and every share is
assembled in log space, exponentiated once at the end. The explicit ratio
forms overflow as soon as |delta| / (1 - sigma1) passes ~709; this kernel
stays finite for any finite utilities.

Levels, bottom to top:

* subgroup inclusive value  I_sub = (1-sigma1) * log sum exp(delta/(1-sigma1))
* group inclusive value     I_grp = (1-sigma2) * log sum exp(I_sub/(1-sigma2))
* top inclusive value       I_top = log(sum exp(I_grp) [+ 1 for the outside option])

Conditional product shares are the softmax of delta/(1-sigma1) within a
subgroup, conditional subgroup shares the softmax of I_sub/(1-sigma2)
within a group, and group shares the softmax of I_grp (outside option
entering as exp(0) = 1). The joint share of a product is the product of
the three conditionals down its branch.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import EmptyChoiceSetError
from .hierarchy import ChoiceHierarchy, NestingParams, as_delta_array

__all__ = [
    "InclusiveValues",
    "ShareTable",
    "subgroup_inclusive_value",
    "group_inclusive_value",
    "top_inclusive_value",
    "conditional_product_shares",
    "conditional_subgroup_shares",
    "group_shares",
    "compute_shares",
]


@dataclass(frozen=True)
class InclusiveValues:
    """Inclusive values per subgroup, per group, and at the top level."""

    subgroup: np.ndarray
    group: np.ndarray
    top: float


@dataclass(frozen=True)
class ShareTable:
    """Joint, conditional, and aggregate shares for one market.

    Arrays are aligned to the hierarchy's canonical orders: ``joint`` and
    ``cond_product`` per product, ``cond_subgroup`` per flat subgroup,
    ``group`` per group. ``outside`` is the no-purchase share.

    The log of every field is carried alongside. The inversion routines
    work on the logs, which stay finite and accurate even when the shares
    themselves underflow (utilities on the order of +-700).
    """

    hierarchy: ChoiceHierarchy
    joint: np.ndarray
    cond_product: np.ndarray
    cond_subgroup: np.ndarray
    group: np.ndarray
    outside: float
    log_joint: np.ndarray
    log_cond_product: np.ndarray
    log_cond_subgroup: np.ndarray
    log_group: np.ndarray
    log_outside: float

    @classmethod
    def from_joint(cls, hierarchy: ChoiceHierarchy, joint, outside: float) -> "ShareTable":
        """Rebuild a full table (conditionals included) from observed joint shares.

        Intended for share data coming from outside the model, e.g. a CSV
        of observed market shares. All joint shares and the outside share
        must be strictly positive.

        Raises
        ------
        DegenerateShareError
            If any share is <= 0 or not finite.
        """
        from .errors import DegenerateShareError

        joint = np.asarray(joint, dtype=float)
        if joint.shape != (hierarchy.n_products,):
            raise DegenerateShareError(
                f"expected {hierarchy.n_products} joint shares, got shape {joint.shape}"
            )
        if not np.all(np.isfinite(joint)) or np.any(joint <= 0.0):
            raise DegenerateShareError("joint shares must be finite and strictly positive")
        outside = float(outside)
        if not np.isfinite(outside) or outside <= 0.0:
            raise DegenerateShareError(f"outside share {outside!r} must be strictly positive")

        n_sub = hierarchy.n_subgroups
        subgroup_sum = np.bincount(hierarchy.product_subgroup, weights=joint, minlength=n_sub)
        group_sum = np.bincount(hierarchy.product_group, weights=joint, minlength=hierarchy.n_groups)
        cond_product = joint / subgroup_sum[hierarchy.product_subgroup]
        cond_subgroup = subgroup_sum / group_sum[hierarchy.subgroup_group]
        return cls(
            hierarchy=hierarchy,
            joint=joint,
            cond_product=cond_product,
            cond_subgroup=cond_subgroup,
            group=group_sum,
            outside=outside,
            log_joint=np.log(joint),
            log_cond_product=np.log(cond_product),
            log_cond_subgroup=np.log(cond_subgroup),
            log_group=np.log(group_sum),
            log_outside=np.log(outside),
        )


def subgroup_inclusive_value(deltas, sigma1: float) -> float:
    """Inclusive value of one subgroup: (1-sigma1) * log sum exp(delta/(1-sigma1))."""
    scale = 1.0 - sigma1
    return scale * float(logsumexp(np.asarray(deltas, dtype=float) / scale))


def group_inclusive_value(subgroup_values, sigma2: float) -> float:
    """Inclusive value of one group from its subgroup inclusive values."""
    scale = 1.0 - sigma2
    return scale * float(logsumexp(np.asarray(subgroup_values, dtype=float) / scale))


def top_inclusive_value(group_values, include_outside: bool = True) -> float:
    """Top-level inclusive value, log sum exp over group inclusive values.

    The outside option contributes exp(0) = 1 when included.

    Raises
    ------
    EmptyChoiceSetError
        If there are no groups and the outside option is excluded.
    """
    values = np.asarray(group_values, dtype=float)
    if include_outside:
        values = np.append(values, 0.0)
    if values.size == 0:
        raise EmptyChoiceSetError("no groups and no outside option: nothing to choose")
    return float(logsumexp(values))


def _log_softmax(x: np.ndarray) -> np.ndarray:
    return x - logsumexp(x)


def _segment_logsumexp(x: np.ndarray, segment: np.ndarray, n_segments: int) -> np.ndarray:
    """Max-shifted log-sum-exp of x within each segment, all segments at once.

    Every segment is nonempty by hierarchy construction, so the per-segment
    peak is always finite for finite x.
    """
    peak = np.full(n_segments, -np.inf)
    np.maximum.at(peak, segment, x)
    total = np.bincount(segment, weights=np.exp(x - peak[segment]), minlength=n_segments)
    return peak + np.log(total)


def conditional_product_shares(deltas, sigma1: float) -> np.ndarray:
    """P(product | subgroup): softmax of delta/(1-sigma1) within one subgroup."""
    x = np.asarray(deltas, dtype=float) / (1.0 - sigma1)
    return np.exp(_log_softmax(x))


def conditional_subgroup_shares(subgroup_values, sigma2: float) -> np.ndarray:
    """P(subgroup | group): softmax of I_sub/(1-sigma2) within one group."""
    x = np.asarray(subgroup_values, dtype=float) / (1.0 - sigma2)
    return np.exp(_log_softmax(x))


def group_shares(group_values, include_outside: bool = True):
    """P(group) for every group plus the outside share.

    Returns ``(shares, outside_share)``; ``outside_share`` is 0.0 when the
    outside option is excluded.
    """
    values = np.asarray(group_values, dtype=float)
    top = top_inclusive_value(values, include_outside=include_outside)
    shares = np.exp(values - top)
    outside = float(np.exp(-top)) if include_outside else 0.0
    return shares, outside


def compute_shares(hierarchy: ChoiceHierarchy, delta, params: NestingParams):
    """All shares and inclusive values of a market at mean utilities ``delta``.

    Returns
    -------
    (ShareTable, InclusiveValues)
    """
    delta = as_delta_array(hierarchy, delta)
    a1 = 1.0 - params.sigma1
    a2 = 1.0 - params.sigma2

    x = delta / a1
    # log of the per-subgroup sum S = sum exp(delta/(1-sigma1)), i.e. I_sub/(1-sigma1)
    log_s = _segment_logsumexp(x, hierarchy.product_subgroup, hierarchy.n_subgroups)
    iv_sub = a1 * log_s

    y = iv_sub / a2
    log_t = _segment_logsumexp(y, hierarchy.subgroup_group, hierarchy.n_groups)
    iv_grp = a2 * log_t
    iv_top = float(logsumexp(np.append(iv_grp, 0.0)))

    log_cond_product = x - log_s[hierarchy.product_subgroup]
    log_cond_subgroup = y - log_t[hierarchy.subgroup_group]
    log_group = iv_grp - iv_top
    log_outside = -iv_top
    log_joint = (
        log_cond_product
        + log_cond_subgroup[hierarchy.product_subgroup]
        + log_group[hierarchy.product_group]
    )

    table = ShareTable(
        hierarchy=hierarchy,
        joint=np.exp(log_joint),
        cond_product=np.exp(log_cond_product),
        cond_subgroup=np.exp(log_cond_subgroup),
        group=np.exp(log_group),
        outside=float(np.exp(log_outside)),
        log_joint=log_joint,
        log_cond_product=log_cond_product,
        log_cond_subgroup=log_cond_subgroup,
        log_group=log_group,
        log_outside=log_outside,
    )
    return table, InclusiveValues(subgroup=iv_sub, group=iv_grp, top=iv_top)

"""Analytic derivatives of shares with respect to mean utilities.

The full Jacobian entry is assembled by the product rule

    d s_jhg / d delta_k = d s_{j|hg} * s_{h|g} * s_g
                        + s_{j|hg} * d s_{h|g} * s_g
                        + s_{j|hg} * s_{h|g} * d s_g

where each conditional derivative is one of three cases (same subgroup,
sibling subgroup in the same group, different group). The scalar case
functions below expose those pieces one entry at a time; ``full_jacobian``
evaluates the composed sum for all pairs at once in vectorized form.

Writing a = 1/(1-sigma1) and b = 1/(1-sigma2), the composed sum collapses
to a derivative of log shares,

    d log s_j / d delta_k = a*(1{j=k} - 1{same subgroup}*cp_k)
                          + b*(1{same subgroup}*cp_k - 1{same group}*w_k)
                          + 1{same group}*w_k - s_k

with cp the conditional product shares and w = cp * cs the share of a
product within its group. Every term is a share times a bounded factor,
so the assembly is overflow-safe whenever the shares are.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnknownGroupError, UnknownProductError, UnknownSubgroupError
from .hierarchy import OUTSIDE_ID, ChoiceHierarchy, NestingParams
from .shares import ShareTable, compute_shares

__all__ = [
    "ShareJacobian",
    "d_cond_product",
    "d_cond_subgroup",
    "d_group",
    "log_share_jacobian",
    "full_jacobian",
    "fd_jacobian",
    "max_relative_error",
]


@dataclass(frozen=True)
class ShareJacobian:
    """Derivatives of joint shares: matrix[j, k] = ds_j/ddelta_k.

    ``outside_row[k]`` holds ds_0/ddelta_k. Column sums of the matrix plus
    the outside entry vanish (shares always sum to one), and the matrix is
    symmetric: shares are the gradient of the top inclusive value, so this
    is a Hessian.
    """

    matrix: np.ndarray
    outside_row: np.ndarray


def _product_pos(table: ShareTable, product_id: str) -> int:
    try:
        return table.hierarchy.position(product_id)
    except KeyError:
        raise UnknownProductError(f"unknown product id {product_id!r}") from None


def _subgroup_pos(table: ShareTable, subgroup) -> int:
    keys = table.hierarchy.subgroup_keys
    if isinstance(subgroup, tuple):
        try:
            return keys.index(subgroup)
        except ValueError:
            raise UnknownSubgroupError(f"unknown subgroup {subgroup!r}") from None
    hits = [i for i, (_, sid) in enumerate(keys) if sid == subgroup]
    if len(hits) == 1:
        return hits[0]
    if not hits:
        raise UnknownSubgroupError(f"unknown subgroup id {subgroup!r}")
    raise UnknownSubgroupError(
        f"subgroup id {subgroup!r} appears in several groups; pass (group_id, subgroup_id)"
    )


def d_cond_product(table: ShareTable, j: str, k: str, params: NestingParams) -> float:
    """d s_{j|hg} / d delta_k, one entry of the within-subgroup case table.

    a*cp_j*(1-cp_j) for k = j, -a*cp_j*cp_k for k in the same subgroup,
    zero otherwise, with a = 1/(1-sigma1).
    """
    pj = _product_pos(table, j)
    pk = _product_pos(table, k)
    h = table.hierarchy
    if h.product_subgroup[pj] != h.product_subgroup[pk]:
        return 0.0
    a = 1.0 / (1.0 - params.sigma1)
    cp = table.cond_product
    if pj == pk:
        return float(a * cp[pj] * (1.0 - cp[pj]))
    return float(-a * cp[pj] * cp[pk])


def d_cond_subgroup(table: ShareTable, subgroup, k: str, params: NestingParams) -> float:
    """d s_{h|g} / d delta_k for subgroup h and product k.

    ``subgroup`` is a (group_id, subgroup_id) pair, or a bare subgroup id
    when unambiguous. b*cs_h*cp_k*(1-cs_h) when k lies in h, and
    -b*cs_h*cs_h'*cp_k when k lies in a sibling subgroup h' of the same
    group, with b = 1/(1-sigma2); zero when k belongs to another group.
    """
    sh = _subgroup_pos(table, subgroup)
    pk = _product_pos(table, k)
    h = table.hierarchy
    sk = h.product_subgroup[pk]
    if h.subgroup_group[sh] != h.subgroup_group[sk]:
        return 0.0
    b = 1.0 / (1.0 - params.sigma2)
    cs = table.cond_subgroup
    cp_k = table.cond_product[pk]
    if sk == sh:
        return float(b * cs[sh] * cp_k * (1.0 - cs[sh]))
    return float(-b * cs[sh] * cs[sk] * cp_k)


def d_group(table: ShareTable, group_id: str, k: str, params: NestingParams) -> float:
    """d s_g / d delta_k for group g and product k.

    s_k*(1-s_g) when k lies inside g and -s_g*s_k otherwise, with s_k the
    joint share of k. ``group_id`` may be OUTSIDE_ID: the outside option
    behaves as a group with inclusive value pinned at zero, giving
    ds_0/ddelta_k = -s_0*s_k.
    """
    pk = _product_pos(table, k)
    joint_k = table.joint[pk]
    if group_id == OUTSIDE_ID:
        return float(-table.outside * joint_k)
    h = table.hierarchy
    try:
        g = h.group_ids.index(group_id)
    except ValueError:
        raise UnknownGroupError(f"unknown group id {group_id!r}") from None
    gs = table.group[g]
    if h.product_group[pk] == g:
        return float(joint_k * (1.0 - gs))
    return float(-gs * joint_k)


def log_share_jacobian(table: ShareTable, params: NestingParams) -> np.ndarray:
    """Jacobian of log joint shares: entry (j, k) = d log s_j / d delta_k.

    Entries are O(1/(1-sigma)) regardless of how small the shares are,
    which makes this the right operator for Newton steps on log residuals;
    the share-level Jacobian is ``joint[:, None]`` times this matrix.
    """
    h = table.hierarchy
    a = 1.0 / (1.0 - params.sigma1)
    b = 1.0 / (1.0 - params.sigma2)
    cp = table.cond_product
    w = cp * table.cond_subgroup[h.product_subgroup]
    same_sub = h.product_subgroup[:, None] == h.product_subgroup[None, :]
    same_grp = h.product_group[:, None] == h.product_group[None, :]
    n = h.n_products
    return (
        a * (np.eye(n) - same_sub * cp[None, :])
        + b * (same_sub * cp[None, :] - same_grp * w[None, :])
        + same_grp * w[None, :]
        - table.joint[None, :]
    )


def full_jacobian(hierarchy: ChoiceHierarchy, delta, params: NestingParams) -> ShareJacobian:
    """Analytic ds/ddelta for every inside product plus the outside row."""
    table, _ = compute_shares(hierarchy, delta, params)
    rel = log_share_jacobian(table, params)
    return ShareJacobian(
        matrix=table.joint[:, None] * rel,
        outside_row=-table.outside * table.joint,
    )


def fd_jacobian(
    hierarchy: ChoiceHierarchy, delta, params: NestingParams, step: float = 1e-6
) -> ShareJacobian:
    """Central-difference approximation (s(delta+h e_k) - s(delta-h e_k)) / 2h."""
    delta = np.asarray(delta, dtype=float) if not hasattr(delta, "values") else delta.values
    n = hierarchy.n_products
    matrix = np.empty((n, n))
    outside_row = np.empty(n)
    for k in range(n):
        up = delta.copy()
        up[k] += step
        down = delta.copy()
        down[k] -= step
        table_up, _ = compute_shares(hierarchy, up, params)
        table_down, _ = compute_shares(hierarchy, down, params)
        matrix[:, k] = (table_up.joint - table_down.joint) / (2.0 * step)
        outside_row[k] = (table_up.outside - table_down.outside) / (2.0 * step)
    return ShareJacobian(matrix=matrix, outside_row=outside_row)


def max_relative_error(
    analytic: ShareJacobian,
    fd: ShareJacobian,
    row_scale=None,
    floor: float = 1e-12,
) -> float:
    """Worst per-entry relative disagreement between two Jacobians.

    Each entry is compared against max(|analytic|, |fd|, floor). Central
    differences only resolve an entry down to roughly eps*share/step, so
    entries whose true magnitude sits below that are pure roundoff in the
    FD table; passing ``row_scale`` (the share level of each row, outside
    last) additionally floors the denominator at the row's own scale so
    such entries are judged against the size of the row they live in.
    """
    a = np.vstack([analytic.matrix, analytic.outside_row])
    f = np.vstack([fd.matrix, fd.outside_row])
    den = np.maximum(np.maximum(np.abs(a), np.abs(f)), floor)
    if row_scale is not None:
        den = np.maximum(den, np.asarray(row_scale, dtype=float)[:, None])
    return float(np.max(np.abs(a - f) / den))

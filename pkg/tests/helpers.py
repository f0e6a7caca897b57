"""Shared instance builders and independent oracles for the test suite."""

import numpy as np
from scipy.special import logsumexp

from hierlogit import build_hierarchy, validate_params


def random_tree(rng, max_groups=3, max_subgroups=3, max_products=4):
    """Ragged random tree: per-group subgroup counts and per-subgroup
    product counts are drawn independently, so most trees are unbalanced."""
    n_groups = int(rng.integers(1, max_groups + 1))
    rows = []
    for g in range(n_groups):
        n_sub = int(rng.integers(1, max_subgroups + 1))
        for h in range(n_sub):
            n_prod = int(rng.integers(1, max_products + 1))
            for p in range(n_prod):
                rows.append((f"g{g}", f"h{g}.{h}", f"p{g}.{h}.{p}"))
    return build_hierarchy(rows)


def random_instance(rng, dlo=-10.0, dhi=10.0, smax=0.95, **tree_kw):
    tree = random_tree(rng, **tree_kw)
    delta = rng.uniform(dlo, dhi, tree.n_products)
    params = validate_params(rng.uniform(0.0, smax), rng.uniform(0.0, smax))
    return tree, delta, params


def balanced_tree(n_groups, n_subgroups, n_products):
    rows = [
        (f"g{g}", f"h{g}.{h}", f"p{g}.{h}.{p}")
        for g in range(n_groups)
        for h in range(n_subgroups)
        for p in range(n_products)
    ]
    return build_hierarchy(rows)


def one_level_nested_shares(delta, sigma, nest_of, n_nests):
    """Independent one-level nested logit evaluator (outside option at 0).

    Used as the collapse oracle: the two-level model must reduce to this
    when the nesting parameters coincide or the group level is inert.
    """
    delta = np.asarray(delta, dtype=float)
    a = 1.0 - sigma
    x = delta / a
    log_sum = np.array([logsumexp(x[nest_of == k]) for k in range(n_nests)])
    iv = a * log_sum
    top = logsumexp(np.append(iv, 0.0))
    joint = np.exp(x - log_sum[nest_of] + iv[nest_of] - top)
    return joint, float(np.exp(-top))


def plain_logit_shares(delta):
    delta = np.asarray(delta, dtype=float)
    top = logsumexp(np.append(delta, 0.0))
    return np.exp(delta - top), float(np.exp(-top))


def brute_force_shares(tree, delta, sigma1, sigma2):
    """Plain exponential-ratio evaluation of the nested share formulas.

    No log-sum-exp anywhere; only valid for moderate utilities, which is
    the point: it is an independent check on the log-space kernel.
    """
    delta = np.asarray(delta, dtype=float)
    a1 = 1.0 - sigma1
    a2 = 1.0 - sigma2
    sub_sum = np.array(
        [np.exp(delta[idx] / a1).sum() for idx in tree.products_in_subgroup]
    )
    iv_sub = a1 * np.log(sub_sum)
    grp_sum = np.array(
        [
            np.exp(iv_sub[tree.subgroup_group == g] / a2).sum()
            for g in range(tree.n_groups)
        ]
    )
    iv_grp = a2 * np.log(grp_sum)
    denom = 1.0 + np.exp(iv_grp).sum()
    joint = np.empty(tree.n_products)
    for j in range(tree.n_products):
        si = tree.product_subgroup[j]
        gi = tree.product_group[j]
        cp = np.exp(delta[j] / a1) / sub_sum[si]
        cs = np.exp(iv_sub[si] / a2) / grp_sum[gi]
        gs = np.exp(iv_grp[gi]) / denom
        joint[j] = cp * cs * gs
    return joint, 1.0 / denom

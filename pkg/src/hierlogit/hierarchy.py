"""Two-level choice tree (market -> groups -> subgroups -> products) and model parameters.

The outside option is never stored as a product: it is an implicit extra
group whose inclusive value is fixed at zero by every consumer of the tree.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateProductError, EmptyInputError, OutOfDomainError

#: Reserved id used for the outside option in files and derivative queries.
OUTSIDE_ID = "_outside"


@dataclass(frozen=True)
class NestingParams:
    """Nesting parameters (sigma1, sigma2), each in [0, 1).

    ``ordering_ok`` is True when sigma2 <= sigma1, the ordering required by
    the nested (simultaneous) interpretation of the model. sigma2 > sigma1
    is still a valid sequential model, so it is flagged rather than
    rejected; strict callers can check the flag.
    """

    sigma1: float
    sigma2: float
    ordering_ok: bool


def validate_params(sigma1: float, sigma2: float) -> NestingParams:
    """Check both nesting parameters against the half-open domain [0, 1).

    sigma = 1 would zero out the scale 1 - sigma used in every exponent,
    so the boundary is excluded rather than special-cased.

    Raises
    ------
    OutOfDomainError
        If either parameter is outside [0, 1) or not finite.
    """
    for name, value in (("sigma1", sigma1), ("sigma2", sigma2)):
        value = float(value)
        if not 0.0 <= value < 1.0:
            raise OutOfDomainError(f"{name}={value!r} must lie in [0, 1)")
    return NestingParams(float(sigma1), float(sigma2), ordering_ok=float(sigma2) <= float(sigma1))


@dataclass(frozen=True)
class GroupNode:
    """One group: its id and an ordered list of (subgroup_id, product_ids)."""

    group_id: str
    subgroups: tuple


class ChoiceHierarchy:
    """Immutable two-level choice tree with flat index arrays.

    Products, subgroups, and groups are numbered in first-appearance order
    of the input rows, so share vectors and Jacobian rows have a stable,
    reproducible layout. Instances are safe to share across threads.

    Attributes
    ----------
    groups : tuple of GroupNode
    market_id : str
    products : tuple of str
        Product ids in canonical (first-appearance) order; all arrays and
        utility vectors are aligned to this order.
    product_index : dict
        product_id -> (group_id, subgroup_id, position within subgroup).
    subgroup_keys : tuple of (group_id, subgroup_id)
        Flat enumeration of subgroups.
    group_ids : tuple of str
    product_subgroup, product_group : int arrays over products
        Flat subgroup/group index of each product.
    subgroup_group : int array over subgroups
        Flat group index of each subgroup.
    """

    def __init__(self, groups, market_id=""):
        self.groups = tuple(groups)
        self.market_id = market_id

        products = []
        product_index = {}
        subgroup_keys = []
        group_ids = []
        prod_sub = []
        prod_grp = []
        sub_grp = []
        for gi, node in enumerate(self.groups):
            group_ids.append(node.group_id)
            for subgroup_id, product_ids in node.subgroups:
                si = len(subgroup_keys)
                subgroup_keys.append((node.group_id, subgroup_id))
                sub_grp.append(gi)
                for pos, pid in enumerate(product_ids):
                    product_index[pid] = (node.group_id, subgroup_id, pos)
                    products.append(pid)
                    prod_sub.append(si)
                    prod_grp.append(gi)

        self.products = tuple(products)
        self.product_index = product_index
        self.subgroup_keys = tuple(subgroup_keys)
        self.group_ids = tuple(group_ids)
        self.product_subgroup = np.asarray(prod_sub, dtype=np.intp)
        self.product_group = np.asarray(prod_grp, dtype=np.intp)
        self.subgroup_group = np.asarray(sub_grp, dtype=np.intp)
        self._position = {pid: i for i, pid in enumerate(products)}
        # product positions per subgroup; row order within the tree is not
        # necessarily contiguous, so keep explicit index arrays
        self.products_in_subgroup = tuple(
            np.flatnonzero(self.product_subgroup == si) for si in range(len(subgroup_keys))
        )

    @property
    def n_products(self):
        return len(self.products)

    @property
    def n_subgroups(self):
        return len(self.subgroup_keys)

    @property
    def n_groups(self):
        return len(self.groups)

    def position(self, product_id: str) -> int:
        """Canonical position of a product id."""
        return self._position[product_id]

    def __repr__(self):
        return (
            f"ChoiceHierarchy(market_id={self.market_id!r}, groups={self.n_groups}, "
            f"subgroups={self.n_subgroups}, products={self.n_products})"
        )


@dataclass(frozen=True)
class UtilityVector:
    """Mean utilities, one per inside product, aligned to hierarchy order."""

    values: np.ndarray = field()

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(values)):
            raise OutOfDomainError("utility values must all be finite")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)


def build_hierarchy(rows, market_id: str = "") -> ChoiceHierarchy:
    """Build a ChoiceHierarchy from (group_id, subgroup_id, product_id) rows.

    Ordering of groups, subgroups, and products follows first appearance in
    ``rows``, so identical inputs always produce identical trees.

    Raises
    ------
    EmptyInputError
        If ``rows`` is empty.
    DuplicateProductError
        If a product id occurs twice anywhere in the market.
    """
    rows = list(rows)
    if not rows:
        raise EmptyInputError("cannot build a hierarchy from zero rows")

    seen = set()
    tree: dict = {}
    for group_id, subgroup_id, product_id in rows:
        if product_id == OUTSIDE_ID:
            raise DuplicateProductError(
                f"product id {OUTSIDE_ID!r} is reserved for the outside option"
            )
        if product_id in seen:
            raise DuplicateProductError(f"product id {product_id!r} appears more than once")
        seen.add(product_id)
        tree.setdefault(group_id, {}).setdefault(subgroup_id, []).append(product_id)

    groups = tuple(
        GroupNode(group_id, tuple((sid, tuple(pids)) for sid, pids in subs.items()))
        for group_id, subs in tree.items()
    )
    return ChoiceHierarchy(groups, market_id=market_id)


def as_delta_array(hierarchy: ChoiceHierarchy, delta) -> np.ndarray:
    """Coerce a UtilityVector or array-like to a validated float array."""
    values = delta.values if isinstance(delta, UtilityVector) else np.asarray(delta, dtype=float)
    values = np.atleast_1d(values)
    if values.shape != (hierarchy.n_products,):
        raise OutOfDomainError(
            f"expected {hierarchy.n_products} utilities, got shape {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise OutOfDomainError("utility values must all be finite")
    return values.astype(float, copy=False)

"""Binary CART trees (Gini) that keep per-node class counts.

The counts n0/n1 on every node, not just the leaves, are what the
calibrators in ``treesmooth.regularize`` work from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

import numpy as np

from treesmooth.dataset import Dataset
from treesmooth.errors import InvalidInputError, ModelSchemaError
from treesmooth.seeding import make_rng


# ==================== TYPES ====================

@dataclass(eq=False)
class TreeNode:
    n0: int
    n1: int
    split_feature: int | None = None
    split_threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    leaf_value: float | None = None
    # only set on the root
    n_features: int | None = None

    def __post_init__(self):
        if self.leaf_value is None:
            self.leaf_value = self.mean_response

    @property
    def n_samples(self) -> int:
        return self.n0 + self.n1

    @property
    def mean_response(self) -> float:
        return self.n1 / (self.n0 + self.n1)

    @property
    def is_leaf(self) -> bool:
        return self.split_feature is None


@dataclass
class TreeConfig:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    # int, "sqrt" (ceil of the square root), or None / "all"
    max_features: int | str | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.min_samples_leaf < 1:
            raise InvalidInputError("min_samples_leaf must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidInputError("max_depth must be non-negative or None")
        if isinstance(self.max_features, str) and self.max_features not in ("sqrt", "all"):
            raise InvalidInputError(f"unknown max_features {self.max_features!r}")
        if isinstance(self.max_features, int) and self.max_features < 1:
            raise InvalidInputError("max_features must be at least 1")

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features is None or self.max_features == "all":
            return n_features
        if self.max_features == "sqrt":
            return max(1, math.ceil(math.sqrt(n_features)))
        return min(int(self.max_features), n_features)

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "TreeConfig":
        return cls(
            max_depth=doc.get("max_depth"),
            min_samples_leaf=int(doc.get("min_samples_leaf", 1)),
            max_features=doc.get("max_features"),
            rng_seed=int(doc.get("rng_seed", 0)),
        )


# ==================== FITTING ====================

def _best_split(
    X: np.ndarray, y: np.ndarray, features: Sequence[int], min_leaf: int
) -> tuple[int, float] | None:
    """Lowest weighted Gini over ``features``; ties go to lower feature, then threshold.

    Minimising n_l*gini_l + n_r*gini_r is the same as maximising
    (c0_l^2 + c1_l^2)/n_l + (c0_r^2 + c1_r^2)/n_r.
    """
    n = len(y)
    n1_total = int(y.sum())
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    admissible_size = (n_left >= min_leaf) & (n_right >= min_leaf)
    best: tuple[float, int, float] | None = None
    for feature in features:
        order = np.argsort(X[:, feature], kind="stable")
        xs = X[order, feature]
        valid = admissible_size & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        c1_left = np.cumsum(y[order])[:-1].astype(np.float64)
        c0_left = n_left - c1_left
        c1_right = n1_total - c1_left
        c0_right = n_right - c1_right
        purity = (c0_left**2 + c1_left**2) / n_left + (c0_right**2 + c1_right**2) / n_right
        purity = np.where(valid, purity, -np.inf)
        i = int(np.argmax(purity))
        if best is None or purity[i] > best[0]:
            threshold = (xs[i] + xs[i + 1]) / 2.0
            if threshold >= xs[i + 1]:
                threshold = float(xs[i])
            best = (float(purity[i]), int(feature), float(threshold))
    if best is None:
        return None
    return best[1], best[2]


def fit_tree(ds: Dataset, sample_indices: Sequence[int], cfg: TreeConfig) -> TreeNode:
    """Grow a tree on the rows ``sample_indices`` of ``ds`` (repeats allowed).

    A node becomes a leaf when it is pure, at max_depth, or has no admissible
    threshold. Gini never increases under a split, so any admissible split
    of an impure node is taken; this is what separates XOR patterns.
    """
    idx = np.asarray(sample_indices, dtype=np.int64)
    if idx.size == 0:
        raise InvalidInputError("cannot fit a tree on an empty index list")
    X = ds.features[idx]
    y = ds.labels[idx]
    n_features = ds.n_features
    n_candidates = cfg.resolve_max_features(n_features)
    rng = make_rng(cfg.rng_seed)
    min_leaf = cfg.min_samples_leaf

    def make_node(rows: np.ndarray) -> TreeNode:
        n1 = int(y[rows].sum())
        return TreeNode(n0=len(rows) - n1, n1=n1)

    all_rows = np.arange(len(idx))
    root = make_node(all_rows)
    root.n_features = n_features
    stack = [(root, all_rows, 0)]
    while stack:
        node, rows, depth = stack.pop()
        if node.n0 == 0 or node.n1 == 0:
            continue
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            continue
        if len(rows) < 2 * min_leaf:
            continue
        Xn, yn = X[rows], y[rows]
        if n_candidates < n_features:
            drawn = np.sort(rng.choice(n_features, size=n_candidates, replace=False))
            split = _best_split(Xn, yn, drawn, min_leaf)
            if split is None:
                # fall back on the undrawn features before giving up
                rest = np.setdiff1d(np.arange(n_features), drawn)
                split = _best_split(Xn, yn, rest, min_leaf)
        else:
            split = _best_split(Xn, yn, range(n_features), min_leaf)
        if split is None:
            continue
        feature, threshold = split
        goes_left = Xn[:, feature] <= threshold
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        node.split_feature = feature
        node.split_threshold = threshold
        node.left = make_node(left_rows)
        node.right = make_node(right_rows)
        stack.append((node.right, right_rows, depth + 1))
        stack.append((node.left, left_rows, depth + 1))
    return root


# ==================== TRAVERSAL ====================

def iter_nodes(root: TreeNode) -> Iterator[TreeNode]:
    """Pre-order walk."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)


def iter_leaves(root: TreeNode) -> Iterator[TreeNode]:
    return (node for node in iter_nodes(root) if node.is_leaf)


def tree_depth(root: TreeNode) -> int:
    deepest = 0
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        deepest = max(deepest, depth)
        if not node.is_leaf:
            stack.append((node.left, depth + 1))
            stack.append((node.right, depth + 1))
    return deepest


def _check_width(root: TreeNode, width: int) -> None:
    if root.n_features is not None and width != root.n_features:
        raise InvalidInputError(
            f"query has {width} features, tree was trained on {root.n_features}"
        )


def find_path(root: TreeNode, x: Sequence[float]) -> list[TreeNode]:
    """Nodes from the root to the leaf reached by ``x``; ties go left."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError("query must be a single feature vector")
    _check_width(root, x.shape[0])
    path = [root]
    node = root
    while not node.is_leaf:
        node = node.left if x[node.split_feature] <= node.split_threshold else node.right
        path.append(node)
    return path


def predict_proba_tree(root: TreeNode, x: Sequence[float]) -> float:
    return float(find_path(root, x)[-1].leaf_value)


def route_to_leaves(root: TreeNode, X: np.ndarray) -> np.ndarray:
    """Object array holding the leaf reached by every row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError("expected a 2-D feature matrix")
    _check_width(root, X.shape[1])
    leaves = np.empty(X.shape[0], dtype=object)
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if node.is_leaf:
            leaves[rows] = node
            continue
        goes_left = X[rows, node.split_feature] <= node.split_threshold
        stack.append((node.left, rows[goes_left]))
        stack.append((node.right, rows[~goes_left]))
    return leaves


def predict_proba_tree_batch(root: TreeNode, X: np.ndarray) -> np.ndarray:
    leaves = route_to_leaves(root, X)
    return np.fromiter((leaf.leaf_value for leaf in leaves), dtype=np.float64, count=len(leaves))


def validate_tree(root: TreeNode) -> None:
    """Raise InvalidInputError unless the count and shape invariants hold."""
    for node in iter_nodes(root):
        if node.n0 < 0 or node.n1 < 0 or node.n0 + node.n1 < 1:
            raise InvalidInputError(f"node counts ({node.n0}, {node.n1}) are not a sample")
        has_children = node.left is not None, node.right is not None
        if node.is_leaf:
            if any(has_children):
                raise InvalidInputError("leaf with children")
            continue
        if not all(has_children) or node.split_threshold is None:
            raise InvalidInputError("internal node missing a child or threshold")
        if node.split_feature < 0 or (root.n_features is not None and node.split_feature >= root.n_features):
            raise InvalidInputError(
                f"split feature {node.split_feature} outside [0, {root.n_features}) features"
            )
        if node.n0 != node.left.n0 + node.right.n0 or node.n1 != node.left.n1 + node.right.n1:
            raise InvalidInputError("internal node counts differ from the sum of its children")


# ==================== JSON ====================

def tree_to_dict(node: TreeNode) -> dict[str, Any]:
    return {
        "feature": node.split_feature,
        "threshold": node.split_threshold,
        "n0": node.n0,
        "n1": node.n1,
        "mean": node.mean_response,
        "leaf_value": node.leaf_value,
        "left": None if node.is_leaf else tree_to_dict(node.left),
        "right": None if node.is_leaf else tree_to_dict(node.right),
    }


_NODE_KEYS = {"feature", "threshold", "n0", "n1", "leaf_value", "left", "right"}


def tree_from_dict(doc: dict[str, Any], n_features: int | None = None) -> TreeNode:
    def build(part: Any) -> TreeNode:
        if not isinstance(part, dict) or not _NODE_KEYS <= part.keys():
            raise ModelSchemaError(f"tree node must be an object with keys {sorted(_NODE_KEYS)}")
        try:
            node = TreeNode(
                n0=int(part["n0"]),
                n1=int(part["n1"]),
                split_feature=None if part["feature"] is None else int(part["feature"]),
                split_threshold=None if part["threshold"] is None else float(part["threshold"]),
                leaf_value=float(part["leaf_value"]),
            )
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ModelSchemaError(f"bad tree node: {exc}") from exc
        if node.split_feature is not None:
            node.left = build(part["left"])
            node.right = build(part["right"])
        return node

    root = build(doc)
    root.n_features = n_features
    try:
        validate_tree(root)
    except InvalidInputError as exc:
        raise ModelSchemaError(str(exc)) from exc
    return root

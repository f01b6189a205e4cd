"""Post-hoc leaf calibration: Hierarchical Shrinkage and Beta-posterior smoothing.

Both calibrators only rewrite ``leaf_value``; splits, counts and
``mean_response`` stay as fitted.
"""

from __future__ import annotations

import copy
import dataclasses
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Iterable, Sequence

import numpy as np

from treesmooth.betafun import BetaParams, betaincinv
from treesmooth.cart import TreeNode
from treesmooth.errors import CalibrationError, DomainError, ModelSchemaError

if TYPE_CHECKING:
    from treesmooth.forest import FittedForest

logger = logging.getLogger(__name__)

KINDS = ("none", "hs", "beta")


# ==================== SPEC ====================

@dataclass(frozen=True)
class RegularizerSpec:
    kind: str = "none"
    lam: float | None = None
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown regularizer {self.kind!r}; expected one of {KINDS}")
        if (self.lam is not None) != (self.kind == "hs"):
            raise DomainError("lambda is required for hs and only for hs")
        if ((self.alpha is not None) or (self.beta is not None)) != (self.kind == "beta"):
            raise DomainError("alpha/beta are required for beta and only for beta")
        if self.kind == "hs" and self.lam < 0:
            raise DomainError(f"lambda must be non-negative, got {self.lam}")
        if self.kind == "beta":
            BetaParams(self.alpha, self.beta)

    @classmethod
    def none(cls) -> "RegularizerSpec":
        return cls("none")

    @classmethod
    def hs(cls, lam: float) -> "RegularizerSpec":
        return cls("hs", lam=float(lam))

    @classmethod
    def beta_prior(cls, alpha: float, beta: float) -> "RegularizerSpec":
        return cls("beta", alpha=float(alpha), beta=float(beta))

    @property
    def prior(self) -> BetaParams:
        return BetaParams(self.alpha, self.beta)

    def hyperparameters(self) -> dict[str, float]:
        if self.kind == "hs":
            return {"lambda": self.lam}
        if self.kind == "beta":
            return {"alpha": self.alpha, "beta": self.beta}
        return {}

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "lambda": self.lam, "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RegularizerSpec":
        try:
            kind = doc.get("kind", "none")
            lam = doc.get("lambda")
            alpha, beta = doc.get("alpha"), doc.get("beta")
            return cls(
                kind,
                lam=None if lam is None else float(lam),
                alpha=None if alpha is None else float(alpha),
                beta=None if beta is None else float(beta),
            )
        except (AttributeError, TypeError, ValueError) as exc:
            raise ModelSchemaError(f"bad calibration block: {exc}") from exc

    def __str__(self) -> str:
        if self.kind == "hs":
            return f"hs(lambda={self.lam:g})"
        if self.kind == "beta":
            return f"beta(alpha={self.alpha:g}, beta={self.beta:g})"
        return "none"


# ==================== HIERARCHICAL SHRINKAGE ====================

def hs_calibrate(root: TreeNode, lam: float) -> None:
    """Damp every root-to-leaf increment by 1 + lam / N(parent)."""
    if lam < 0:
        raise DomainError(f"lambda must be non-negative, got {lam}")
    stack = [(root, root.mean_response)]
    while stack:
        node, value = stack.pop()
        if node.is_leaf:
            # convex combination of node means; roundoff can step outside [0, 1]
            node.leaf_value = min(max(value, 0.0), 1.0)
            continue
        shrink = 1.0 + lam / node.n_samples
        for child in (node.left, node.right):
            stack.append((child, value + (child.mean_response - node.mean_response) / shrink))


# ==================== BETA POSTERIOR ====================

def beta_posterior_for_path(path: Sequence[TreeNode], prior: BetaParams) -> BetaParams:
    """Prior plus the class counts of every node on the path, root included.

    alpha collects class-0 counts and beta class-1 counts.
    """
    return BetaParams(
        prior.alpha + sum(node.n0 for node in path),
        prior.beta + sum(node.n1 for node in path),
    )


def _leaf_path_counts(roots: Iterable[TreeNode]) -> tuple[list[TreeNode], np.ndarray, np.ndarray]:
    """Every leaf with the class counts summed along its root-to-leaf path."""
    leaves, sum0, sum1 = [], [], []
    for root in roots:
        stack = [(root, root.n0, root.n1)]
        while stack:
            node, s0, s1 = stack.pop()
            if node.is_leaf:
                leaves.append(node)
                sum0.append(s0)
                sum1.append(s1)
                continue
            for child in (node.left, node.right):
                stack.append((child, s0 + child.n0, s1 + child.n1))
    return leaves, np.asarray(sum0, dtype=np.float64), np.asarray(sum1, dtype=np.float64)


def class1_probability(alpha_post, beta_post) -> np.ndarray:
    """Leaf class-1 probability from posterior parameters.

    The PPF is evaluated at the posterior mean quantile on the class-0
    axis (alpha tracks class 0), so the class-1 probability is one minus it.
    """
    alpha_post = np.asarray(alpha_post, dtype=np.float64)
    beta_post = np.asarray(beta_post, dtype=np.float64)
    pairs = np.stack([alpha_post.ravel(), beta_post.ravel()], axis=1)
    unique, inverse = np.unique(pairs, axis=0, return_inverse=True)
    raw = betaincinv(unique[:, 0] / (unique[:, 0] + unique[:, 1]), unique[:, 0], unique[:, 1])
    return (1.0 - raw)[np.ravel(inverse)].reshape(alpha_post.shape)


def _beta_calibrate_many(roots: Iterable[TreeNode], prior: BetaParams) -> None:
    leaves, sum0, sum1 = _leaf_path_counts(roots)
    if not leaves:
        return
    values = class1_probability(prior.alpha + sum0, prior.beta + sum1)
    for leaf, value in zip(leaves, values):
        leaf.leaf_value = float(value)


def beta_calibrate(root: TreeNode, prior: BetaParams) -> None:
    """Set each leaf to 1 - PPF(mean of posterior | posterior)."""
    _beta_calibrate_many([root], prior)


# ==================== DISPATCH ====================

def reset_leaves(roots: Iterable[TreeNode]) -> None:
    for root in roots:
        stack = [root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                node.leaf_value = node.mean_response
            else:
                stack.extend((node.left, node.right))


def calibrate_trees(roots: Sequence[TreeNode], spec: RegularizerSpec) -> None:
    """Overwrite leaf values of ``roots`` in place according to ``spec``.

    Every call starts from the fitted leaf means, so one working copy of a
    forest can be recalibrated for many grid points in turn.
    """
    if spec.kind == "none":
        reset_leaves(roots)
    elif spec.kind == "hs":
        for root in roots:
            hs_calibrate(root, spec.lam)
    else:
        _beta_calibrate_many(roots, spec.prior)
    logger.debug("calibrated %d trees with %s", len(roots), spec)


def apply(forest: "FittedForest", spec: RegularizerSpec) -> "FittedForest":
    """Calibrated copy of a freshly fitted forest; the input is left untouched."""
    if forest.calibration.kind != "none":
        raise CalibrationError(
            f"forest is already calibrated with {forest.calibration}; calibrate a fresh fit"
        )
    trees = copy.deepcopy(forest.trees)
    calibrate_trees(trees, spec)
    return dataclasses.replace(forest, trees=trees, calibration=spec)

"""CART decision trees with full per-inference path capture.

Training uses Gini impurity with midpoint thresholds between consecutive
distinct feature values. Everything is deterministic: split ties break on
lowest feature index then lowest threshold, leaf ties on lowest class index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, FeatureSchema
from ._util import format_sig

TREE_FORMAT = "dtexplain-tree"
TREE_VERSION = 1


@dataclass(frozen=True)
class TreeNode:
    id: int
    class_counts: tuple[int, ...]
    feature_index: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def __post_init__(self):
        internal = (self.feature_index, self.threshold, self.left, self.right)
        if self.is_leaf:
            if any(v is not None for v in internal):
                raise ValueError("leaf node must not carry split fields")
        else:
            if any(v is None for v in internal):
                raise ValueError("internal node needs feature, threshold, and both children")
            if not math.isfinite(self.threshold):
                raise ValueError("threshold must be finite")
        if sum(self.class_counts) <= 0:
            raise ValueError("node class_counts must sum to a positive count")

    def majority_class(self) -> int:
        return self.class_counts.index(max(self.class_counts))


@dataclass(frozen=True)
class DecisionTree:
    schema: FeatureSchema
    root: int
    nodes: dict[int, TreeNode]
    max_depth: int
    criterion: str = "gini"
    seed: int | None = None
    train_size: int | None = None
    feature_domains: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.root not in self.nodes:
            raise ValueError("not a tree: root node missing")
        seen: set[int] = set()
        max_depth_seen = 0
        stack = [(self.root, 0)]
        while stack:
            nid, depth = stack.pop()
            if nid in seen:
                raise ValueError("not a tree: node reachable more than once")
            if nid not in self.nodes:
                raise ValueError(f"not a tree: missing node {nid}")
            seen.add(nid)
            max_depth_seen = max(max_depth_seen, depth)
            node = self.nodes[nid]
            if not node.is_leaf:
                for child in (node.left, node.right):
                    stack.append((child, depth + 1))
                child_sum = tuple(
                    a + b
                    for a, b in zip(
                        self.nodes_safe(node.left).class_counts,
                        self.nodes_safe(node.right).class_counts,
                    )
                )
                if child_sum != node.class_counts:
                    raise ValueError("children class_counts do not sum to parent's")
                if node.feature_index >= self.schema.n_features:
                    raise ValueError("split feature index out of schema range")
        if seen != set(self.nodes):
            raise ValueError("not a tree: unreachable nodes present")
        if max_depth_seen > self.max_depth:
            raise ValueError("tree deeper than declared max_depth")

    def nodes_safe(self, nid: int) -> TreeNode:
        try:
            return self.nodes[nid]
        except KeyError:
            raise ValueError(f"not a tree: missing node {nid}") from None

    def node_depth(self, node_id: int) -> int:
        depth_of = {self.root: 0}
        stack = [self.root]
        while stack:
            nid = stack.pop()
            node = self.nodes[nid]
            if not node.is_leaf:
                for child in (node.left, node.right):
                    depth_of[child] = depth_of[nid] + 1
                    stack.append(child)
        return depth_of[node_id]


@dataclass(frozen=True)
class PathStep:
    node_id: int
    feature_index: int
    threshold: float
    branch: str  # "left" | "right"
    feature_value: float
    class_counts: tuple[int, ...]


@dataclass(frozen=True)
class DecisionPath:
    steps: tuple[PathStep, ...]
    leaf_id: int
    prediction: int

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(s.node_id for s in self.steps) + (self.leaf_id,)

    @property
    def length(self) -> int:
        return len(self.steps) + 1


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    return 1.0 - float(((counts / n) ** 2).sum())


def _best_split(
    x: np.ndarray, y: np.ndarray, n_classes: int, min_samples_leaf: int
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, gain) by weighted Gini decrease, or None.

    Ties keep the lowest feature index, then the lowest threshold.
    """
    n = len(y)
    parent_counts = np.bincount(y, minlength=n_classes)
    g_parent = _gini(parent_counts)
    best: tuple[int, float, float] | None = None
    best_gain = 0.0
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        sv = x[order, j]
        sy = y[order]
        boundaries = np.flatnonzero(sv[:-1] != sv[1:])
        if len(boundaries) == 0:
            continue
        one_hot = np.zeros((n, n_classes))
        one_hot[np.arange(n), sy] = 1.0
        cum = np.cumsum(one_hot, axis=0)
        left_counts = cum[boundaries]
        n_left = boundaries + 1
        n_right = n - n_left
        ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
        if not ok.any():
            continue
        right_counts = parent_counts - left_counts
        g_left = 1.0 - ((left_counts / n_left[:, None]) ** 2).sum(axis=1)
        g_right = 1.0 - ((right_counts / n_right[:, None]) ** 2).sum(axis=1)
        gains = g_parent - (n_left / n) * g_left - (n_right / n) * g_right
        gains[~ok] = -np.inf
        pos = int(np.argmax(gains))  # first max = lowest threshold among ties
        gain = float(gains[pos])
        if gain > best_gain:
            b = boundaries[pos]
            threshold = (sv[b] + sv[b + 1]) / 2.0
            best = (j, float(threshold), gain)
            best_gain = gain
    return best


def train(
    train_set: Dataset,
    max_depth: int,
    min_samples_leaf: int = 1,
    seed: int = 0,
) -> DecisionTree:
    """Grow a depth-limited CART tree on the training set.

    Stops at max_depth, pure nodes, or when no split has positive gain.
    A single-class training set yields a single leaf.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    n_classes = train_set.schema.n_classes
    nodes: dict[int, TreeNode] = {}
    counter = [0]

    def build(idx: np.ndarray, depth: int) -> int:
        nid = counter[0]
        counter[0] += 1
        y = train_set.y[idx]
        counts = tuple(np.bincount(y, minlength=n_classes).tolist())
        split_choice = None
        if depth < max_depth and len(set(y.tolist())) > 1:
            split_choice = _best_split(train_set.x[idx], y, n_classes, min_samples_leaf)
        if split_choice is None:
            nodes[nid] = TreeNode(nid, counts)
            return nid
        j, t, _ = split_choice
        left_mask = train_set.x[idx, j] <= t
        left_id = build(idx[left_mask], depth + 1)
        right_id = build(idx[~left_mask], depth + 1)
        nodes[nid] = TreeNode(nid, counts, j, t, left_id, right_id)
        return nid

    root = build(np.arange(len(train_set)), 0)
    return DecisionTree(
        schema=train_set.schema,
        root=root,
        nodes=nodes,
        max_depth=max_depth,
        seed=seed,
        train_size=len(train_set),
        feature_domains=train_set.domains(),
    )


def predict(tree: DecisionTree, values) -> DecisionPath:
    """Traverse the tree (left iff value <= threshold), capturing the full path."""
    vals = [float(v) for v in values]
    if len(vals) != tree.schema.n_features:
        raise ValueError("input length does not match schema feature count")
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("input contains non-finite values")
    steps: list[PathStep] = []
    nid = tree.root
    node = tree.nodes[nid]
    while not node.is_leaf:
        v = vals[node.feature_index]
        branch = "left" if v <= node.threshold else "right"
        steps.append(
            PathStep(nid, node.feature_index, node.threshold, branch, v, node.class_counts)
        )
        nid = node.left if branch == "left" else node.right
        node = tree.nodes[nid]
    return DecisionPath(tuple(steps), nid, node.majority_class())


def validate_path(tree: DecisionTree, path: DecisionPath) -> None:
    """Check a path actually traces through this tree; raise if not."""
    nid = tree.root
    for step in path.steps:
        node = tree.nodes.get(nid)
        if node is None or node.is_leaf or step.node_id != nid:
            raise ValueError("path does not match tree")
        if step.feature_index != node.feature_index or step.threshold != node.threshold:
            raise ValueError("path does not match tree")
        expected = "left" if step.feature_value <= node.threshold else "right"
        if step.branch != expected:
            raise ValueError("path branch inconsistent with feature value")
        nid = node.left if step.branch == "left" else node.right
    leaf = tree.nodes.get(nid)
    if leaf is None or not leaf.is_leaf or path.leaf_id != nid:
        raise ValueError("path does not match tree")
    if path.prediction != leaf.majority_class():
        raise ValueError("path prediction inconsistent with leaf")


def impurity_decrease(tree: DecisionTree, node_id: int) -> float:
    """Weighted Gini decrease at an internal node."""
    node = tree.nodes[node_id]
    if node.is_leaf:
        raise ValueError("impurity decrease undefined for a leaf node")
    parent = np.array(node.class_counts, dtype=float)
    left = np.array(tree.nodes[node.left].class_counts, dtype=float)
    right = np.array(tree.nodes[node.right].class_counts, dtype=float)
    n = parent.sum()
    return _gini(parent) - (left.sum() / n) * _gini(left) - (right.sum() / n) * _gini(right)


def top_gain_steps(path: DecisionPath, tree: DecisionTree, k: int) -> list[int]:
    """Indices of the k path steps with the largest impurity decrease.

    Descending by gain; ties keep the earlier step. A leaf-only path gives [].
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    gains = [impurity_decrease(tree, s.node_id) for s in path.steps]
    order = sorted(range(len(gains)), key=lambda i: (-gains[i], i))
    return order[: min(k, len(gains))]


def to_json(tree: DecisionTree) -> dict:
    """Versioned, schema-embedded document for lossless persistence."""
    node_docs = []
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        node_docs.append(
            {
                "id": node.id,
                "class_counts": list(node.class_counts),
                "feature_index": node.feature_index,
                "threshold": node.threshold,
                "left": node.left,
                "right": node.right,
            }
        )
    return {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "schema": tree.schema.to_dict(),
        "root": tree.root,
        "max_depth": tree.max_depth,
        "criterion": tree.criterion,
        "seed": tree.seed,
        "train_size": tree.train_size,
        "feature_domains": [list(d) for d in tree.feature_domains]
        if tree.feature_domains is not None
        else None,
        "nodes": node_docs,
    }


def from_json(doc: dict) -> DecisionTree:
    if not isinstance(doc, dict):
        raise ValueError("malformed tree document")
    if doc.get("format") != TREE_FORMAT:
        raise ValueError("malformed tree document: unknown format")
    if doc.get("version") != TREE_VERSION:
        raise ValueError(f"unsupported tree document version: {doc.get('version')!r}")
    for key in ("schema", "root", "max_depth", "nodes"):
        if key not in doc:
            raise ValueError(f"malformed tree document: missing {key!r}")
    schema = FeatureSchema.from_dict(doc["schema"])
    nodes = {}
    for nd in doc["nodes"]:
        try:
            node = TreeNode(
                id=nd["id"],
                class_counts=tuple(nd["class_counts"]),
                feature_index=nd.get("feature_index"),
                threshold=nd.get("threshold"),
                left=nd.get("left"),
                right=nd.get("right"),
            )
        except (KeyError, TypeError) as e:
            raise ValueError(f"malformed tree document: bad node: {e}") from e
        if node.id in nodes:
            raise ValueError("not a tree: duplicate node id")
        nodes[node.id] = node
    domains = doc.get("feature_domains")
    return DecisionTree(
        schema=schema,
        root=doc["root"],
        nodes=nodes,
        max_depth=doc["max_depth"],
        criterion=doc.get("criterion", "gini"),
        seed=doc.get("seed"),
        train_size=doc.get("train_size"),
        feature_domains=tuple((float(a), float(b)) for a, b in domains)
        if domains is not None
        else None,
    )


def to_text(tree: DecisionTree) -> str:
    """Deterministic indented rendering, one line per node, left before right."""
    lines: list[str] = []

    def walk(nid: int, depth: int) -> None:
        node = tree.nodes[nid]
        indent = "  " * depth
        if node.is_leaf:
            total = sum(node.class_counts)
            counts = ", ".join(
                f"{name}={c}" for name, c in zip(tree.schema.classes, node.class_counts)
            )
            label = tree.schema.classes[node.majority_class()]
            lines.append(f"{indent}class: {label} (n={total}: {counts})")
        else:
            name = tree.schema.features[node.feature_index].name
            lines.append(f"{indent}{name} <= {format_sig(node.threshold)}")
            walk(node.left, depth + 1)
            walk(node.right, depth + 1)

    walk(tree.root, 0)
    return "\n".join(lines)


def accuracy(tree: DecisionTree, dataset: Dataset) -> float:
    correct = sum(
        predict(tree, dataset.x[i]).prediction == int(dataset.y[i]) for i in range(len(dataset))
    )
    return correct / len(dataset)

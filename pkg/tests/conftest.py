from __future__ import annotations

import numpy as np
import pytest

from dtexplain.data import Dataset, Feature, FeatureSchema, builtin_iris, split
from dtexplain.tree import DecisionTree, TreeNode, train


@pytest.fixture(scope="session")
def iris():
    return builtin_iris()


@pytest.fixture(scope="session")
def iris_split(iris):
    return split(iris, 0.3, seed=7, stratified=True)


@pytest.fixture(scope="session")
def iris_tree(iris_split):
    train_set, _ = iris_split
    return train(train_set, max_depth=4, seed=7)


def make_schema(n_features: int, n_classes: int = 2, unit: str | None = None) -> FeatureSchema:
    return FeatureSchema(
        features=tuple(Feature(f"f{j}", f"synthetic feature {j}", unit) for j in range(n_features)),
        classes=tuple(f"c{k}" for k in range(n_classes)),
        target_column="label",
    )


def make_dataset(x, y, schema: FeatureSchema | None = None) -> Dataset:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if schema is None:
        schema = make_schema(x.shape[1], n_classes=int(y.max()) + 1 if y.max() >= 1 else 2)
    return Dataset(schema, x, y)


def leaf_only_tree(counts=(7, 3), schema: FeatureSchema | None = None) -> DecisionTree:
    schema = schema or make_schema(2, len(counts))
    nodes = {0: TreeNode(0, tuple(counts))}
    return DecisionTree(
        schema=schema,
        root=0,
        nodes=nodes,
        max_depth=1,
        feature_domains=tuple((0.0, 1.0) for _ in range(schema.n_features)),
    )


def random_tree(rng: np.random.Generator, n_features: int, max_depth: int,
                n_classes: int = 2) -> DecisionTree:
    """Random structurally-valid tree: counts sum bottom-up, thresholds in [0, 1]."""
    schema = make_schema(n_features, n_classes)
    nodes: dict[int, TreeNode] = {}
    counter = [0]

    def build(depth: int) -> int:
        nid = counter[0]
        counter[0] += 1
        if depth >= max_depth or (depth > 0 and rng.random() < 0.3):
            counts = [int(c) for c in rng.integers(0, 10, size=n_classes)]
            if sum(counts) == 0:
                counts[int(rng.integers(0, n_classes))] = 1
            nodes[nid] = TreeNode(nid, tuple(counts))
            return nid
        j = int(rng.integers(0, n_features))
        t = float(rng.uniform(0.0, 1.0))
        left = build(depth + 1)
        right = build(depth + 1)
        counts = tuple(
            a + b for a, b in zip(nodes[left].class_counts, nodes[right].class_counts)
        )
        nodes[nid] = TreeNode(nid, counts, j, t, left, right)
        return nid

    root = build(0)
    return DecisionTree(
        schema=schema,
        root=root,
        nodes=nodes,
        max_depth=max_depth,
        feature_domains=tuple((0.0, 1.0) for _ in range(n_features)),
    )

"""Feature schemas, labeled datasets, CSV ingestion, and train/test splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Schema/column mismatch while loading or validating a dataset."""


@dataclass(frozen=True)
class Feature:
    name: str
    description: str = ""
    unit: str | None = None


@dataclass(frozen=True)
class FeatureSchema:
    """Named numeric features plus an ordered class list.

    Class order is fixed by declaration; class indices used everywhere else
    (trees, quizzes, reports) resolve through this schema.
    """

    features: tuple[Feature, ...]
    classes: tuple[str, ...]
    target_column: str

    def __post_init__(self):
        if len(self.features) < 1:
            raise SchemaError("schema needs at least one feature")
        if len(self.classes) < 2:
            raise SchemaError("schema needs at least two classes")
        names = [f.name for f in self.features]
        if any(not n for n in names):
            raise SchemaError("feature names must be nonempty")
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if not self.target_column:
            raise SchemaError("target_column must be nonempty")

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def feature_index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"unknown feature: {name}")

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": f.name, "description": f.description, "unit": f.unit}
                for f in self.features
            ],
            "classes": list(self.classes),
            "target_column": self.target_column,
        }

    @staticmethod
    def from_dict(doc: dict) -> "FeatureSchema":
        try:
            feats = tuple(
                Feature(f["name"], f.get("description", ""), f.get("unit"))
                for f in doc["features"]
            )
            return FeatureSchema(feats, tuple(doc["classes"]), doc["target_column"])
        except (KeyError, TypeError) as e:
            raise SchemaError(f"malformed schema document: {e}") from e


@dataclass(frozen=True)
class Sample:
    values: tuple[float, ...]
    label: int


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled dataset under a schema.

    `feature_min`/`feature_max` are the per-feature observed domain. After
    `split`, both halves carry the domain of the training half so downstream
    counterfactual magnitudes never see test data.
    """

    schema: FeatureSchema
    x: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int
    feature_min: np.ndarray = field(default=None)  # type: ignore[assignment]
    feature_max: np.ndarray = field(default=None)  # type: ignore[assignment]
    dropped_rows: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if x.ndim != 2 or x.shape[1] != self.schema.n_features:
            raise ValueError("sample matrix does not match schema feature count")
        if len(x) == 0:
            raise ValueError("empty dataset")
        if len(y) != len(x):
            raise ValueError("label count does not match sample count")
        if not np.all(np.isfinite(x)):
            raise ValueError("dataset contains non-finite values")
        if y.min() < 0 or y.max() >= self.schema.n_classes:
            raise ValueError("label index out of range for schema classes")
        fmin = self.feature_min if self.feature_min is not None else x.min(axis=0)
        fmax = self.feature_max if self.feature_max is not None else x.max(axis=0)
        fmin = np.asarray(fmin, dtype=np.float64)
        fmax = np.asarray(fmax, dtype=np.float64)
        if np.any(fmin > fmax):
            raise ValueError("feature domain has min > max")
        for arr in (x, y, fmin, fmax):
            arr.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_min", fmin)
        object.__setattr__(self, "feature_max", fmax)

    def __len__(self) -> int:
        return len(self.x)

    def sample(self, i: int) -> Sample:
        return Sample(tuple(float(v) for v in self.x[i]), int(self.y[i]))

    def class_counts(self) -> tuple[int, ...]:
        return tuple(np.bincount(self.y, minlength=self.schema.n_classes).tolist())

    def domain(self, feature_index: int) -> tuple[float, float]:
        return float(self.feature_min[feature_index]), float(self.feature_max[feature_index])

    def domains(self) -> tuple[tuple[float, float], ...]:
        return tuple(self.domain(j) for j in range(self.schema.n_features))


def load_csv(
    path: str | Path,
    schema: FeatureSchema,
    drop_columns: tuple[str, ...] | list[str] = (),
    na_policy: str = "error",
) -> Dataset:
    """Load an RFC-4180 CSV into a Dataset, mapping columns to schema order.

    `na_policy` controls rows with missing or unparseable numeric cells:
    "error" raises with the line number, "drop" skips the row and reports the
    count via `Dataset.dropped_rows`.
    """
    if na_policy not in ("error", "drop"):
        raise ValueError(f"unknown na_policy: {na_policy}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty dataset: no header row") from None
        col_of = {name: i for i, name in enumerate(header)}
        if schema.target_column not in col_of:
            raise SchemaError(f"missing column: {schema.target_column}")
        for f in schema.features:
            if f.name not in col_of:
                raise SchemaError(f"missing column: {f.name}")
        known = set(schema.feature_names()) | {schema.target_column} | set(drop_columns)
        unmapped = [c for c in header if c not in known]
        if unmapped:
            raise SchemaError(
                "unmapped columns (add to schema or drop_columns): " + ", ".join(unmapped)
            )
        feat_cols = [col_of[f.name] for f in schema.features]
        target_col = col_of[schema.target_column]
        class_of = {name: i for i, name in enumerate(schema.classes)}

        rows: list[list[float]] = []
        labels: list[int] = []
        dropped = 0
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} cells, got {len(rec)}")
            raw_label = rec[target_col]
            if raw_label in class_of:
                label = class_of[raw_label]
            else:
                try:
                    idx = int(raw_label)
                except ValueError:
                    raise ValueError(f"line {lineno}: unknown label {raw_label!r}") from None
                if not 0 <= idx < schema.n_classes:
                    raise ValueError(f"line {lineno}: unknown label {raw_label!r}")
                label = idx
            vals = []
            bad = False
            for col in feat_cols:
                try:
                    v = float(rec[col])
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    bad = True
                    break
                vals.append(v)
            if bad:
                if na_policy == "error":
                    raise ValueError(
                        f"line {lineno}: unparseable numeric value in column "
                        f"{header[col]!r}: {rec[col]!r}"
                    )
                dropped += 1
                continue
            rows.append(vals)
            labels.append(label)

    if not rows:
        raise ValueError("empty dataset")
    return Dataset(schema, np.array(rows), np.array(labels), dropped_rows=dropped)


def save_csv(dataset: Dataset, path: str | Path) -> None:
    """Write a Dataset back to CSV with round-trip-exact float formatting."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.schema.feature_names() + [dataset.schema.target_column])
        for i in range(len(dataset)):
            row = [repr(float(v)) for v in dataset.x[i]]
            row.append(dataset.schema.classes[int(dataset.y[i])])
            writer.writerow(row)


_IRIS_SCHEMA = FeatureSchema(
    features=(
        Feature("Sepal Length", "Length of the sepal, the outer green leaf-like part that protects the flower bud", "cm"),
        Feature("Sepal Width", "Width of the sepal at its widest point", "cm"),
        Feature("Petal Length", "Length of the petal, the colored inner part of the flower", "cm"),
        Feature("Petal Width", "Width of the petal at its widest point", "cm"),
    ),
    classes=("setosa", "versicolor", "virginica"),
    target_column="species",
)


def builtin_iris() -> Dataset:
    """The embedded 150-sample Iris dataset (4 features, 3 classes of 50)."""
    text = resources.files("dtexplain").joinpath("assets/iris.csv").read_text("utf-8")
    lines = text.strip().split("\n")[1:]
    class_of = {name: i for i, name in enumerate(_IRIS_SCHEMA.classes)}
    x = []
    y = []
    for line in lines:
        cells = line.split(",")
        x.append([float(v) for v in cells[:4]])
        y.append(class_of[cells[4]])
    return Dataset(_IRIS_SCHEMA, np.array(x), np.array(y))


def nfbot_schema() -> FeatureSchema:
    """Schema for NetFlow-style bot/IoT intrusion CSVs (Benign vs Threat)."""
    return FeatureSchema(
        features=(
            Feature("L4_SRC_PORT", "TCP/UDP source port of the flow", None),
            Feature("L4_DST_PORT", "TCP/UDP destination port of the flow", None),
            Feature("PROTOCOL", "IP protocol number (6 = TCP, 17 = UDP, 1 = ICMP)", None),
            Feature("L7_PROTO", "Application-layer protocol identifier reported by deep packet inspection", None),
            Feature("IN_BYTES", "Bytes sent from the source to the destination", None),
            Feature("OUT_BYTES", "Bytes sent from the destination back to the source", None),
            Feature("IN_PKTS", "Packets sent from the source to the destination", None),
            Feature("OUT_PKTS", "Packets sent from the destination back to the source", None),
            Feature("TCP_FLAGS", "Bitwise OR of all TCP flags observed in the flow", None),
            Feature("FLOW_DURATION_MILLISECONDS", "Duration of the flow", "ms"),
        ),
        classes=("Benign", "Threat"),
        target_column="Label",
    )


# Raw IPs as numerics overfit and have no declared encoding; Attack is a
# finer-grained label column, not a feature.
NFBOT_DROP_COLUMNS = ("IPV4_SRC_ADDR", "IPV4_DST_ADDR", "Attack")


def split(
    dataset: Dataset,
    test_fraction: float,
    seed: int,
    stratified: bool = True,
) -> tuple[Dataset, Dataset]:
    """Deterministic train/test split; both halves carry the train domain.

    Stratified mode preserves class proportions within one sample per class.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    n = len(dataset)
    if n < 2:
        raise ValueError("split empty: need at least 2 samples")
    rng = np.random.default_rng(seed)
    if stratified:
        test_idx: list[int] = []
        for c in range(dataset.schema.n_classes):
            idx = np.flatnonzero(dataset.y == c)
            if len(idx) == 0:
                continue
            perm = idx[rng.permutation(len(idx))]
            n_test = round(len(idx) * test_fraction)
            test_idx.extend(int(i) for i in perm[:n_test])
        test_set = set(test_idx)
        train_set = [i for i in range(n) if i not in test_set]
        # degenerate roundings: force both halves nonempty
        if not test_set:
            test_set = {train_set.pop()}
        if not train_set:
            moved = sorted(test_set)[0]
            test_set.remove(moved)
            train_set = [moved]
        train_idx = np.array(sorted(train_set))
        test_arr = np.array(sorted(test_set))
    else:
        perm = rng.permutation(n)
        n_test = round(n * test_fraction)
        n_test = min(max(n_test, 1), n - 1)
        test_arr = np.sort(perm[:n_test])
        train_idx = np.sort(perm[n_test:])
    if len(train_idx) == 0 or len(test_arr) == 0:
        raise ValueError("split empty")
    train_x = dataset.x[train_idx]
    train = Dataset(dataset.schema, train_x, dataset.y[train_idx])
    test = Dataset(
        dataset.schema,
        dataset.x[test_arr],
        dataset.y[test_arr],
        feature_min=train.feature_min,
        feature_max=train.feature_max,
    )
    return train, test

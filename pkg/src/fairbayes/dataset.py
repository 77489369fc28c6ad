"""Data model, CSV/JSON ingestion, group encoding, seeded splits and synthetic data."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, SchemaError

GroupKey = tuple  # tuple[str, ...], one category per sensitive column

WILDCARD = "*"


@dataclass(frozen=True)
class Schema:
    label_column: str
    positive_label: str
    sensitive_columns: tuple[str, ...]
    feature_columns: tuple[str, ...]
    privileged_groups: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sensitive_columns", tuple(self.sensitive_columns))
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        object.__setattr__(
            self, "privileged_groups", tuple(tuple(str(v) for v in p) for p in self.privileged_groups)
        )
        if not self.sensitive_columns:
            raise SchemaError("schema needs at least one sensitive column")
        if not self.feature_columns:
            raise SchemaError("schema needs at least one feature column")
        seen = [self.label_column, *self.sensitive_columns, *self.feature_columns]
        dupes = sorted({c for c in seen if seen.count(c) > 1})
        if dupes:
            raise SchemaError(f"columns used in more than one role: {dupes}")
        arity = len(self.sensitive_columns)
        for pattern in self.privileged_groups:
            if len(pattern) != arity:
                raise SchemaError(
                    f"privileged pattern {list(pattern)} has arity {len(pattern)}, expected {arity}"
                )

    @property
    def columns(self) -> tuple[str, ...]:
        return (self.label_column, *self.sensitive_columns, *self.feature_columns)

    def is_privileged(self, group: GroupKey) -> bool:
        return any(
            all(p == WILDCARD or p == v for p, v in zip(pattern, group))
            for pattern in self.privileged_groups
        )

    def to_dict(self) -> dict:
        return {
            "label": self.label_column,
            "positive_label": self.positive_label,
            "sensitive": list(self.sensitive_columns),
            "features": list(self.feature_columns),
            "privileged": [list(p) for p in self.privileged_groups],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Schema":
        if not isinstance(doc, dict):
            raise SchemaError("schema document must be a JSON object")
        required = ("label", "positive_label", "sensitive", "features")
        missing = [k for k in required if k not in doc]
        if missing:
            raise SchemaError(f"schema is missing keys: {missing}")
        for key in ("sensitive", "features", "privileged"):
            if key in doc and not isinstance(doc[key], list):
                raise SchemaError(f"schema key {key!r} must be a list")
        return cls(
            label_column=str(doc["label"]),
            positive_label=str(doc["positive_label"]),
            sensitive_columns=tuple(str(c) for c in doc["sensitive"]),
            feature_columns=tuple(str(c) for c in doc["features"]),
            privileged_groups=tuple(tuple(p) for p in doc.get("privileged", [])),
        )


def load_schema(source) -> Schema:
    """Build a Schema from a dict or from a path to a JSON document."""
    if isinstance(source, Schema):
        return source
    if isinstance(source, dict):
        return Schema.from_dict(source)
    try:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaError(f"schema file not found: {source}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema file {source} is not valid JSON: {exc}") from None
    return Schema.from_dict(doc)


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    groups: tuple
    schema: Schema

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2:
            raise DataError("features must be a 2-d array")
        labels = np.asarray(self.labels).astype(np.int8)
        if labels.shape != (features.shape[0],) or len(self.groups) != features.shape[0]:
            raise DataError("features, labels and groups disagree on the number of rows")
        if not np.all(np.isfinite(features)):
            raise DataError("features contain non-finite values")
        if np.any((labels != 0) & (labels != 1)):
            raise DataError("labels must be 0 or 1")
        if features.shape[1] != len(self.schema.feature_columns):
            raise DataError("feature matrix width does not match the schema")
        arity = len(self.schema.sensitive_columns)
        groups = tuple(tuple(str(v) for v in g) for g in self.groups)
        if any(len(g) != arity for g in groups):
            raise DataError(f"every group key must have {arity} values")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "groups", groups)

    def __len__(self) -> int:
        return self.features.shape[0]

    @cached_property
    def group_keys(self) -> list[GroupKey]:
        """Observed groups in lexicographic order."""
        return sorted(set(self.groups))

    @cached_property
    def group_codes(self) -> np.ndarray:
        """Index into ``group_keys`` for every row."""
        lookup = {g: i for i, g in enumerate(self.group_keys)}
        codes = np.fromiter((lookup[g] for g in self.groups), dtype=np.intp, count=len(self.groups))
        codes.setflags(write=False)
        return codes

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            features=self.features[index],
            labels=self.labels[index],
            groups=tuple(self.groups[i] for i in index),
            schema=self.schema,
        )


def load_csv(path, schema: Schema) -> Dataset:
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path} is empty")
        header = [h.strip() for h in header]
        missing = [c for c in schema.columns if c not in header]
        if missing:
            raise SchemaError(f"{path} is missing schema columns: {', '.join(missing)}")
        pos = {name: header.index(name) for name in schema.columns}
        label_idx = pos[schema.label_column]
        sens_idx = [pos[c] for c in schema.sensitive_columns]
        feat_idx = [pos[c] for c in schema.feature_columns]

        rows, labels, groups = [], [], []
        # line 1 is the header
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(record)}")
            try:
                values = [float(record[i]) for i in feat_idx]
            except ValueError:
                bad = next(schema.feature_columns[k] for k, i in enumerate(feat_idx) if not _is_float(record[i]))
                raise DataError(f"{path}:{lineno}: non-numeric value in feature column {bad!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"{path}:{lineno}: non-finite feature value")
            rows.append(values)
            labels.append(1 if record[label_idx].strip() == schema.positive_label else 0)
            groups.append(tuple(record[i].strip() for i in sens_idx))

    if not rows:
        raise DataError(f"{path} has a header but no data rows")
    return Dataset(np.array(rows, dtype=float), np.array(labels, dtype=np.int8), tuple(groups), schema)


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def write_csv(dataset: Dataset, path, negative_label: str = "0") -> None:
    """Write a dataset in the dialect ``load_csv`` reads."""
    schema = dataset.schema
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(schema.columns)
        for x, y, g in zip(dataset.features, dataset.labels, dataset.groups):
            label = schema.positive_label if y == 1 else negative_label
            writer.writerow([label, *g, *(repr(float(v)) for v in x)])


def partition_privileged(dataset: Dataset, groups: Sequence[GroupKey] | None = None):
    """Split observed groups into (privileged, non-privileged) sets.

    Raises ConfigError when either side comes out empty, since the parity and
    DF criteria only compare privileged against non-privileged groups.
    """
    observed = dataset.group_keys if groups is None else sorted(set(groups))
    if not observed:
        raise DataError("dataset has no groups")
    privileged = {g for g in observed if dataset.schema.is_privileged(g)}
    unprivileged = set(observed) - privileged
    if not privileged:
        raise ConfigError("no observed group matches the privileged patterns")
    if not unprivileged:
        raise ConfigError("every observed group is privileged; nothing to compare against")
    return privileged, unprivileged


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")


def split(dataset: Dataset, spec: SplitSpec):
    """Seeded shuffle split into (train, test); train gets floor(n * (1 - f)) rows."""
    n = len(dataset)
    n_train = math.floor(n * (1.0 - spec.test_fraction))
    if n_train == 0 or n_train == n:
        raise ConfigError(
            f"test_fraction={spec.test_fraction} on {n} rows leaves an empty train or test part"
        )
    order = np.random.default_rng(spec.seed).permutation(n)
    return dataset.subset(np.sort(order[:n_train])), dataset.subset(np.sort(order[n_train:]))


@dataclass(frozen=True)
class GroupSpec:
    """Generator settings for one group: size, P(y=1|s) and class-conditional Gaussians."""

    values: tuple
    n: int
    base_rate: float
    means: Sequence[Sequence[float]]  # [class 0 means, class 1 means]
    variances: Sequence[Sequence[float]] = field(default=None)

    @classmethod
    def from_dict(cls, doc: dict) -> "GroupSpec":
        try:
            return cls(
                values=tuple(str(v) for v in doc["values"]),
                n=int(doc["n"]),
                base_rate=float(doc["base_rate"]),
                means=doc["means"],
                variances=doc.get("variances"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad group spec {doc!r}: {exc}") from None


def generate_synthetic(
    groups: Sequence[GroupSpec],
    seed: int = 0,
    sensitive_columns: Sequence[str] | None = None,
    feature_columns: Sequence[str] | None = None,
    privileged: Sequence[Sequence[str]] = (),
    label_column: str = "label",
    positive_label: str = "1",
) -> Dataset:
    if not groups:
        raise ConfigError("need at least one group")
    arity = len(groups[0].values)
    d = len(groups[0].means[0])
    sensitive_columns = tuple(sensitive_columns or (f"s{i}" for i in range(arity)))
    feature_columns = tuple(feature_columns or (f"x{i}" for i in range(d)))
    schema = Schema(label_column, positive_label, sensitive_columns, feature_columns, tuple(privileged))

    rng = np.random.default_rng(seed)
    xs, ys, gs = [], [], []
    for spec in groups:
        if spec.n <= 0:
            raise ConfigError(f"group {spec.values} has no samples")
        if len(spec.values) != arity:
            raise ConfigError(f"group {spec.values} does not have {arity} values")
        if not 0.0 <= spec.base_rate <= 1.0:
            raise ConfigError(f"base rate of {spec.values} is outside [0, 1]")
        means = np.asarray(spec.means, dtype=float)
        variances = np.ones_like(means) if spec.variances is None else np.asarray(spec.variances, dtype=float)
        if means.shape != (2, d) or variances.shape != (2, d):
            raise ConfigError(f"group {spec.values}: means/variances must be 2 x {d}")
        if np.any(variances <= 0):
            raise ConfigError(f"group {spec.values}: variances must be positive")
        y = (rng.random(spec.n) < spec.base_rate).astype(np.int8)
        x = means[y] + rng.standard_normal((spec.n, d)) * np.sqrt(variances[y])
        xs.append(x)
        ys.append(y)
        gs.extend([tuple(spec.values)] * spec.n)
    return Dataset(np.vstack(xs), np.concatenate(ys), tuple(gs), schema)

"""Tabular dataset handling for binary classification audits.

CSV ingestion with a declarative schema, stratified train/validation/test
splitting, feature standardization fit on the training split only, and
derivation of binary demographic subgroups from raw columns.

Conventions fixed here so downstream runs are reproducible:

* rows with any missing (empty or malformed) cell are dropped and counted;
* categorical features are one-hot encoded in first-appearance order;
* the standardizer uses the population standard deviation (divide by n),
  with constant columns mapped to 0 via a std of 1.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

try:  # tomllib landed in 3.11; tomli is the same parser for older pythons
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

__all__ = [
    "Schema",
    "Dataset",
    "SplitSpec",
    "SubgroupSpec",
    "SubgroupAssignment",
    "Standardizer",
    "load_csv",
    "stratified_split",
    "fit_standardizer",
    "apply_standardizer",
    "derive_subgroups",
    "read_toml",
    "parse_schema",
    "parse_split_spec",
    "parse_subgroup_specs",
]


@dataclass(frozen=True)
class Schema:
    """Column roles for CSV ingestion.

    ``features`` are numeric columns used as-is; ``categorical`` columns are
    one-hot encoded; ``subgroup_columns`` are carried through untouched for
    later subgroup derivation and never enter the feature matrix.
    """

    label: str
    features: tuple[str, ...]
    categorical: tuple[str, ...] = ()
    subgroup_columns: tuple[str, ...] = ()
    delimiter: str = ","

    def __post_init__(self):
        names = [self.label, *self.features, *self.categorical, *self.subgroup_columns]
        dupes = {n for n in names if names.count(n) > 1}
        overlap = set(self.features) & set(self.categorical)
        if overlap:
            raise ValueError(f"columns listed as both numeric and categorical: {sorted(overlap)}")
        if dupes - set(self.subgroup_columns):
            raise ValueError(f"duplicate column roles: {sorted(dupes)}")
        if not self.features and not self.categorical:
            raise ValueError("schema needs at least one feature column")


@dataclass(frozen=True)
class Dataset:
    """An immutable table: features, binary labels, raw subgroup columns.

    ``row_ids`` are stable identifiers (the source row index at load time)
    that survive splitting, so prediction files can be traced back.
    """

    feature_matrix: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    subgroup_columns: dict[str, np.ndarray] = field(default_factory=dict)
    row_ids: np.ndarray | None = None
    dropped_count: int = 0

    def __post_init__(self):
        X = np.asarray(self.feature_matrix, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2:
            raise ValueError("feature_matrix must be 2-D")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError("labels must align with feature rows")
        if y.size and not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be binary 0/1")
        if len(self.feature_names) != X.shape[1]:
            raise ValueError("feature_names must match feature count")
        ids = self.row_ids
        if ids is None:
            ids = np.arange(X.shape[0], dtype=np.int64)
        else:
            ids = np.asarray(ids, dtype=np.int64)
            if ids.shape != y.shape:
                raise ValueError("row_ids must align with rows")
        for name, col in self.subgroup_columns.items():
            if np.asarray(col).shape[0] != X.shape[0]:
                raise ValueError(f"subgroup column {name!r} misaligned")
        X.setflags(write=False)
        y.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "feature_matrix", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n_rows(self) -> int:
        return self.feature_matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.feature_matrix.shape[1]

    def take(self, indices) -> "Dataset":
        """Row subset as a new Dataset; row_ids carried through."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            feature_matrix=self.feature_matrix[idx],
            labels=self.labels[idx],
            feature_names=self.feature_names,
            subgroup_columns={k: np.asarray(v)[idx] for k, v in self.subgroup_columns.items()},
            row_ids=self.row_ids[idx],
            dropped_count=0,
        )


@dataclass(frozen=True)
class SplitSpec:
    """Fractions for (train, validation, test) plus the shuffle seed.

    Train and test fractions must be in (0,1); the validation fraction may
    be exactly 0 for two-way splits.  Fractions must sum to 1 within 1e-9.
    """

    fractions: tuple[float, float, float]
    seed: int

    def __post_init__(self):
        tr, va, te = self.fractions
        if not (0.0 < tr < 1.0 and 0.0 < te < 1.0 and 0.0 <= va < 1.0):
            raise ValueError(f"invalid split fractions {self.fractions}")
        if abs(tr + va + te - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {tr + va + te!r}")

    @property
    def has_validation(self) -> bool:
        return self.fractions[1] > 0.0


@dataclass(frozen=True)
class SubgroupSpec:
    """Rule turning one raw column into exactly two demographic groups.

    Exactly one rule may be given:

    * ``threshold`` — numeric column; value < threshold -> first group;
    * ``positive_values`` — first group iff the raw value is in the set;
    * ``mapping`` — explicit raw-value -> group-label dict (unlisted raw
      values are an error);
    * none — the column must already hold exactly two distinct values,
      which become the group labels themselves.
    """

    name: str
    source_column: str
    group_labels: tuple[str, str] | None = None
    threshold: float | None = None
    positive_values: frozenset | None = None
    mapping: dict | None = None

    def __post_init__(self):
        rules = [r is not None for r in (self.threshold, self.positive_values, self.mapping)]
        if sum(rules) > 1:
            raise ValueError(f"subgroup {self.name!r}: give at most one binarization rule")
        if self.positive_values is not None:
            object.__setattr__(self, "positive_values", frozenset(str(v) for v in self.positive_values))
            if self.group_labels is None:
                raise ValueError(f"subgroup {self.name!r}: value-set rule needs group_labels")
        if self.mapping is not None:
            targets = set(self.mapping.values())
            if len(targets) != 2:
                raise ValueError(f"subgroup {self.name!r}: mapping must target exactly two groups")
        if self.group_labels is not None and self.group_labels[0] == self.group_labels[1]:
            raise ValueError(f"subgroup {self.name!r}: group labels must differ")


@dataclass(frozen=True)
class SubgroupAssignment:
    """Binary group membership for every row, plus group sizes."""

    name: str
    groups: np.ndarray
    sizes: dict[str, int]

    @property
    def group_labels(self) -> tuple[str, ...]:
        return tuple(self.sizes)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean and population standard deviation from one training split."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=np.float64)
        s = np.asarray(self.std, dtype=np.float64)
        if m.shape != s.shape or m.ndim != 1:
            raise ValueError("mean and std must be aligned vectors")
        if not (s > 0).all():
            raise ValueError("stored stds must be positive")
        m.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "std", s)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.mean.shape[0]:
            raise ValueError(
                f"standardizer fit on {self.mean.shape[0]} features, data has {X.shape[1]}"
            )
        return (X - self.mean) / self.std


def load_csv(path, schema: Schema) -> Dataset:
    """Read a UTF-8 CSV with header into a Dataset per the schema.

    Rows with any missing cell (empty string in a used column, or a row of
    the wrong width) are dropped and counted in ``dropped_count``.  Labels
    must be exactly 0 or 1; numeric features must parse as floats.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row required") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    col_index = {}
    for name in (schema.label, *schema.features, *schema.categorical, *schema.subgroup_columns):
        if name not in header:
            raise ValueError(f"{path}: column {name!r} not in header {header}")
        col_index[name] = header.index(name)

    used = list(col_index.values())
    labels = []
    numeric = []
    cat_raw: dict[str, list] = {c: [] for c in schema.categorical}
    sub_raw: dict[str, list] = {c: [] for c in schema.subgroup_columns}
    row_ids = []
    dropped = 0
    for i, row in enumerate(rows):
        if len(row) != len(header) or any(row[j].strip() == "" for j in used):
            dropped += 1
            continue
        raw_label = row[col_index[schema.label]].strip()
        try:
            lab = float(raw_label)
        except ValueError:
            raise ValueError(f"{path}: non-binary label {raw_label!r} at data row {i}") from None
        if lab not in (0.0, 1.0):
            raise ValueError(f"{path}: non-binary label {raw_label!r} at data row {i}")
        feats = []
        for name in schema.features:
            cell = row[col_index[name]].strip()
            try:
                feats.append(float(cell))
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric value {cell!r} in feature {name!r} at data row {i}"
                ) from None
        labels.append(int(lab))
        numeric.append(feats)
        for name in schema.categorical:
            cat_raw[name].append(row[col_index[name]].strip())
        for name in schema.subgroup_columns:
            sub_raw[name].append(row[col_index[name]].strip())
        row_ids.append(i)

    n = len(labels)
    if n == 0:
        warnings.warn(f"{path}: no usable rows ({dropped} dropped)", stacklevel=2)

    blocks = []
    names: list[str] = []
    if schema.features:
        blocks.append(np.asarray(numeric, dtype=np.float64).reshape(n, len(schema.features)))
        names.extend(schema.features)
    for col in schema.categorical:
        onehot, levels = _one_hot(cat_raw[col])
        blocks.append(onehot)
        names.extend(f"{col}={lv}" for lv in levels)
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))

    return Dataset(
        feature_matrix=X,
        labels=np.asarray(labels, dtype=np.int64),
        feature_names=tuple(names),
        subgroup_columns={k: np.asarray(v, dtype=object) for k, v in sub_raw.items()},
        row_ids=np.asarray(row_ids, dtype=np.int64),
        dropped_count=dropped,
    )


def _one_hot(values: list) -> tuple[np.ndarray, list[str]]:
    """Indicator columns, category order = first appearance."""
    levels: list[str] = []
    for v in values:
        if v not in levels:
            levels.append(v)
    out = np.zeros((len(values), len(levels)))
    pos = {lv: j for j, lv in enumerate(levels)}
    for i, v in enumerate(values):
        out[i, pos[v]] = 1.0
    return out, levels


def stratified_split(ds: Dataset, spec: SplitSpec):
    """Split into (train, validation, test); validation is None when its fraction is 0.

    Each class is shuffled with the spec seed and allocated to splits by the
    largest-remainder rule, so per-split class proportions match the full
    dataset within one instance per class.  Deterministic given (ds, spec).
    """
    idx_by_class = [np.flatnonzero(ds.labels == c) for c in (0, 1)]
    if any(len(ix) == 0 for ix in idx_by_class):
        raise ValueError("both classes must be present to stratify")
    rng = np.random.default_rng(spec.seed)
    parts: list[list] = [[], [], []]
    for ix in idx_by_class:
        shuffled = ix[rng.permutation(len(ix))]
        counts = _largest_remainder(len(ix), spec.fractions)
        for s, want in enumerate(counts):
            if spec.fractions[s] > 0 and want == 0:
                raise ValueError(
                    f"class with {len(ix)} rows too small for fractions {spec.fractions}"
                )
        a, b = counts[0], counts[0] + counts[1]
        parts[0].append(shuffled[:a])
        parts[1].append(shuffled[a:b])
        parts[2].append(shuffled[b:])
    train_ix, val_ix, test_ix = (np.sort(np.concatenate(p)) for p in parts)
    train = ds.take(train_ix)
    test = ds.take(test_ix)
    val = ds.take(val_ix) if spec.has_validation else None
    return train, val, test


def _largest_remainder(n: int, fractions) -> list[int]:
    """Integer allocation of n items proportional to fractions, summing to n."""
    raw = [f * n for f in fractions]
    base = [math.floor(x) for x in raw]
    short = n - sum(base)
    # hand leftover items to the largest fractional parts; ties go left
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def fit_standardizer(train: Dataset) -> Standardizer:
    """Per-feature mean and population std of the training split.

    Constant features get std 1 so they transform to exactly 0.
    """
    if train.n_rows == 0:
        raise ValueError("cannot fit a standardizer on an empty split")
    X = train.feature_matrix
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population convention: divide by n
    std = np.where(std == 0.0, 1.0, std)
    return Standardizer(mean=mean, std=std)


def apply_standardizer(std: Standardizer, ds: Dataset) -> Dataset:
    """Same Dataset with features replaced by their standardized values."""
    return Dataset(
        feature_matrix=std.transform(ds.feature_matrix),
        labels=ds.labels,
        feature_names=ds.feature_names,
        subgroup_columns=dict(ds.subgroup_columns),
        row_ids=ds.row_ids,
        dropped_count=ds.dropped_count,
    )


def derive_subgroups(ds: Dataset, specs) -> dict[str, SubgroupAssignment]:
    """Assign every row to one of two groups per spec; sizes included.

    Group sizes always sum to the dataset size; an unmapped raw value or a
    non-binary identity column is an error rather than a silent third group.
    """
    out: dict[str, SubgroupAssignment] = {}
    for spec in specs:
        if spec.source_column not in ds.subgroup_columns:
            raise ValueError(f"subgroup {spec.name!r}: column {spec.source_column!r} not loaded")
        raw = np.asarray(ds.subgroup_columns[spec.source_column])
        groups = np.empty(raw.shape[0], dtype=object)
        if spec.threshold is not None:
            labels = spec.group_labels or (
                f"{spec.source_column}<{spec.threshold:g}",
                f"{spec.source_column}>={spec.threshold:g}",
            )
            for i, v in enumerate(raw):
                try:
                    x = float(v)
                except (TypeError, ValueError):
                    raise ValueError(
                        f"subgroup {spec.name!r}: non-numeric value {v!r} under threshold rule"
                    ) from None
                groups[i] = labels[0] if x < spec.threshold else labels[1]
        elif spec.positive_values is not None:
            labels = spec.group_labels
            for i, v in enumerate(raw):
                groups[i] = labels[0] if str(v) in spec.positive_values else labels[1]
            labels = tuple(labels)
        elif spec.mapping is not None:
            mapping = {str(k): str(v) for k, v in spec.mapping.items()}
            for i, v in enumerate(raw):
                key = str(v)
                if key not in mapping:
                    raise ValueError(f"subgroup {spec.name!r}: unmapped raw value {key!r}")
                groups[i] = mapping[key]
            labels = tuple(dict.fromkeys(mapping.values()))
        else:
            distinct = list(dict.fromkeys(str(v) for v in raw))
            if len(distinct) != 2:
                raise ValueError(
                    f"subgroup {spec.name!r}: column {spec.source_column!r} has "
                    f"{len(distinct)} distinct values, need exactly 2 for identity mapping"
                )
            labels = tuple(distinct)
            for i, v in enumerate(raw):
                groups[i] = str(v)
        labels = tuple(labels)
        sizes = {lab: int((groups == lab).sum()) for lab in labels}
        out[spec.name] = SubgroupAssignment(name=spec.name, groups=groups, sizes=sizes)
    return out


# --- declarative config -----------------------------------------------------

def read_toml(path) -> dict:
    """Parse a TOML config file to a plain dict."""
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def parse_schema(table: dict) -> Schema:
    """Build a Schema from a config mapping (keys: label, features, categorical,
    subgroup_columns, delimiter)."""
    return Schema(
        label=table["label"],
        features=tuple(table.get("features", ())),
        categorical=tuple(table.get("categorical", ())),
        subgroup_columns=tuple(table.get("subgroup_columns", ())),
        delimiter=table.get("delimiter", ","),
    )


def parse_split_spec(table: dict, seed: int | None = None) -> SplitSpec:
    """Build a SplitSpec from a config mapping (keys: fractions, seed)."""
    fr = table["fractions"]
    if len(fr) == 2:  # two-way config shorthand: no validation split
        fr = (fr[0], 0.0, fr[1])
    if seed is None:
        seed = int(table["seed"])
    return SplitSpec(fractions=tuple(float(f) for f in fr), seed=seed)


def parse_subgroup_specs(tables) -> tuple[SubgroupSpec, ...]:
    """Build SubgroupSpecs from a list of config mappings."""
    specs = []
    for t in tables:
        labels = t.get("groups")
        specs.append(
            SubgroupSpec(
                name=t["name"],
                source_column=t.get("column", t["name"]),
                group_labels=tuple(labels) if labels else None,
                threshold=float(t["threshold"]) if "threshold" in t else None,
                positive_values=frozenset(t["positive"]) if "positive" in t else None,
                mapping=dict(t["mapping"]) if "mapping" in t else None,
            )
        )
    return tuple(specs)

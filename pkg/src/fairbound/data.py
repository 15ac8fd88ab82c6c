"""Delimited-text ingestion into :class:`LabeledDataset`.

A dataset schema is an INI file::

    [dataset]
    label_column = two_year_recid
    label_positive_value = 1
    group_column = race
    group_a_value = Caucasian
    drop_rows_with_missing = true
    missing_values = , NA, ?

    [features]
    age = numeric
    sex = categorical

Categorical features are one-hot encoded in first-appearance order, every
encoded column is standardized, and columns that end up constant are
dropped.  Any group value other than ``group_a_value`` maps to ``b``.
"""

from __future__ import annotations

import configparser
import csv
import logging
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .core import GROUPS, EmptyCellError, FairboundError, LabeledDataset

logger = logging.getLogger(__name__)

NUMERIC, CATEGORICAL = "numeric", "categorical"
DEFAULT_MISSING = ("", "NA", "N/A", "NaN", "nan", "?")
BUNDLED_SCHEMAS = ("compas", "adult", "lawschool")

# published row counts and train/test splits after cleaning
PUBLISHED_COUNTS = {
    "compas": (7214, 5049, 2165),
    "adult": (45222, 32561, 12661),
    "lawschool": (4862, 3403, 1459),
}


class SchemaError(FairboundError):
    pass


class EmptyTestSplitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DatasetSchema:
    label_column: str
    label_positive_value: str
    group_column: str
    group_a_value: str
    feature_columns: tuple[tuple[str, str], ...]
    drop_rows_with_missing: bool = True
    missing_values: tuple[str, ...] = DEFAULT_MISSING
    label_negative_value: str | None = None
    name: str = ""

    def __post_init__(self):
        if not self.feature_columns:
            raise SchemaError("schema declares no features")
        names = [c for c, _ in self.feature_columns]
        for special in (self.label_column, self.group_column):
            if special in names:
                raise SchemaError(f"column {special!r} cannot be both a feature and the label/group")
        for col, kind in self.feature_columns:
            if kind not in (NUMERIC, CATEGORICAL):
                raise SchemaError(f"feature {col!r}: kind must be numeric or categorical, got {kind!r}")

    @property
    def positive_labels(self) -> tuple[str, ...]:
        return _split_list(self.label_positive_value)

    @property
    def columns(self) -> list[str]:
        return [self.label_column, self.group_column] + [c for c, _ in self.feature_columns]


def _split_list(raw: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in raw.split(","))


def parse_schema(text: str, name: str = "") -> DatasetSchema:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    cp.read_string(text)
    if not cp.has_section("dataset") or not cp.has_section("features"):
        raise SchemaError("schema needs [dataset] and [features] sections")
    ds = cp["dataset"]
    try:
        return DatasetSchema(
            label_column=ds["label_column"],
            label_positive_value=ds["label_positive_value"],
            group_column=ds["group_column"],
            group_a_value=ds["group_a_value"],
            feature_columns=tuple((k, v.strip()) for k, v in cp["features"].items()),
            drop_rows_with_missing=ds.getboolean("drop_rows_with_missing", fallback=True),
            missing_values=_split_list(ds["missing_values"]) if "missing_values" in ds else DEFAULT_MISSING,
            label_negative_value=ds.get("label_negative_value"),
            name=ds.get("name", name),
        )
    except KeyError as exc:
        raise SchemaError(f"schema is missing key {exc.args[0]!r}") from None


def load_schema(path) -> DatasetSchema:
    path = Path(path)
    return parse_schema(path.read_text(), name=path.stem)


def bundled_schema(name: str) -> DatasetSchema:
    if name not in BUNDLED_SCHEMAS:
        raise SchemaError(f"no bundled schema {name!r}; have {', '.join(BUNDLED_SCHEMAS)}")
    text = resources.files("fairbound").joinpath("schemas", f"{name}.ini").read_text()
    return parse_schema(text, name=name)


def resolve_schema(ref) -> DatasetSchema:
    """Accept a path to an INI file or the name of a bundled schema."""
    if isinstance(ref, DatasetSchema):
        return ref
    if Path(ref).is_file():
        return load_schema(ref)
    return bundled_schema(str(ref))


@dataclass
class PreprocessReport:
    rows_read: int = 0
    rows_dropped: int = 0
    n_features_after_encoding: int = 0
    means: dict[str, float] = field(default_factory=dict)
    stds: dict[str, float] = field(default_factory=dict)
    dropped_constant_columns: list[str] = field(default_factory=list)

    @property
    def rows_kept(self) -> int:
        return self.rows_read - self.rows_dropped


def _read_encoded(path, schema: DatasetSchema, report: PreprocessReport):
    """Parse the file into raw (unstandardized) encoded features, labels and groups."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FairboundError(f"{path}: empty file") from None
        missing_cols = [c for c in schema.columns if c not in header]
        if missing_cols:
            raise SchemaError(f"{path}: missing declared column(s) {', '.join(missing_cols)}")
        pos = {c: header.index(c) for c in schema.columns}
        missing = set(schema.missing_values)

        labels, groups, raw = [], [], []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            report.rows_read += 1
            vals = {c: (row[pos[c]].strip() if pos[c] < len(row) else "") for c in schema.columns}
            if any(v in missing for v in vals.values()):
                if not schema.drop_rows_with_missing:
                    raise FairboundError(f"{path}: missing value at line {i}")
                report.rows_dropped += 1
                continue
            lab = vals[schema.label_column]
            if lab in schema.positive_labels:
                labels.append(1)
            elif schema.label_negative_value is None or lab == schema.label_negative_value:
                labels.append(0)
            else:
                raise FairboundError(f"{path}: unmappable label value {lab!r} at line {i}")
            groups.append("a" if vals[schema.group_column] == schema.group_a_value else "b")
            raw.append((i, vals))

    if not raw:
        raise FairboundError(f"{path}: all rows dropped")

    columns, names = [], []
    for col, kind in schema.feature_columns:
        if kind == NUMERIC:
            try:
                columns.append(np.array([float(v[col]) for _, v in raw]))
            except ValueError:
                bad = next(i for i, v in raw if not _is_float(v[col]))
                raise FairboundError(f"{path}: non-numeric value in {col!r} at line {bad}") from None
            names.append(col)
        else:
            index = {lv: k for k, lv in enumerate(dict.fromkeys(v[col] for _, v in raw))}
            codes = np.array([index[v[col]] for _, v in raw])
            for lv, k in index.items():
                columns.append((codes == k).astype(float))
                names.append(f"{col}={lv}")
    return np.column_stack(columns), np.array(labels), np.array(groups), names


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


@dataclass(frozen=True)
class Standardizer:
    keep: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    names: tuple[str, ...]

    @classmethod
    def fit(cls, x: np.ndarray, names) -> "Standardizer":
        means = x.mean(axis=0)
        stds = x.std(axis=0)
        keep = stds > 1e-12 * np.maximum(1.0, np.abs(means))
        return cls(keep, means[keep], stds[keep], tuple(n for n, k in zip(names, keep) if k))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x[:, self.keep] - self.means) / self.stds


def _finish_report(report: PreprocessReport, std: Standardizer, names) -> None:
    report.n_features_after_encoding = len(std.names)
    report.means = dict(zip(std.names, map(float, std.means)))
    report.stds = dict(zip(std.names, map(float, std.stds)))
    report.dropped_constant_columns = [n for n, k in zip(names, std.keep) if not k]


def load_csv(path, schema, standardize: bool = True) -> tuple[LabeledDataset, PreprocessReport]:
    """Load and encode the whole file; standardize with full-data statistics."""
    schema = resolve_schema(schema)
    report = PreprocessReport()
    x, y, z, names = _read_encoded(path, schema, report)
    if not standardize:
        report.n_features_after_encoding = len(names)
        return LabeledDataset(x, y, z, tuple(names)), report
    std = Standardizer.fit(x, names)
    _finish_report(report, std, names)
    return LabeledDataset(std.apply(x), y, z, std.names), report


def split_indices(n: int, seed: int, train_fraction: float | None = None,
                  counts: tuple[int, int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    if (train_fraction is None) == (counts is None):
        raise FairboundError("give exactly one of train_fraction or counts")
    if counts is not None:
        n_train, n_test = (int(c) for c in counts)
        if n_train < 0 or n_test < 0 or n_train + n_test > n:
            raise FairboundError(f"split counts {n_train}+{n_test} exceed dataset size {n}")
    else:
        if not 0.0 < train_fraction <= 1.0:
            raise FairboundError(f"train_fraction={train_fraction!r} outside (0, 1]")
        n_train = int(round(train_fraction * n))
        n_test = n - n_train
    perm = np.random.default_rng(seed).permutation(n)
    if n_test == 0:
        warnings.warn("test split is empty", EmptyTestSplitWarning, stacklevel=3)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_test])


def split(data: LabeledDataset, train_fraction: float | None = None,
          counts: tuple[int, int] | None = None, seed: int = 0) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic shuffled split; rows keep their original relative order."""
    tr, te = split_indices(len(data), seed, train_fraction, counts)
    return data.subset(tr), data.subset(te)


def load_split(path, schema, seed: int = 0, train_fraction: float | None = None,
               counts: tuple[int, int] | None = None):
    """Load, split, then standardize both parts with training-split statistics.

    Returns ``(train, test, report)``.
    """
    schema = resolve_schema(schema)
    report = PreprocessReport()
    x, y, z, names = _read_encoded(path, schema, report)
    tr, te = split_indices(len(y), seed, train_fraction, counts)
    std = Standardizer.fit(x[tr], names)
    _finish_report(report, std, names)
    train = LabeledDataset(std.apply(x[tr]), y[tr], z[tr], std.names)
    test = LabeledDataset(std.apply(x[te]), y[te], z[te], std.names)
    return train, test, report


@dataclass(frozen=True)
class GroupConditionalSamples:
    cells: dict[tuple[int, str], np.ndarray]
    by_label: dict[int, np.ndarray]

    def pair_global(self):
        return self.by_label[1], self.by_label[0]

    def pair_group(self, z: str):
        return self.cells[1, z], self.cells[0, z]


def group_conditional_samples(data: LabeledDataset) -> GroupConditionalSamples:
    cells = {}
    for y in (0, 1):
        for zi, z in enumerate(GROUPS):
            mask = data.cell_mask(y, zi)
            if not mask.any():
                raise EmptyCellError(y, z, "empty required cell")
            cells[y, z] = data.features[mask]
    by_label = {y: data.features[data.labels == y] for y in (0, 1)}
    return GroupConditionalSamples(cells, by_label)


DUMP_FIXED = ("label", "group")


def dump_dataset(data: LabeledDataset, path) -> None:
    """Internal tabular dump: header ``label,group,<features...>``; floats written with repr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DUMP_FIXED + data.feature_names)
        for i in range(len(data)):
            w.writerow([int(data.labels[i]), data.groups[i]] + [repr(float(v)) for v in data.features[i]])


def read_dump(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[:2]) != DUMP_FIXED:
            raise FairboundError(f"{path}: not a dataset dump (header starts {header[:2]})")
        rows = list(reader)
    labels = np.array([int(r[0]) for r in rows])
    groups = np.array([r[1] for r in rows])
    feats = np.array([[float(v) for v in r[2:]] for r in rows]).reshape(len(rows), len(header) - 2)
    return LabeledDataset(feats, labels, groups, tuple(header[2:]))


def read_samples(path) -> np.ndarray:
    """Numeric sample matrix from a CSV with a header row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FairboundError(f"{path}: empty sample file")
        rows = [[float(v) for v in r] for r in reader if r]
    if not rows:
        raise FairboundError(f"{path}: no sample rows")
    return np.array(rows).reshape(len(rows), len(header))


def write_samples(samples: np.ndarray, path, names=None) -> None:
    samples = np.asarray(samples, dtype=float).reshape(len(samples), -1)
    names = names or [f"x{j}" for j in range(samples.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in samples:
            w.writerow([repr(float(v)) for v in row])

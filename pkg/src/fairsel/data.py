"""Dataset loading, label encoding, stratified splits and masked feature views."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from fairsel.errors import ConfigError, DataError

log = logging.getLogger(__name__)

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass(frozen=True)
class RawTable:
    header: list[str]
    rows: list[list[str]]
    dropped_rows: int = 0

    def __post_init__(self):
        if len(set(self.header)) != len(self.header) or not all(self.header):
            raise DataError(f"header names must be unique and non-empty: {self.header}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.header)

    def column(self, name: str) -> list[str]:
        try:
            j = self.header.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}") from None
        return [row[j] for row in self.rows]


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    encoder: dict[str, int] | None = None

    def decode(self, code: int) -> str:
        if self.encoder is None:
            raise ValueError(f"column {self.name!r} is numeric")
        for category, c in self.encoder.items():
            if c == code:
                return category
        raise KeyError(code)


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Numeric feature matrix with binary labels and a binary protected-group vector.

    ``protected_values`` travels with every view so fairness stays measurable
    after the protected column itself has been masked out.  ``protected_index``
    is ``None`` in such a view.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    protected_index: int | None
    protected_values: np.ndarray
    schemas: list[ColumnSchema]
    mask: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.features.shape[0]
        if self.labels.shape != (n,) or self.protected_values.shape != (n,):
            raise DataError("features, labels and protected_values disagree on row count")
        if self.features.shape[1] != len(self.feature_names):
            raise DataError("feature_names does not match the feature matrix width")
        for arr in (self.features, self.labels, self.protected_values):
            arr.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def rows(self, index: np.ndarray) -> "EncodedDataset":
        return EncodedDataset(
            features=self.features[index],
            labels=self.labels[index],
            feature_names=self.feature_names,
            protected_index=self.protected_index,
            protected_values=self.protected_values[index],
            schemas=self.schemas,
            mask=self.mask,
            meta=self.meta,
        )


@dataclass(frozen=True)
class SplitPair:
    train: EncodedDataset
    holdout: EncodedDataset
    seed: int
    train_fraction: float
    train_index: np.ndarray
    holdout_index: np.ndarray


def load_csv(
    path: str | Path,
    delimiter: str | None = ",",
    has_header: bool = True,
    missing_token: str | None = None,
    header: Sequence[str] | None = None,
) -> RawTable:
    """Read a delimited text file into a :class:`RawTable`.

    ``delimiter=None`` splits on runs of whitespace.  Cells are stripped, blank
    lines are ignored, and any row containing ``missing_token`` is dropped.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    lines = [(i + 1, line) for i, line in enumerate(text.splitlines()) if line.strip()]
    if not lines:
        raise DataError(f"{path} is empty")

    def cells(line: str) -> list[str]:
        parts = line.split() if delimiter is None else line.split(delimiter)
        return [p.strip() for p in parts]

    if has_header:
        names = cells(lines[0][1])
        lines = lines[1:]
    elif header is not None:
        names = list(header)
    else:
        names = [f"c{j}" for j in range(len(cells(lines[0][1])))]
    if header is not None:
        names = list(header)

    rows, dropped = [], 0
    for lineno, line in lines:
        row = cells(line)
        if len(row) != len(names):
            raise DataError(
                f"{path}:{lineno}: expected {len(names)} columns, found {len(row)}"
            )
        if missing_token is not None and missing_token in row:
            dropped += 1
            continue
        rows.append(row)
    if dropped:
        log.info("%s: dropped %d rows containing %r", path.name, dropped, missing_token)
    return RawTable(header=names, rows=rows, dropped_rows=dropped)


def _infer_kind(values: list[str]) -> str:
    try:
        for v in values:
            float(v)
    except ValueError:
        return CATEGORICAL
    return NUMERIC


def _as_group(reference_group: str | Sequence[str]) -> set[str]:
    if isinstance(reference_group, str):
        return {reference_group}
    return set(reference_group)


def encode(
    table: RawTable,
    label_column: str,
    positive_label: str,
    protected_column: str,
    reference_group: str | Sequence[str],
    kinds: Mapping[str, str] | None = None,
) -> EncodedDataset:
    """Label-encode ``table`` into an :class:`EncodedDataset`.

    Categorical codes follow first-appearance order.  Columns absent from
    ``kinds`` are inferred numeric when every cell parses as a float.
    ``reference_group`` may name several raw values, all mapped to group 1.
    """
    kinds = dict(kinds or {})
    if label_column not in table.header:
        raise DataError(f"label column {label_column!r} not found")
    if protected_column not in table.header:
        raise DataError(f"protected column {protected_column!r} not found")
    if protected_column == label_column:
        raise DataError("the protected column cannot be the label")

    raw_labels = table.column(label_column)
    distinct = set(raw_labels)
    if len(distinct) != 2:
        raise DataError(
            f"label column {label_column!r} must have exactly 2 values, found {sorted(distinct)}"
        )
    if positive_label not in distinct:
        raise DataError(f"positive label {positive_label!r} not among {sorted(distinct)}")
    labels = np.array([v == positive_label for v in raw_labels], dtype=np.int8)

    raw_protected = table.column(protected_column)
    group = _as_group(reference_group)
    missing = group - set(raw_protected)
    if missing == group:
        raise DataError(f"reference group {sorted(group)} not found in {protected_column!r}")
    protected = np.array([v in group for v in raw_protected], dtype=np.int8)

    names = [h for h in table.header if h != label_column]
    columns, schemas = [], []
    for name in names:
        values = table.column(name)
        kind = kinds.get(name) or _infer_kind(values)
        if kind == NUMERIC:
            try:
                col = np.array([float(v) for v in values])
            except ValueError as exc:
                raise DataError(f"column {name!r}: {exc}") from None
            schemas.append(ColumnSchema(name, NUMERIC))
        elif kind == CATEGORICAL:
            encoder: dict[str, int] = {}
            for v in values:
                encoder.setdefault(v, len(encoder))
            col = np.array([encoder[v] for v in values], dtype=float)
            schemas.append(ColumnSchema(name, CATEGORICAL, encoder))
        else:
            raise ConfigError(f"column {name!r}: unknown kind {kind!r}")
        columns.append(col)

    features = np.column_stack(columns) if columns else np.empty((table.n_rows, 0))
    return EncodedDataset(
        features=np.ascontiguousarray(features),
        labels=labels,
        feature_names=names,
        protected_index=names.index(protected_column),
        protected_values=protected,
        schemas=schemas,
        meta={"dropped_rows": table.dropped_rows},
    )


def split(dataset: EncodedDataset, seed: int, train_fraction: float = 0.7) -> SplitPair:
    """Stratified, seeded train/holdout partition."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if dataset.n_rows == 0:
        raise DataError("cannot split an empty dataset")

    rng = np.random.default_rng(seed)
    train_parts, holdout_parts = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(dataset.labels == cls)
        idx = idx[rng.permutation(len(idx))]
        k = int(round(len(idx) * train_fraction))
        train_parts.append(idx[:k])
        holdout_parts.append(idx[k:])
    train_idx = np.sort(np.concatenate(train_parts))
    holdout_idx = np.sort(np.concatenate(holdout_parts))
    if len(train_idx) == 0 or len(holdout_idx) == 0:
        raise DataError(
            f"train_fraction {train_fraction} leaves an empty partition of {dataset.n_rows} rows"
        )
    return SplitPair(
        train=dataset.rows(train_idx),
        holdout=dataset.rows(holdout_idx),
        seed=seed,
        train_fraction=train_fraction,
        train_index=train_idx,
        holdout_index=holdout_idx,
    )


def mask_view(dataset: EncodedDataset, mask) -> EncodedDataset:
    """Restrict ``dataset`` to the columns whose mask bit is set."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (dataset.n_features,):
        raise ValueError(f"mask length {mask.size} != n_features {dataset.n_features}")
    if not mask.any():
        raise ValueError("mask selects no features")
    cols = np.flatnonzero(mask)
    pidx = dataset.protected_index
    return EncodedDataset(
        features=np.ascontiguousarray(dataset.features[:, cols]),
        labels=dataset.labels,
        feature_names=[dataset.feature_names[j] for j in cols],
        protected_index=int(np.searchsorted(cols, pidx)) if pidx is not None and mask[pidx] else None,
        protected_values=dataset.protected_values,
        schemas=[dataset.schemas[j] for j in cols],
        mask=mask,
        meta=dataset.meta,
    )


@dataclass(frozen=True)
class Manifest:
    name: str
    file: Path
    delimiter: str | None
    has_header: bool
    missing_token: str | None
    columns: list[str]
    kinds: dict[str, str]
    label: str
    positive_label: str
    protected: str
    reference_group: list[str]


def load_manifest(path: str | Path) -> Manifest:
    """Parse a YAML dataset manifest; ``file`` resolves relative to the manifest."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed manifest {path}: {exc}") from exc
    try:
        columns, kinds = [], {}
        for entry in doc["columns"]:
            name, kind = (entry, None) if isinstance(entry, str) else (entry["name"], entry.get("kind"))
            columns.append(str(name))
            if kind:
                kinds[str(name)] = kind
        delimiter = doc.get("delimiter", ",")
        ref = doc["reference_group"]
        return Manifest(
            name=doc.get("name", path.stem),
            file=(path.parent / doc["file"]).resolve(),
            delimiter=None if delimiter in (None, "whitespace") else delimiter,
            has_header=bool(doc.get("has_header", False)),
            missing_token=doc.get("missing_token"),
            columns=columns,
            kinds=kinds,
            label=str(doc["label"]),
            positive_label=str(doc["positive_label"]),
            protected=str(doc["protected"]),
            reference_group=[str(r) for r in ([ref] if isinstance(ref, str) else ref)],
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"manifest {path} is missing or mistypes field {exc}") from exc


def load_dataset(manifest: Manifest | str | Path) -> EncodedDataset:
    if not isinstance(manifest, Manifest):
        manifest = load_manifest(manifest)
    table = load_csv(
        manifest.file,
        delimiter=manifest.delimiter,
        has_header=manifest.has_header,
        missing_token=manifest.missing_token,
        header=manifest.columns,
    )
    ds = encode(
        table,
        label_column=manifest.label,
        positive_label=manifest.positive_label,
        protected_column=manifest.protected,
        reference_group=manifest.reference_group,
        kinds=manifest.kinds,
    )
    ds.meta["dataset"] = manifest.name
    return ds

"""Tabular dataset container, CSV ingestion, stratified splitting, scaling."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .schema import DatasetSchema, SchemaError

LABELED, UNLABELED, VALIDATION, TEST = 0, 1, 2, 3
SPLIT_NAMES = ("labeled", "unlabeled", "validation", "test")


class SplitInfeasibleError(ValueError):
    """A group is too small to appear in every split."""


@dataclass
class TabularDataset:
    """Immutable-by-convention dataset: transformations return new instances.

    Y is kept on every row; unlabeled rows expose it for diagnostics only and
    the training loop never reads it there (enforced by the leakage probe test).
    """

    X: np.ndarray            # (n, d) float64 features
    Y: np.ndarray            # (n, L) int8 binary labels
    groups: np.ndarray       # (n,) int64 sensitive-group index in [0, K)
    split: np.ndarray        # (n,) int8 tags, see SPLIT_NAMES
    continuous_mask: np.ndarray  # (d,) bool, True for z-scorable columns
    n_groups: int
    feature_names: list[str] = field(default_factory=list)
    label_names: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_labels(self) -> int:
        return self.Y.shape[1]

    def indices(self, tag: int) -> np.ndarray:
        return np.flatnonzero(self.split == tag)

    def split_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.split == t)) for t, name in enumerate(SPLIT_NAMES)}


def load_csv(path, schema: DatasetSchema) -> TabularDataset:
    """Read a header CSV against an explicit schema.

    Rows with missing values in any used column are dropped; the count is
    reported in ``meta["dropped_rows"]``. Category vocabularies are closed:
    an unseen value raises a SchemaError naming column and value.
    """
    df = pd.read_csv(path, skipinitialspace=True, dtype=str, keep_default_na=False)
    missing_cols = [c for c in schema.used_columns() if c not in df.columns]
    if missing_cols:
        raise SchemaError(f"CSV {path} is missing schema columns: {missing_cols}")

    df = df[schema.used_columns()].copy()
    for c in df.columns:
        df[c] = df[c].str.strip()
    miss = pd.DataFrame(False, index=df.index, columns=df.columns)
    for c in df.columns:
        miss[c] = df[c].isin(schema.missing_tokens)
    # continuous feature columns must also parse as numbers
    numeric = {}
    for col in schema.feature_columns:
        if col.kind == "continuous":
            vals = pd.to_numeric(df[col.name], errors="coerce")
            miss[col.name] |= vals.isna()
            numeric[col.name] = vals
    keep = ~miss.any(axis=1)
    dropped = int((~keep).sum())
    df = df[keep]
    n = len(df)
    if n == 0:
        raise SchemaError(f"CSV {path}: no rows left after dropping {dropped} incomplete rows")

    # features
    blocks, names, cont_flags = [], [], []
    for col in schema.feature_columns:
        if col.kind == "continuous":
            blocks.append(numeric[col.name][keep].to_numpy(dtype=np.float64)[:, None])
            names.append(col.name)
            cont_flags.append(True)
        else:
            blocks.append(_encode_closed(df[col.name], col.name, col.categories, onehot=True))
            names.extend(f"{col.name}={c}" for c in col.categories)
            cont_flags.extend([False] * len(col.categories))
    X = np.concatenate(blocks, axis=1)

    # labels
    ycols = []
    for blk in schema.label_blocks:
        src = df[blk.source_column]
        if blk.encoding == "binary":
            pos = set(schema.positive_values[blk.source_column])
            ycols.append(src.isin(pos).to_numpy(dtype=np.int8)[:, None])
        else:
            ycols.append(
                _encode_closed(src, blk.source_column, blk.categories, onehot=True).astype(np.int8)
            )
    Y = np.concatenate(ycols, axis=1)

    groups = _encode_closed(
        df[schema.sensitive_column], schema.sensitive_column,
        schema.sensitive_categories, onehot=False,
    )
    present = np.unique(groups)
    if len(present) < 2:
        raise SchemaError(
            f"sensitive column {schema.sensitive_column!r} has <2 groups present after ingestion"
        )

    return TabularDataset(
        X=X,
        Y=Y,
        groups=groups.astype(np.int64),
        split=np.zeros(n, dtype=np.int8),
        continuous_mask=np.array(cont_flags, dtype=bool),
        n_groups=schema.n_groups,
        feature_names=names,
        label_names=schema.label_names(),
        meta={"dropped_rows": dropped, "source": str(path)},
    )


def _encode_closed(series: pd.Series, colname: str, vocab: list[str], onehot: bool):
    index = {v: i for i, v in enumerate(vocab)}
    codes = np.empty(len(series), dtype=np.int64)
    for i, v in enumerate(series.to_numpy()):
        if v not in index:
            raise SchemaError(f"column {colname!r}: unknown category value {v!r}")
        codes[i] = index[v]
    if not onehot:
        return codes
    out = np.zeros((len(series), len(vocab)), dtype=np.float64)
    out[np.arange(len(series)), codes] = 1.0
    return out


def split(ds: TabularDataset, seed: int, fractions) -> TabularDataset:
    """Assign split tags, stratified by group so each group hits every split.

    ``fractions`` maps the four split names (or gives them in order) to
    positive values summing to 1. Deterministic for a given seed.
    """
    if isinstance(fractions, dict):
        fr = np.array([fractions[k] for k in SPLIT_NAMES], dtype=np.float64)
    else:
        fr = np.asarray(fractions, dtype=np.float64)
    if fr.shape != (4,) or np.any(fr <= 0) or abs(fr.sum() - 1.0) > 1e-9:
        raise ValueError(f"fractions must be 4 positive values summing to 1, got {fr}")

    rng = np.random.default_rng(seed)
    tags = np.empty(ds.n, dtype=np.int8)
    for k in range(ds.n_groups):
        idx = np.flatnonzero(ds.groups == k)
        if len(idx) < len(SPLIT_NAMES):
            raise SplitInfeasibleError(
                f"group {k} has {len(idx)} rows; cannot cover {len(SPLIT_NAMES)} splits"
            )
        counts = _apportion(len(idx), fr)
        perm = rng.permutation(idx)
        start = 0
        for tag, c in enumerate(counts):
            tags[perm[start:start + c]] = tag
            start += c
    return replace(ds, split=tags)


def _apportion(n: int, fractions: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of n*fractions, forcing every part >= 1."""
    ideal = n * fractions
    counts = np.floor(ideal).astype(np.int64)
    order = np.argsort(-(ideal - counts), kind="stable")
    for i in order[: n - counts.sum()]:
        counts[i] += 1
    while np.any(counts == 0):
        counts[np.argmax(counts)] -= 1
        counts[np.argmin(counts)] += 1
    return counts


def standardize(ds: TabularDataset) -> TabularDataset:
    """Z-score continuous features with labeled+unlabeled statistics only.

    Idempotent up to float roundoff: after one pass the training portion has
    mean 0 / std 1, so a second pass is a no-op. Zero-variance columns are
    left unscaled and flagged in meta.
    """
    train = (ds.split == LABELED) | (ds.split == UNLABELED)
    if not train.any():
        raise ValueError("no labeled/unlabeled rows to compute scaling statistics")
    X = ds.X.copy()
    cols = np.flatnonzero(ds.continuous_mask)
    degenerate = []
    for j in cols:
        mu = X[train, j].mean()
        sd = X[train, j].std()
        if sd < 1e-12:
            degenerate.append(int(j))
            continue
        X[:, j] = (X[:, j] - mu) / sd
    meta = dict(ds.meta)
    meta["standardized"] = True
    if degenerate:
        meta["zero_variance_columns"] = degenerate
    return replace(ds, X=X, meta=meta)

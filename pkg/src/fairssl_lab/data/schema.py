"""Dataset schema descriptors (JSON) that pin encodings across runs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

FEATURE_KINDS = ("continuous", "categorical")
LABEL_ENCODINGS = ("binary", "one-hot")
DEFAULT_MISSING_TOKENS = ("", "?", "NA")


class SchemaError(ValueError):
    """A schema file, or a CSV checked against it, violates the contract."""


@dataclass
class FeatureColumn:
    name: str
    kind: str
    categories: list[str] | None = None  # mandatory for categorical


@dataclass
class LabelBlock:
    name: str
    source_column: str
    encoding: str
    categories: list[str] | None = None  # mandatory for one-hot

    @property
    def width(self) -> int:
        return 1 if self.encoding == "binary" else len(self.categories)


@dataclass
class DatasetSchema:
    feature_columns: list[FeatureColumn]
    label_blocks: list[LabelBlock]
    sensitive_column: str
    sensitive_categories: list[str]
    positive_values: dict[str, list[str]] = field(default_factory=dict)
    missing_tokens: tuple[str, ...] = DEFAULT_MISSING_TOKENS

    def __post_init__(self):
        self._validate()

    def _validate(self):
        if not self.label_blocks:
            raise SchemaError("schema needs at least one label block")
        feature_names = [c.name for c in self.feature_columns]
        if len(set(feature_names)) != len(feature_names):
            raise SchemaError("duplicate feature column names")
        if self.sensitive_column in feature_names:
            raise SchemaError(
                f"sensitive column {self.sensitive_column!r} may not be a feature column"
            )
        if len(self.sensitive_categories) < 2:
            raise SchemaError("sensitive column needs at least 2 categories")
        for col in self.feature_columns:
            if col.kind not in FEATURE_KINDS:
                raise SchemaError(f"feature {col.name!r}: unknown kind {col.kind!r}")
            if col.kind == "categorical" and not col.categories:
                raise SchemaError(
                    f"categorical feature {col.name!r} must list its category vocabulary"
                )
        for blk in self.label_blocks:
            if blk.encoding not in LABEL_ENCODINGS:
                raise SchemaError(f"label block {blk.name!r}: unknown encoding {blk.encoding!r}")
            if blk.encoding == "one-hot" and not blk.categories:
                raise SchemaError(
                    f"one-hot label block {blk.name!r} must list its category vocabulary"
                )
            if blk.encoding == "binary" and blk.source_column not in self.positive_values:
                raise SchemaError(
                    f"binary label block {blk.name!r} needs positive_values for "
                    f"column {blk.source_column!r}"
                )

    @property
    def output_dim(self) -> int:
        return sum(blk.width for blk in self.label_blocks)

    @property
    def n_groups(self) -> int:
        return len(self.sensitive_categories)

    def label_names(self) -> list[str]:
        names = []
        for blk in self.label_blocks:
            if blk.encoding == "binary":
                names.append(blk.name)
            else:
                names.extend(f"{blk.name}={c}" for c in blk.categories)
        return names

    def used_columns(self) -> list[str]:
        cols = [c.name for c in self.feature_columns]
        cols.extend(blk.source_column for blk in self.label_blocks)
        cols.append(self.sensitive_column)
        # preserve order, drop duplicates (a column may source several blocks)
        seen = set()
        return [c for c in cols if not (c in seen or seen.add(c))]

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSchema":
        try:
            features = [FeatureColumn(**c) for c in d["feature_columns"]]
            blocks = [LabelBlock(**b) for b in d["label_blocks"]]
            return cls(
                feature_columns=features,
                label_blocks=blocks,
                sensitive_column=d["sensitive_column"],
                sensitive_categories=list(d["sensitive_categories"]),
                positive_values={k: list(v) for k, v in d.get("positive_values", {}).items()},
                missing_tokens=tuple(d.get("missing_tokens", DEFAULT_MISSING_TOKENS)),
            )
        except KeyError as exc:
            raise SchemaError(f"schema is missing required field {exc}") from None
        except TypeError as exc:
            raise SchemaError(f"malformed schema entry: {exc}") from None

    @classmethod
    def from_json(cls, path) -> "DatasetSchema":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def schema_path(name: str):
    """Filesystem path of a bundled schema ('adult', 'compas', 'acsincome')."""
    from importlib import resources

    ref = resources.files("fairssl_lab.schemas").joinpath(f"{name}.json")
    if not ref.is_file():
        bundled = sorted(p.name[:-5] for p in resources.files("fairssl_lab.schemas").iterdir()
                         if p.name.endswith(".json"))
        raise SchemaError(f"no bundled schema {name!r}; available: {bundled}")
    return ref

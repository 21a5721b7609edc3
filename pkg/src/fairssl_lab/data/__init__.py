from .schema import DatasetSchema, FeatureColumn, LabelBlock, SchemaError, schema_path
from .synth import SynthConfig, SynthConfigError, synth_generate
from .tabular import (
    LABELED,
    SPLIT_NAMES,
    TEST,
    UNLABELED,
    VALIDATION,
    SplitInfeasibleError,
    TabularDataset,
    load_csv,
    split,
    standardize,
)

__all__ = [
    "DatasetSchema",
    "FeatureColumn",
    "LabelBlock",
    "SchemaError",
    "schema_path",
    "SynthConfig",
    "SynthConfigError",
    "synth_generate",
    "TabularDataset",
    "SplitInfeasibleError",
    "load_csv",
    "split",
    "standardize",
    "LABELED",
    "UNLABELED",
    "VALIDATION",
    "TEST",
    "SPLIT_NAMES",
]

"""Rule-based entity linking with learnable logic operators."""

from ._core import (
    Dataset,
    FeatureTable,
    Model,
    NetworkError,
    NumericError,
    ValidationError,
    char_jaccard,
    evaluate,
    export_weights,
    featurize,
    format_rules,
    jaro_winkler,
    lev_sim,
    levenshtein,
    link,
    lnn_and,
    lnn_or,
    load_dataset,
    load_feature_table,
    load_model,
    minmax_rescale,
    model_from_json,
    parse_dataset,
    partial_ratio,
    run_cli,
    template_names,
    template_source,
    tnorm_and,
    tnorm_or,
    train,
)

__all__ = [
    "Dataset",
    "FeatureTable",
    "Model",
    "NetworkError",
    "NumericError",
    "ValidationError",
    "char_jaccard",
    "evaluate",
    "export_weights",
    "featurize",
    "format_rules",
    "jaro_winkler",
    "lev_sim",
    "levenshtein",
    "link",
    "lnn_and",
    "lnn_or",
    "load_dataset",
    "load_feature_table",
    "load_model",
    "minmax_rescale",
    "model_from_json",
    "parse_dataset",
    "partial_ratio",
    "run_cli",
    "template_names",
    "template_source",
    "tnorm_and",
    "tnorm_or",
    "train",
]

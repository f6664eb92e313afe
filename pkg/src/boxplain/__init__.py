"""Model-agnostic explainers for numeric-scoring predictive models.

Wrap any predict function with ``explain`` and feed the handle to global
explainers (model_performance, partial_dependence, accumulated_local_effects,
factor_merge, variable_importance) or local ones (ceteris_paribus,
break_down). Results export to canonical JSON and render to SVG.
"""

from .adapters import (
    HttpModelSpec,
    SubprocessModelSpec,
    http_model,
    http_predict,
    subprocess_model,
    subprocess_predict,
)
from .data import (
    ColumnKind,
    GridStrategy,
    Observation,
    TabularDataset,
    ecdf_position,
    load_csv,
    make_grid,
    permute_column,
    quantile,
    substitute,
    write_csv,
)
from .errors import (
    BoxplainError,
    DataError,
    FitError,
    ModelAdapterError,
    OutputError,
    UsageError,
)
from .local_explainers import (
    Attribution,
    CPProfile,
    break_down,
    ceteris_paribus,
    normalize_cp,
    shapley_oracle,
)
from .model import (
    Explainer,
    LinearModel,
    PredictFunction,
    RegressionTree,
    explain,
    fit_linear,
    fit_tree,
    model_from_json,
    model_to_json,
    predict_batch,
)
from .performance import (
    BoxStats,
    LossKind,
    PerformanceResult,
    compare_performance,
    loss,
    model_performance,
    survival_at,
)
from .variable_importance import (
    ImportanceResult,
    compare_importance,
    variable_importance,
)
from .variable_response import (
    MergingPath,
    ProfileCurve,
    accumulated_local_effects,
    factor_merge,
    partial_dependence,
)
from .viz import ChartDocument, export_json, export_json_many, render

__version__ = "0.1.0"

__all__ = [
    "Attribution",
    "BoxStats",
    "BoxplainError",
    "ChartDocument",
    "ColumnKind",
    "CPProfile",
    "DataError",
    "Explainer",
    "FitError",
    "GridStrategy",
    "HttpModelSpec",
    "ImportanceResult",
    "LinearModel",
    "LossKind",
    "MergingPath",
    "ModelAdapterError",
    "Observation",
    "OutputError",
    "PerformanceResult",
    "PredictFunction",
    "ProfileCurve",
    "RegressionTree",
    "SubprocessModelSpec",
    "TabularDataset",
    "UsageError",
    "accumulated_local_effects",
    "break_down",
    "ceteris_paribus",
    "compare_importance",
    "compare_performance",
    "ecdf_position",
    "explain",
    "export_json",
    "export_json_many",
    "factor_merge",
    "fit_linear",
    "fit_tree",
    "http_model",
    "http_predict",
    "load_csv",
    "loss",
    "make_grid",
    "model_from_json",
    "model_performance",
    "model_to_json",
    "normalize_cp",
    "partial_dependence",
    "permute_column",
    "predict_batch",
    "quantile",
    "render",
    "shapley_oracle",
    "subprocess_model",
    "subprocess_predict",
    "substitute",
    "survival_at",
    "variable_importance",
    "write_csv",
]

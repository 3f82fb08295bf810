"""Factor-model ATT estimation for short panels."""

from ._shortpanel import (
    METHODS,
    NumericalError,
    Panel,
    ValidationError,
    did_att,
    estimate_att,
    estimate_json,
    load_panel_csv,
    run_study,
    sc_att,
    sc_weights,
    summarize,
    svd_pinv,
    tikhonov_inverse,
)

__all__ = [
    "METHODS",
    "NumericalError",
    "Panel",
    "ValidationError",
    "did_att",
    "estimate_att",
    "estimate_json",
    "load_panel_csv",
    "run_study",
    "sc_att",
    "sc_weights",
    "summarize",
    "svd_pinv",
    "tikhonov_inverse",
]

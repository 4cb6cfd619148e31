"""Evacuation behavior reconstruction from GPS trajectories."""

from ._evaq import (  # noqa: F401
    ConfigError,
    DataError,
    FitError,
    __version__,
    distance_pdf,
    fit_mle,
    fit_power_law,
    frag_eval,
    generate_scenario,
    haversine_m,
    mape,
    mean_shift,
    pearson_r,
    pool_by_intensity,
    predict_evacuees,
    run_pipeline,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FitError",
    "__version__",
    "distance_pdf",
    "fit_mle",
    "fit_power_law",
    "frag_eval",
    "generate_scenario",
    "haversine_m",
    "mape",
    "mean_shift",
    "pearson_r",
    "pool_by_intensity",
    "predict_evacuees",
    "run_pipeline",
]

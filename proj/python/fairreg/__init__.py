"""Fair regression estimators, group fairness metrics and simulation generators."""

from ._core import (
    Dataset,
    FairregError,
    FitResult,
    __version__,
    cross_validate,
    fit,
    generate_analysis_data,
    generate_population,
    group_residual_difference,
    load_csv,
    make_folds,
    metrics_report,
    net_compensation,
    predictive_ratio,
    r_squared,
    run_cli,
    scenario_design,
    solve_ls,
    solve_ls_eq,
    solve_ls_ineq,
    solve_ls_linear_penalty,
    solve_ls_rank1_penalty,
    truncated_normal,
)

__all__ = [
    "Dataset",
    "FairregError",
    "FitResult",
    "__version__",
    "cross_validate",
    "fit",
    "generate_analysis_data",
    "generate_population",
    "group_residual_difference",
    "load_csv",
    "make_folds",
    "metrics_report",
    "net_compensation",
    "predictive_ratio",
    "r_squared",
    "run_cli",
    "scenario_design",
    "solve_ls",
    "solve_ls_eq",
    "solve_ls_ineq",
    "solve_ls_linear_penalty",
    "solve_ls_rank1_penalty",
    "truncated_normal",
]

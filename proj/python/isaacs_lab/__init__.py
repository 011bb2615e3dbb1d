"""Numerical lab for lower and upper values of stochastic differential games."""

from ._core import (
    AgreementReport,
    BudgetError,
    CheckResult,
    ConfigError,
    ControlGrid,
    ExperimentConfig,
    Game,
    MonotonicityError,
    NumericalError,
    RunSummary,
    StateGrid,
    TimeGrid,
    ValueField,
    cross_method_agreement,
    field_discrepancy,
    list_games,
    load_config,
    make_game,
    parse_config,
    run_experiment,
    solve_isaacs,
    stable_steps,
    subcommands,
    value_iteration,
)

__version__ = "0.1.0"

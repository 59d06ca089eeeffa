from abrsim.experiments.config import ScenarioConfig, load_config, parse_config_text, config_from_dict
from abrsim.experiments.metrics import BoundCoefficients, RunMetrics, check_bound, predict_q_bound
from abrsim.experiments.runner import (
    CSV_COLUMNS,
    bound_for,
    metrics_csv,
    run_many,
    run_scenario,
    run_table,
    simulate,
)
from abrsim.experiments.topology import build_n_source
from abrsim.experiments.presets import table_configs

__all__ = [
    "ScenarioConfig",
    "load_config",
    "parse_config_text",
    "config_from_dict",
    "BoundCoefficients",
    "RunMetrics",
    "check_bound",
    "predict_q_bound",
    "CSV_COLUMNS",
    "bound_for",
    "metrics_csv",
    "run_many",
    "run_scenario",
    "run_table",
    "simulate",
    "build_n_source",
    "table_configs",
]

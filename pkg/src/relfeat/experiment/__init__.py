from relfeat.experiment.harness import (
    ExperimentConfig,
    SummaryRow,
    read_config,
    run_experiment,
    summarize,
    write_plot_spec,
    write_summary,
)
from relfeat.experiment.recipe import FeatureBuilder, parse_recipe
from relfeat.experiment.split import SplitSpec, class_balanced_split

__all__ = [
    "ExperimentConfig",
    "FeatureBuilder",
    "SplitSpec",
    "SummaryRow",
    "class_balanced_split",
    "parse_recipe",
    "read_config",
    "run_experiment",
    "summarize",
    "write_plot_spec",
    "write_summary",
]

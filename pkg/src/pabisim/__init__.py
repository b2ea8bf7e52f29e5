"""Distribution-based bisimulation and bisimulation distances for probabilistic automata."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Automaton,
    Distribution,
    Transition,
    bot_extend,
    convex_combine,
    direct_sum,
    input_enabled_view,
    is_reactive,
    reactive_view,
    validate,
)
from .io import load_model, parse_distribution, parse_model, serialize_model  # noqa: E402
from .dist_metric import MetricParams, Verdict, approx_bisim, bisimilar, d_ap, dist_metric  # noqa: E402
from .state_relations import prob_bisim_partition, state_metric  # noqa: E402

__all__ = [
    "Automaton",
    "Distribution",
    "Transition",
    "MetricParams",
    "Verdict",
    "approx_bisim",
    "bisimilar",
    "bot_extend",
    "convex_combine",
    "d_ap",
    "direct_sum",
    "dist_metric",
    "input_enabled_view",
    "is_reactive",
    "load_model",
    "parse_distribution",
    "parse_model",
    "prob_bisim_partition",
    "reactive_view",
    "serialize_model",
    "state_metric",
    "validate",
]

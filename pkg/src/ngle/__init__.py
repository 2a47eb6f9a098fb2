"""Naming game with learning errors on complex networks."""

from ._rng import RandomStream, derive_seed
from .experiment import (ExperimentPlan, STANDARD_ERROR_RATES, find_threshold, increment_table,
                         interval_histogram, linear_fit, run_trials, sweep)
from .game import (ErrorMode, GameConfig, GameState, Outcome, OutcomeKind, RunResult, init_state,
                   is_converged, run, step)
from .lexicon import Vocabulary, draw_uniform, draw_uniform_excluding
from .metrics import Sampler, TimeSeries, WordCensus, success_rate_block
from .topology import (BarabasiAlbert, ErdosRenyi, Graph, WattsStrogatz, average_degree,
                       average_path_length, clustering_coefficient, generate, is_connected)

__version__ = "0.1.0"

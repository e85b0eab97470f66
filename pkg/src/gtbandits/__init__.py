"""Multi-armed bandits whose arms evolve when triggered through a connectivity graph."""

__version__ = "0.1.0"

from .graph import (CliquePartition, ConnectivityMatrix, block_diagonal_partition, degree_one_count,
                    find_open_triangle, maximal_sub_matrix, minimal_super_matrix, validate)
from .rewards import (Constant, ExponentialDecay, ExponentialRise, GtbInstance, Kind, SaturatingLinear, StepDown,
                      Tabulated, check_assumption, gamma, rising_clique_gadget, rotting_independent_set_gadget,
                      rotting_lower_bound_pair, sample_reward)
from .dynamics import History, RunResult, evaluate_sequence, record_pull, run_episode

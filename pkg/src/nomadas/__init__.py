"""Power-minimizing resource allocation for NOMA over distributed antennas.

The package simulates a single downlink cell where remote radio heads
jointly serve users on OFDM subcarriers. Allocation algorithms assign each
user subcarriers and transmit powers so that every user's rate demand is
met exactly with the least total transmit power, optionally multiplexing
two users per subcarrier through successive interference cancellation.
"""

from .allocators import (ALGORITHMS, AlgorithmConfig, AllocationResult,
                         AllocationState, MutualPair, SinglePair,
                         run_algorithm)
from .audit import AuditReport, audit_result, run_invariant_audit
from .channel import (ChannelTensor, channel_from_csv, channel_to_csv,
                      generate_channel, noise_power, pathloss_gain)
from .harness import (AggregateRow, RunConfig, TrialRecord, aggregate,
                      apply_sweep, read_aggregate_csv, read_trial_csv,
                      run_monte_carlo, write_aggregate_csv, write_trial_csv)
from .mutual_sic import (OpadSolution, PairGains, PairPowers, dpa_adjust,
                         mutual_rates, mutual_sic_feasible, opad_optimize,
                         power_window, rate_condition_terms, sopa_deltas)
from .optimal_pa import (OpaResult, OracleInfeasible, OracleResult,
                         constrained_mutual_pa_oracle,
                         optimal_power_allocation)
from .scenario import Scenario, drop_users, hexagon_contains, load_scenario, \
    place_rrhs
from .solver import NoRoot, SolveReport, solve_scalar, solve_system
from .waterfill import (CandidateRejected, InfeasibleWaterline, ftpa_power,
                        lpo_power, rate_second, rate_single, sole_powers,
                        waterline_add, waterline_from_rate,
                        waterline_rate_shift)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "AlgorithmConfig", "AllocationResult", "AllocationState",
    "AggregateRow", "AuditReport", "CandidateRejected", "ChannelTensor",
    "InfeasibleWaterline", "MutualPair", "NoRoot", "OpaResult",
    "OpadSolution", "OracleInfeasible", "OracleResult", "PairGains",
    "PairPowers", "RunConfig", "Scenario", "SinglePair", "SolveReport",
    "TrialRecord", "aggregate", "apply_sweep", "audit_result",
    "channel_from_csv", "channel_to_csv", "constrained_mutual_pa_oracle",
    "dpa_adjust", "drop_users", "ftpa_power", "generate_channel",
    "hexagon_contains", "load_scenario", "lpo_power", "mutual_rates",
    "mutual_sic_feasible", "noise_power", "opad_optimize",
    "optimal_power_allocation", "pathloss_gain", "place_rrhs",
    "power_window", "rate_condition_terms", "rate_second", "rate_single",
    "read_aggregate_csv", "read_trial_csv", "run_algorithm",
    "run_invariant_audit", "run_monte_carlo", "sole_powers", "sopa_deltas",
    "solve_scalar", "solve_system", "waterline_add", "waterline_from_rate",
    "waterline_rate_shift", "write_aggregate_csv", "write_trial_csv",
]

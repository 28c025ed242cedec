"""Packet-level simulation of Benes switching fabrics under grouped-backpressure
control, with capacity-region machinery and analytic reference checks."""

from .capacity import (LOWER_SINK, UPPER_SINK, RateProfile, build_stabilizing_profile,
                       in_capacity_region, sample_interior_rates, verify_profile)
from .controller import (ControlAction, GbpParams, UtilitySpec, decide_slot,
                         drift_bound_constant, params_for, utility_lower_bound)
from .oracle import (OptimumResult, check_queue_bounds, kkt_residual,
                     single_queue_stability_probe, solve_optimum)
from .queueing import Packet, QueueState, step_counter_queue, transfer_packets
from .simulator import (InvariantViolation, MetricsReport, SimConfig, TrafficConfig,
                        UtilitySwitch, make_config, regulation_view, run,
                        run_scaling_experiment, run_utility_switch)
from .topology import (BenesTopology, InputServer, Node, OutputServer, build_benes)

__version__ = "0.1.0"

"""Time-sharing and power policies for an RF energy-harvesting underlay
cognitive radio link.

The secondary transmitter splits every slot between harvesting from the
primary's signal and transmitting.  :func:`solve_offline` computes the
optimal allocation with full knowledge of the channel sequence,
:func:`solve_myopic` the per-slot policy that spends all energy as it is
harvested.
"""

from ehcr.model import (
    ChannelRealization,
    Instance,
    PolicySolution,
    SystemParams,
    derived_coefficients,
    harvest_profile,
    recover_power,
    slot_rate,
    sum_rate,
)
from ehcr.channel import (
    LinkVariances,
    Scenario,
    read_trace,
    sample_realization,
    scenario_variances,
    write_trace,
)
from ehcr.offline import (
    KktReport,
    SolverConfig,
    depletion_residual,
    kkt_report,
    solve_offline,
    strictly_feasible_start,
)
from ehcr.myopic import myopic_slot, solve_myopic, solve_z
from ehcr.oracle import oracle_myopic_slot, oracle_offline_m1, oracle_offline_m2

__version__ = "0.1.0"

"""IRS-assisted multi-BS mmWave downlink simulator.

Joint optimization of discrete IRS passive beamforming, per-BS power
allocation and user association, with Monte Carlo experiment harness and
brute-force oracles for every optimizer.
"""

from .assoc import (
    Association,
    BenefitMatrix,
    brute_force_assignment,
    build_benefits,
    check_epsilon_cs,
    fra_solve,
)
from .channel import (
    ChannelSet,
    assemble_channel_matrix,
    cascaded_channel,
    complex_gain,
    gen_blocked_direct_channel,
    gen_bs_irs_channel,
    gen_direct_channel,
    gen_irs_user_channel,
    generate_channel_set,
    pathloss_db,
    trial_rng,
    ula_steering,
)
from .config import (
    EnergyModel,
    Geometry,
    SystemConfig,
    load_config_file,
    make_config,
)
from .errors import (
    AssociationInfeasibleError,
    ConfigError,
    DegenerateChannelError,
    IrsimError,
    OracleTooLargeError,
    QoSInfeasibleError,
    RankDeficientError,
)
from .harness import (
    MonteCarloReport,
    TrialResult,
    baseline_no_irs,
    baseline_rpbf_nbua,
    emit_report,
    energy_efficiency,
    gen_scenario,
    outage_probability,
    run_monte_carlo,
)
from .ippu import IppuResult, candidate_rates, ippu, verify_constraints
from .irs_opt import (
    ReflectionState,
    SfpProblem,
    build_sfp,
    f1,
    feasibility_check,
    optimize_irs,
    quad_objective,
    sfp_step,
)
from .power import (
    EigenProfile,
    allocate_power,
    eig_profile,
    oracle_allocate,
    water_level,
)
from .precode import (
    Precoder,
    PowerAllocation,
    rate,
    sinr,
    sum_rate,
    transmit_power,
    zf_precoder,
)

__version__ = "0.1.0"

"""Donor-enhanced Mach-Zehnder interferometry with information recycling.

Number-correlated donor states are transferred onto acceptor modes by
number-conserving channels; the sector engine computes exact signal moments
and phase sensitivities, checked against closed forms and a brute-force
four-mode oracle.
"""

from .channels import (
    BranchChannel,
    JointSectorState,
    apply,
    beamsplitter_channel,
    channel_from_sectors,
    custom_channel,
    dephase,
    random_channel,
)
from .errors import IrmzError
from .estimation import EstimationRun, MeasurementRecord, Records, empirical_sensitivity, estimate_phase, sample_counts, signal_from_record
from .fock import build_spin_operators, mz_rotation, output_distribution
from .moments import (
    SensitivityReport,
    SignalMoments,
    delta_phi_at,
    plain_moments,
    plain_sensitivity,
    recycled_moments,
    recycled_sensitivity,
    spin_moments,
)
from .states import (
    NumberCorrelatedState,
    classical_state,
    custom_state,
    nt_moments,
    nt_variance,
    squeezed_from_mean,
    squeezed_vacuum,
    twin_fock,
)

__version__ = "0.1.0"

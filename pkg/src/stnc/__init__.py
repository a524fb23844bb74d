"""Exact, asymptotic and Monte Carlo SER of space-time network coded relay uplinks."""

from .asymptotic import AsymptoticResult, angle_coefficient, asymptotic_conditional_ser, asymptotic_relay_ser, asymptotic_total_ser, diversity_order
from .config import RunConfig, load_config, parse_config_text, parse_scenario
from .errors import (
    CoincidentPoles,
    InternalConsistency,
    NonIntegerFadingParameter,
    ParseError,
    SingularCorrelation,
    StncError,
    TruncationFailure,
    ValidationError,
)
from .exact import (
    conditional_ser,
    conditional_ser_psk,
    conditional_ser_qam,
    decode_state_probability,
    relay_ser,
    relay_ser_psk,
    relay_ser_qam,
    state_terms,
    total_ser,
)
from .modulation import Modulation
from .montecarlo import McConfig, SerEstimate, awgn_conditional_ser, mc_total_ser, pdf_by_cf_inversion, sample_power_gain
from .network import (
    DecodingState,
    Scenario,
    SnrSet,
    epsilon_for_symbol,
    equivalent_snr_set,
    gain_scenario,
    relay_input_snr,
    uniform_scenario,
)
from .residue import ResidueTable, conditional_pdf, residue_table
from .sweep import SweepSpec, run_sweep

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Chiral waveguide QED simulation and Fano spectroscopy toolkit."""
from .params import (HBAR, Branch, DirectionalRates, Direction, DriveConfig, EmitterConfig, EnergyBranch,
                     EnsembleConfig, derive_rates, power_to_flux, rabi_from_flux)
from .scattering import (BlochState, ScatterResult, bloch_steady_state, compose_transitions, max_phase_shift,
                         phase_shift_report, scatter, scatter_flux, weak_reflection_amplitude,
                         weak_transmission_amplitude)
from .spectrum import Spectrum, SpectrumKind, ingest_csv, write_csv
from .ensemble import (CavityConfig, apply_blinking, differential_reflectivity, differential_transmission,
                       fp_compose, simulate_saturation, simulate_spectrum, wandering_average)
from .fano import FanoFit, FanoParams, fano_contrast, fano_eval, fano_fit, pl_contrast
from .config import Scenario, load_scenario

__version__ = "0.1.0"

"""Cavity-EIT trapped-ion thermometry simulator.

Open-system steady states of a driven cavity coupled to a Lambda-type ion
with its vibrational mode, cavity transmission spectra and their linewidths,
linewidth-to-temperature calibration and inversion, and a sideband physics
verification suite.
"""

__version__ = "0.1.0"

from .hilbert import SpaceDims, Operator, HilbertSpace, build_space, tensor_embed
from .model import (SystemParams, hamiltonian_thermal, hamiltonian_noneit,
                    hamiltonian_sideband, dissipators)
from .dynamics import (DensityMatrix, Liouvillian, build_liouvillian,
                       steady_state, evolve, expect, convergence_check)
from .spectrum import (Spectrum, LorentzianFit, sweep_spectrum, default_grid,
                       analytic_transmission, analytic_linewidth, fit_lorentzian,
                       eit_linewidth, central_window, side_peak_positions,
                       linewidth_map_2d, compare_thermal_nonthermal)
from .thermometry import (CalibrationCurve, InversionResult, HeatingRateReport,
                          nbar_from_temperature, temperature_from_nbar,
                          collective_coupling, suggested_phonon_cutoff,
                          default_temperature_grid, build_calibration,
                          invert_linewidth, heating_rate,
                          multiion_linewidth_scan, multiion_calibration)
from .sideband import (PulseSequence, SidebandTrajectory, RabiFit, RatioResult,
                       bsb_rabi_trace, fit_rabi_frequency, sideband_ratio,
                       run_cooling_sequence, two_level_space, fock_state)

"""Temperature <-> occupancy conversions, calibration curves and inversion.

This is the thermometer half of the package: it maps a measured cavity-EIT
linewidth back to an ion temperature and mean phonon number through a
simulated calibration curve, and covers the multi-ion collective-coupling
scaling and phonon heating rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar, k as k_B

from .dynamics import build_liouvillian, evolve, expect, steady_state, DensityMatrix
from .errors import CalibrationError, InversionRangeError, SolverError, FitError, NoCentralPeakError
from .hilbert import SpaceDims, build_space
from .model import SystemParams
from .spectrum import SPAN_FACTOR, central_window, eit_linewidth, fit_lorentzian, sweep_spectrum

LOW_SENSITIVITY_FACTOR = 5.0


def _omega_abs(omega_sec_mhz: float) -> float:
    """Absolute angular secular frequency in rad/s."""
    if omega_sec_mhz <= 0:
        raise ValueError(f"omega_sec must be > 0 MHz, got {omega_sec_mhz}")
    return 2.0 * math.pi * omega_sec_mhz * 1e6


def nbar_from_temperature(temperature_k: float, omega_sec_mhz: float) -> float:
    """Bose occupancy 1/(exp(hbar*omega/kB*T) - 1) of the secular mode."""
    if temperature_k <= 0:
        raise ValueError(f"temperature must be > 0 K, got {temperature_k}")
    x = hbar * _omega_abs(omega_sec_mhz) / (k_B * temperature_k)
    if x > 700.0:  # exp would overflow; occupancy is numerically zero
        return 0.0
    return 1.0 / math.expm1(x)


def temperature_from_nbar(nbar: float, omega_sec_mhz: float) -> float:
    """Exact inverse of nbar_from_temperature."""
    if nbar <= 0:
        raise ValueError("ground state: temperature unresolvable for nbar <= 0")
    return hbar * _omega_abs(omega_sec_mhz) / (k_B * math.log1p(1.0 / nbar))


def collective_coupling(g: float, n_ions: int) -> float:
    """Effective cavity coupling g*sqrt(N) of N identically coupled ions."""
    if n_ions < 1:
        raise ValueError(f"n_ions must be >= 1, got {n_ions}")
    return g * math.sqrt(n_ions)


def suggested_phonon_cutoff(n_th: float) -> int:
    """Default phonon Fock cutoff for a bath occupancy n_th."""
    return max(12, math.ceil(6.0 * n_th))


def default_temperature_grid(low_k: float = 1e-5, high_k: float = 1e-2,
                             points_per_decade: int = 24) -> np.ndarray:
    """Logarithmic temperature grid; the sensitive region spans decades."""
    decades = math.log10(high_k / low_k)
    n = max(2, round(decades * points_per_decade) + 1)
    return np.logspace(math.log10(low_k), math.log10(high_k), n)


@dataclass
class CalibrationCurve:
    """Monotone map between EIT linewidth and (temperature, occupancy).

    Arrays hold only the successfully solved grid points, ordered by
    temperature; failures are kept as (temperature, message) pairs. The
    monotone range is the longest contiguous index span over which the
    linewidth increases strictly.
    """

    params: SystemParams
    temps: np.ndarray            # K
    nbars: np.ndarray            # bath occupancy from the Bose formula
    nbars_steady: np.ndarray     # <b†b> of the zero-detuning steady state
    linewidths: np.ndarray       # MHz
    monotone_range: tuple[int, int]   # half-open index span [lo, hi)
    failures: list = field(default_factory=list)

    @property
    def monotone_slice(self) -> slice:
        return slice(*self.monotone_range)

    @property
    def linewidth_span(self) -> tuple[float, float]:
        w = self.linewidths[self.monotone_slice]
        return float(w[0]), float(w[-1])


def _longest_increasing_run(values: np.ndarray) -> tuple[int, int]:
    best = (0, 1)
    start = 0
    for i in range(1, len(values)):
        if values[i] <= values[i - 1]:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = i
    if len(values) - start > best[1] - best[0]:
        best = (start, len(values))
    return best


def build_calibration(p: SystemParams, temp_grid, n_points: int = 161,
                      span_factor: float = SPAN_FACTOR,
                      phonon_cutoff=suggested_phonon_cutoff,
                      n_workers: int | None = None) -> CalibrationCurve:
    """Simulate the linewidth for each temperature and assemble the curve.

    Each temperature sets the bath occupancy through the Bose formula; the
    phonon cutoff follows `phonon_cutoff(n_th)`. Points are solved in
    temperature order and the curve is rejected when fewer than four points
    form a strictly increasing linewidth run.
    """
    temp_grid = np.asarray(temp_grid, dtype=float)
    if temp_grid.ndim != 1 or len(temp_grid) < 8:
        raise ValueError("temp_grid must hold at least 8 temperatures")
    if np.any(np.diff(temp_grid) <= 0):
        raise ValueError("temp_grid must be strictly increasing")

    temps, nbars, nbars_ss, widths, failures = [], [], [], [], []
    for temp in temp_grid:
        n_th = nbar_from_temperature(float(temp), p.omega_sec)
        dims = SpaceDims(p.dims.n_atom, p.dims.n_photon, int(phonon_cutoff(n_th)))
        pt = p.replace(n_th=n_th, dims=dims)
        try:
            s = sweep_spectrum(pt, model="thermal", n_points=n_points,
                               span_factor=span_factor, n_workers=n_workers)
            fwhm = fit_lorentzian(s, central_window(s)).fwhm
        except (SolverError, FitError, NoCentralPeakError) as exc:
            failures.append((float(temp), str(exc)))
            continue
        i0 = int(np.argmin(np.abs(s.detunings)))
        temps.append(float(temp))
        nbars.append(n_th)
        nbars_ss.append(float(s.nbar[i0]))
        widths.append(fwhm)

    temps = np.asarray(temps)
    widths = np.asarray(widths)
    if len(temps) < 4:
        raise CalibrationError(
            f"only {len(temps)} calibration points solved; need at least 4")
    mono = _longest_increasing_run(widths)
    if mono[1] - mono[0] < 4:
        raise CalibrationError(
            f"monotone range holds {mono[1] - mono[0]} points, need at least 4")
    return CalibrationCurve(p, temps, np.asarray(nbars), np.asarray(nbars_ss),
                            widths, mono, failures)


@dataclass
class InversionResult:
    temperature: float       # K
    nbar: float
    sensitivity: float       # dT/dFWHM, K per MHz
    low_sensitivity: bool


def invert_linewidth(curve: CalibrationCurve, measured_fwhm: float) -> InversionResult:
    """Map a measured linewidth to temperature by monotone interpolation.

    The reported sensitivity is the local slope dT/dFWHM of the calibration
    segment containing the measurement; it is the scale factor that converts
    linewidth uncertainty into temperature uncertainty. Results in the flat
    low-temperature asymptote are flagged low_sensitivity.
    """
    sl = curve.monotone_slice
    w = curve.linewidths[sl]
    t = curve.temps[sl]
    lo, hi = float(w[0]), float(w[-1])
    if not lo <= measured_fwhm <= hi:
        raise InversionRangeError(
            f"measured linewidth {measured_fwhm:.6g} MHz outside the calibrated "
            f"monotone span [{lo:.6g}, {hi:.6g}] MHz")
    temperature = float(np.interp(measured_fwhm, w, t))
    seg = min(np.searchsorted(w, measured_fwhm, side="right"), len(w) - 1)
    slopes = np.diff(t) / np.diff(w)
    sensitivity = float(slopes[seg - 1])
    low = bool(sensitivity > LOW_SENSITIVITY_FACTOR * float(np.median(slopes)))
    nbar = nbar_from_temperature(temperature, curve.params.omega_sec)
    return InversionResult(temperature, nbar, sensitivity, low)


@dataclass
class HeatingRateReport:
    """Initial phonon-gain slope from the ground state, with both rate candidates."""

    measured: float            # quanta per microsecond
    candidate_single: float    # gamma_b * n_th
    candidate_double: float    # 2 * gamma_b * n_th
    matched_factor: int | None  # 1 or 2, whichever candidate is closer

    def matches(self, factor: int, rel_tol: float = 0.02) -> bool:
        target = {1: self.candidate_single, 2: self.candidate_double}[factor]
        if target == 0:
            return self.measured == 0
        return abs(self.measured - target) / target <= rel_tol


def heating_rate(p: SystemParams, slope_time: float | None = None) -> HeatingRateReport:
    """Measure d<b†b>/dt at n=0 under the phonon bath channels alone.

    The slope is taken by a short finite difference from the vacuum. The two
    analytic candidates gamma_b*n_th and 2*gamma_b*n_th are reported so the
    dissipator convention is pinned empirically.
    """
    single = p.gamma_b * p.n_th
    double = 2.0 * single
    if single == 0.0:
        return HeatingRateReport(0.0, 0.0, 0.0, None)
    dims = SpaceDims(1, 1, max(12, math.ceil(4 * p.n_th)))
    space = build_space(dims)
    channels = [(space.b, p.gamma_b * (p.n_th + 1.0)), (space.b_dag, p.gamma_b * p.n_th)]
    L = build_liouvillian(None, channels)
    if slope_time is None:
        slope_time = 1e-3 / (2.0 * p.gamma_b)  # keep the exponential bend < 0.1%
    rho0 = np.zeros((dims.total, dims.total), dtype=complex)
    rho0[0, 0] = 1.0
    states = evolve(L, DensityMatrix(dims, rho0), [slope_time])
    n_end = expect(space.number_phonon(), states[0]).real
    measured = n_end / slope_time
    factor = 1 if abs(measured - single) <= abs(measured - double) else 2
    return HeatingRateReport(measured, single, double, factor)


@dataclass
class MultiIonPoint:
    n_ions: int
    g_eff: float
    fwhm: float
    fwhm_scaled: float   # fwhm / (2 kappa)


def multiion_linewidth_scan(p: SystemParams, n_ions_list, n_points: int = 121,
                            span_factor: float = SPAN_FACTOR,
                            n_workers: int | None = None) -> list[MultiIonPoint]:
    """EIT linewidth against ion number, scaled by the empty-cavity width."""
    n_ions_list = list(n_ions_list)
    if any(b <= a for a, b in zip(n_ions_list, n_ions_list[1:])):
        raise ValueError("n_ions_list must be strictly increasing")
    out = []
    for n in n_ions_list:
        pn = p.replace(n_ions=int(n))
        fwhm = eit_linewidth(pn, model="thermal", n_points=n_points,
                             span_factor=span_factor, n_workers=n_workers)
        out.append(MultiIonPoint(int(n), pn.g_eff, fwhm, fwhm / (2.0 * p.kappa)))
    return out


def multiion_calibration(p: SystemParams, n_ions_list, temp_grid,
                         n_points: int = 121, span_factor: float = SPAN_FACTOR,
                         phonon_cutoff=suggested_phonon_cutoff,
                         n_workers: int | None = None) -> dict[int, CalibrationCurve]:
    """One calibration curve per ion count, on a shared temperature grid."""
    curves = {}
    for n in n_ions_list:
        curves[int(n)] = build_calibration(
            p.replace(n_ions=int(n)), temp_grid, n_points=n_points,
            span_factor=span_factor, phonon_cutoff=phonon_cutoff,
            n_workers=n_workers)
    return curves

"""Probe-transmission spectra, Lorentzian fits and linewidth scans.

The swept observable is the cavity output kappa * <a†a>. The normalized
transmission divides by the resonant empty-cavity output epsilon^2 / kappa, so
an ideal lossless transparency peak reaches 1. The coherent output
kappa^2 |<a>|^2 / epsilon^2 is kept alongside; it is the quantity the
closed-form expression `analytic_transmission` describes (the photon-number
output additionally contains incoherently scattered light).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .dynamics import Liouvillian, build_liouvillian, expect, steady_state
from .errors import FitError, NoCentralPeakError, SolverError
from .hilbert import build_space
from .model import SystemParams, dissipators, hamiltonian_noneit, hamiltonian_thermal

DEFAULT_GRID_POINTS = 401
SPAN_FACTOR = 2.5
WINDOW_SHRINK = 0.10
FALLBACK_HEIGHT_FRACTION = 0.15
MIN_WINDOW_SAMPLES = 8

_MODELS = ("thermal", "noneit")


@dataclass
class Spectrum:
    """Ordered (detuning, transmission) samples from one probe sweep."""

    detunings: np.ndarray
    transmission: np.ndarray          # kappa * <a†a>, MHz-scaled output
    params: SystemParams
    model: str = "thermal"
    coherent: np.ndarray | None = None   # kappa * |<a>|^2
    nbar: np.ndarray | None = None       # <b†b> per detuning

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        self.transmission = np.asarray(self.transmission, dtype=float)
        if self.detunings.ndim != 1 or len(self.detunings) != len(self.transmission):
            raise ValueError("detunings and transmission must be 1-d and equal length")
        if np.any(np.diff(self.detunings) <= 0):
            raise ValueError("detunings must be strictly increasing")
        if np.any(self.transmission < -1e-12):
            raise ValueError("transmission must be non-negative")

    @property
    def normalization(self) -> float:
        """Resonant empty-cavity output epsilon^2 / kappa used for normalization."""
        return self.params.epsilon ** 2 / self.params.kappa

    @property
    def normalized(self) -> np.ndarray:
        ref = self.normalization
        if ref <= 0:
            return np.zeros_like(self.transmission)
        return self.transmission / ref

    @property
    def normalized_coherent(self) -> np.ndarray | None:
        if self.coherent is None:
            return None
        ref = self.normalization
        if ref <= 0:
            return np.zeros_like(self.coherent)
        return self.coherent / ref


@dataclass
class LorentzianFit:
    center: float
    fwhm: float
    amplitude: float
    offset: float
    rms_residual: float
    fit_window: tuple[float, float]


def effective_control(p: SystemParams, model: str) -> float:
    """Control coupling that sets the spectral span for the given model.

    The motion-free model has a fixed coupling omega_c. In the thermal model
    each occupancy sector n couples at eta*omega_c*sqrt(n+1), so the mean
    square coupling over a thermal distribution is (eta*omega_c)^2*(n_th+1).
    """
    if model == "noneit":
        return p.omega_c
    return p.control_eff * math.sqrt(p.n_th + 1.0)


def default_grid(p: SystemParams, model: str = "thermal",
                 n_points: int = DEFAULT_GRID_POINTS,
                 span_factor: float = SPAN_FACTOR) -> np.ndarray:
    """Uniform detuning grid covering the side peaks and the far wings."""
    span = span_factor * max(math.hypot(p.g_eff, effective_control(p, model)),
                             2.0 * p.kappa)
    return np.linspace(-span, span, n_points)


def _hamiltonian(p: SystemParams, model: str, space):
    if model == "thermal":
        return hamiltonian_thermal(p, space)
    if model == "noneit":
        return hamiltonian_noneit(p, space)
    raise ValueError(f"model must be one of {_MODELS}, got {model!r}")


def _sweep_point(args):
    p, model, delta = args
    sp_ = build_space(p.dims)
    pd = p.replace(delta_p=float(delta))
    L = build_liouvillian(_hamiltonian(pd, model, sp_), dissipators(pd, sp_))
    rho = steady_state(L)
    n_ph = expect(sp_.number_photon(), rho).real
    a_mean = expect(sp_.a, rho)
    n_b = expect(sp_.number_phonon(), rho).real
    return n_ph, a_mean, n_b


def sweep_spectrum(p: SystemParams, grid=None, model: str = "thermal",
                   n_points: int = DEFAULT_GRID_POINTS,
                   span_factor: float = SPAN_FACTOR,
                   n_workers: int | None = None) -> Spectrum:
    """Solve the steady state across the detuning grid and record kappa*<a†a>.

    Results are assembled in grid order regardless of completion order, so the
    output is deterministic for fixed inputs. Solver failures are re-raised
    with the offending detuning attached.
    """
    if model not in _MODELS:
        raise ValueError(f"model must be one of {_MODELS}, got {model!r}")
    if grid is None:
        grid = default_grid(p, model, n_points, span_factor)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-d array")

    n_ph = np.empty(len(grid))
    a_mean = np.empty(len(grid), dtype=complex)
    n_b = np.empty(len(grid))

    if n_workers and n_workers > 1:
        jobs = [(p, model, dd) for dd in grid]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for i, res in enumerate(pool.map(_sweep_point, jobs)):
                n_ph[i], a_mean[i], n_b[i] = res
    else:
        space = build_space(p.dims)
        p0 = p.replace(delta_p=0.0)
        L0 = build_liouvillian(_hamiltonian(p0, model, space), dissipators(p0, space))
        # H(delta) = H(0) + delta * D with D diagonal; reuse the static part
        detuning_op = space.sigma("g", "g") - space.number_photon()
        LD = build_liouvillian(detuning_op)
        nop = space.number_photon()
        aop = space.a
        nbop = space.number_phonon()
        for i, dd in enumerate(grid):
            try:
                rho = steady_state(Liouvillian(L0.dims, L0.super + dd * LD.super))
            except SolverError as exc:
                raise SolverError(f"steady state failed at detuning {dd} MHz: {exc}") from exc
            n_ph[i] = expect(nop, rho).real
            a_mean[i] = expect(aop, rho)
            n_b[i] = expect(nbop, rho).real

    kappa = p.kappa
    return Spectrum(grid, kappa * n_ph, p, model,
                    coherent=kappa * np.abs(a_mean) ** 2, nbar=n_b)


def analytic_transmission(p: SystemParams, delta_p) -> np.ndarray | float:
    """Closed-form normalized transmission of the motion-free model.

    T(D) = kappa^2 / |(D + i kappa) - g_eff^2 chi(D)|^2 with the weak-probe
    three-level response chi(D) = D / (D^2 + i (gamma_eu+gamma_eg) D - omega_c^2).
    Equals the coherent output kappa^2 |<a>|^2 / epsilon^2 in the weak-probe
    limit; T(0) = 1 and T -> 0 far from resonance.
    """
    delta = np.asarray(delta_p, dtype=float)
    gamma = p.gamma_eu + p.gamma_eg
    chi = delta / (delta ** 2 + 1j * gamma * delta - p.omega_c ** 2)
    t = p.kappa ** 2 / np.abs((delta + 1j * p.kappa) - p.g_eff ** 2 * chi) ** 2
    if np.isscalar(delta_p):
        return float(t)
    return t


def _lorentzian(params, x):
    amp, width, center, offset = params
    hw = 0.5 * width
    return amp * hw * hw / ((x - center) ** 2 + hw * hw) + offset


def _local_maxima(y: np.ndarray) -> list[int]:
    # plateau tie-break: count only the left edge of a flat top
    return [i for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] >= y[i + 1]]


def _local_minima(y: np.ndarray) -> list[int]:
    return [i for i in range(1, len(y) - 1) if y[i] < y[i - 1] and y[i] <= y[i + 1]]


def _fit_window_xy(x: np.ndarray, y: np.ndarray, window: tuple[float, float]):
    lo, hi = window
    if not lo < hi:
        raise FitError(f"empty fit window ({lo}, {hi})")
    mask = (x >= lo) & (x <= hi)
    if mask.sum() < MIN_WINDOW_SAMPLES:
        raise FitError(f"fit window contains {int(mask.sum())} samples, "
                       f"need at least {MIN_WINDOW_SAMPLES}")
    xs, ys = x[mask], y[mask]
    n_max = len(_local_maxima(ys))
    if n_max == 0:
        raise FitError("fit window has no interior local maximum")
    if n_max > 1:
        raise FitError(f"fit window has {n_max} local maxima, need exactly one")
    return xs, ys


def fit_lorentzian(s: Spectrum, window: tuple[float, float]) -> LorentzianFit:
    """Damped least-squares Lorentzian fit A*(w/2)^2/((x-x0)^2+(w/2)^2)+c."""
    xs, ys = _fit_window_xy(s.detunings, s.transmission, window)
    return _fit_lorentzian_xy(xs, ys, window)


def _fit_lorentzian_xy(xs: np.ndarray, ys: np.ndarray,
                       window: tuple[float, float]) -> LorentzianFit:
    ymin, ymax = float(ys.min()), float(ys.max())
    imax_candidates = np.flatnonzero(ys == ymax)
    # tie-break plateaus toward the smallest |x|
    imax = int(imax_candidates[np.argmin(np.abs(xs[imax_candidates]))])
    center0 = float(xs[imax])
    amp0 = ymax - ymin
    if amp0 <= 0:
        raise FitError("flat data in fit window")
    half = ymin + 0.5 * amp0
    above = ys >= half
    width0 = float(xs[above][-1] - xs[above][0]) or float(xs[1] - xs[0])
    result = least_squares(
        lambda q: _lorentzian(q, xs) - ys,
        x0=[amp0, width0, center0, ymin],
        method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-12, max_nfev=20000)
    if result.status <= 0:
        raise FitError(f"Lorentzian fit did not converge: {result.status}")
    amp, width, center, offset = result.x
    width = abs(float(width))
    if width <= 0:
        raise FitError("Lorentzian fit collapsed to zero width")
    if not window[0] <= center <= window[1]:
        raise FitError(f"fitted center {center:.4f} escaped the window {window}")
    rms = float(np.sqrt(np.mean(result.fun ** 2)))
    return LorentzianFit(float(center), width, float(amp), float(offset), rms,
                         (float(window[0]), float(window[1])))


def central_window(s: Spectrum) -> tuple[float, float]:
    """Window around the zero-detuning peak for the linewidth fit.

    Primary rule: the interval between the two local minima flanking zero
    detuning, shrunk by 10% on each side to keep the side-peak shoulders out.
    When thermal blending has washed out those minima, falls back to the
    contiguous region around the peak above 15% of the peak-to-floor height.
    """
    x, y = s.detunings, s.transmission
    ic = int(np.argmin(np.abs(x)))
    if 0 < ic < len(x) - 1 and y[ic] < y[ic - 1] and y[ic] < y[ic + 1]:
        raise NoCentralPeakError(
            "transmission at zero detuning is a local minimum; no transparency peak")
    minima = _local_minima(y)
    left = [i for i in minima if x[i] < 0]
    right = [i for i in minima if x[i] > 0]
    if left and right:
        lo, hi = x[max(left)], x[min(right)]
        shrink = WINDOW_SHRINK * (hi - lo)
        return float(lo + shrink), float(hi - shrink)
    floor = float(y.min())
    thr = floor + FALLBACK_HEIGHT_FRACTION * (float(y.max()) - floor)
    ipk = int(np.argmax(y))
    i0 = ipk
    while i0 > 0 and y[i0 - 1] >= thr:
        i0 -= 1
    i1 = ipk
    while i1 < len(y) - 1 and y[i1 + 1] >= thr:
        i1 += 1
    return float(x[i0]), float(x[i1])


def eit_linewidth(p: SystemParams, model: str = "thermal", grid=None,
                  n_points: int = DEFAULT_GRID_POINTS,
                  span_factor: float = SPAN_FACTOR,
                  n_workers: int | None = None,
                  spectrum: Spectrum | None = None) -> float:
    """FWHM of the central transparency peak.

    Sweeps the spectrum (or reuses a provided one), selects the central window
    automatically and fits a Lorentzian. Raises NoCentralPeakError when zero
    detuning is a local minimum of the transmission.
    """
    s = spectrum if spectrum is not None else sweep_spectrum(
        p, grid=grid, model=model, n_points=n_points,
        span_factor=span_factor, n_workers=n_workers)
    window = central_window(s)
    return fit_lorentzian(s, window).fwhm


def side_peak_positions(s: Spectrum) -> tuple[float, float]:
    """Detunings of the largest local maxima left and right of zero."""
    x, y = s.detunings, s.transmission
    maxima = _local_maxima(y)
    left = [i for i in maxima if x[i] < 0]
    right = [i for i in maxima if x[i] > 0]
    if not left or not right:
        raise FitError("spectrum has no side maxima")
    il = max(left, key=lambda i: y[i])
    ir = max(right, key=lambda i: y[i])
    return float(x[il]), float(x[ir])


@dataclass
class MapCell:
    g: float
    omega_c: float
    n_th: float
    fwhm: float          # NaN when the cell failed
    fwhm_ratio: float    # fwhm / (2 kappa), NaN when failed
    error: str = ""


def linewidth_map_2d(base: SystemParams, g_grid, omega_c_grid, n_th_list,
                     n_points: int = 161, span_factor: float = SPAN_FACTOR,
                     phonon_cutoff=None) -> list[MapCell]:
    """EIT linewidth over a (g, omega_c) grid for each thermal occupancy.

    Linewidths are normalized by the empty-cavity width 2*kappa (recorded as
    fwhm_ratio). Failing cells are recorded with NaN instead of aborting the
    scan; the error text is kept on the cell.
    """
    g_grid = _check_grid("g_grid", g_grid)
    omega_c_grid = _check_grid("omega_c_grid", omega_c_grid)
    cells = []
    for n_th in n_th_list:
        dims = base.dims
        if phonon_cutoff is not None:
            dims = type(dims)(dims.n_atom, dims.n_photon, int(phonon_cutoff(n_th)))
        for g in g_grid:
            for oc in omega_c_grid:
                p = base.replace(g=float(g), omega_c=float(oc),
                                 n_th=float(n_th), dims=dims)
                try:
                    fwhm = eit_linewidth(p, model="thermal", n_points=n_points,
                                         span_factor=span_factor)
                    cells.append(MapCell(float(g), float(oc), float(n_th), fwhm,
                                         fwhm / (2.0 * base.kappa)))
                except (SolverError, FitError, NoCentralPeakError) as exc:
                    cells.append(MapCell(float(g), float(oc), float(n_th),
                                         float("nan"), float("nan"), str(exc)))
    return cells


@dataclass
class ComparisonRow:
    omega_c: float
    fwhm_analytic: float
    fwhm_noneit: float
    temperature: float
    n_th: float
    fwhm_thermal: float


def analytic_linewidth(p: SystemParams, n_points: int = DEFAULT_GRID_POINTS,
                       span_factor: float = SPAN_FACTOR) -> float:
    """FWHM of the central peak of the closed-form transmission curve."""
    grid = default_grid(p, "noneit", n_points, span_factor)
    curve = analytic_transmission(p, grid)
    s = Spectrum(grid, curve * p.epsilon ** 2 / p.kappa if p.epsilon > 0 else curve,
                 p, model="noneit")
    return fit_lorentzian(s, central_window(s)).fwhm


def compare_thermal_nonthermal(base: SystemParams, omega_c_grid, temps,
                               n_points: int = 161,
                               span_factor: float = SPAN_FACTOR,
                               phonon_cutoff=None,
                               noneit_dims=None) -> list[ComparisonRow]:
    """Analytic, motion-free and thermal linewidths across a control-power scan.

    Temperatures are in kelvin; each is mapped to a bath occupancy through the
    secular frequency of `base`. The analytic FWHM serves as the reference
    column; thermal rows repeat it for every temperature.
    """
    from .thermometry import nbar_from_temperature, suggested_phonon_cutoff

    omega_c_grid = _check_grid("omega_c_grid", omega_c_grid)
    cutoff = phonon_cutoff or suggested_phonon_cutoff
    if noneit_dims is None:
        noneit_dims = type(base.dims)(3, base.dims.n_photon, 1)
    rows = []
    for oc in omega_c_grid:
        p_oc = base.replace(omega_c=float(oc), eta=1.0)
        fwhm_ana = analytic_linewidth(p_oc)
        fwhm_non = eit_linewidth(p_oc.replace(dims=noneit_dims), model="noneit",
                                 n_points=n_points, span_factor=span_factor)
        for temp in temps:
            n_th = nbar_from_temperature(float(temp), base.omega_sec)
            dims = type(base.dims)(3, base.dims.n_photon, int(cutoff(n_th)))
            p_t = p_oc.replace(n_th=n_th, dims=dims)
            fwhm_th = eit_linewidth(p_t, model="thermal", n_points=n_points,
                                    span_factor=span_factor)
            rows.append(ComparisonRow(float(oc), fwhm_ana, fwhm_non,
                                      float(temp), n_th, fwhm_th))
    return rows


def _check_grid(name: str, grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return grid

"""Sideband verification suite on the two-level-plus-phonon space.

Covers driven sideband Rabi traces, the red/blue excitation ratio against the
n/(n+1) law, and pulsed cooling/heating trajectories. Spontaneous decay is a
single vibration-preserving jump from the excited internal level, applied with
the same 2 A rho A† channel convention as the main model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .dynamics import DensityMatrix, Liouvillian, build_liouvillian, evolve
from .errors import FitError
from .hilbert import HilbertSpace, SpaceDims, build_space
from .model import hamiltonian_sideband

_KINDS = ("bsb", "rsb", "wait")


@dataclass(frozen=True)
class PulseSequence:
    """Piecewise-constant drive program: (kind, duration_us) steps.

    kind is "bsb", "rsb" or "wait"; eta and omega set the drive strength,
    gamma the excited-level decay rate. An empty step list is allowed and
    leaves the state untouched.
    """

    steps: tuple
    eta: float
    omega: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple((str(k), float(t)) for k, t in self.steps))
        for kind, duration in self.steps:
            if kind not in _KINDS:
                raise ValueError(f"unknown pulse kind {kind!r}")
            if duration <= 0:
                raise ValueError(f"pulse durations must be > 0, got {duration}")
        if not 0 <= self.eta < 1:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")
        if self.omega < 0 or self.gamma < 0:
            raise ValueError("omega and gamma must be >= 0")


def two_level_space(n_phonon: int) -> HilbertSpace:
    return build_space(SpaceDims(2, 1, n_phonon))


def fock_state(space: HilbertSpace, level, n_phonon: int) -> DensityMatrix:
    """Pure state |level, n_phonon> on the reduced space."""
    vec = space.basis_vector(level, 0, n_phonon)
    return DensityMatrix(space.dims, np.outer(vec, vec.conj()))


def _decay_channel(space: HilbertSpace, gamma: float):
    return [(space.sigma("u", "e"), gamma)] if gamma > 0 else []


def _liouvillian(space: HilbertSpace, kind: str, eta: float, omega: float,
                 gamma: float) -> Liouvillian:
    channels = _decay_channel(space, gamma)
    if kind == "wait" or eta * omega == 0:
        ham = 0.0 * space.identity
    else:
        ham = hamiltonian_sideband(kind, eta, omega, space.dims, space)
    return build_liouvillian(ham, channels)


@dataclass
class SidebandTrajectory:
    """Populations of every |level, n> state along a pulse program."""

    times: np.ndarray
    pop_u: np.ndarray     # shape (n_times, n_phonon)
    pop_e: np.ndarray

    @property
    def pop_u_total(self) -> np.ndarray:
        return self.pop_u.sum(axis=1)

    @property
    def pop_e_total(self) -> np.ndarray:
        return self.pop_e.sum(axis=1)

    @property
    def mean_phonon(self) -> np.ndarray:
        n = np.arange(self.pop_u.shape[1])
        return (self.pop_u + self.pop_e) @ n

    @property
    def total(self) -> np.ndarray:
        return self.pop_u_total + self.pop_e_total


def _populations(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    n_b = rho.dims.n_phonon
    diag = np.real(np.diag(rho.mat))
    return diag[:n_b].copy(), diag[n_b:].copy()


def bsb_rabi_trace(eta: float, omega: float, gamma: float, n0: int,
                   times, n_phonon: int | None = None) -> np.ndarray:
    """Excited-level population P_e(t) for a blue-sideband drive from |u, n0>."""
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or len(ts) == 0 or np.any(np.diff(ts) <= 0) or ts[0] < 0:
        raise ValueError("times must be non-negative and strictly increasing")
    padded = ts if ts[0] == 0.0 else np.concatenate([[0.0], ts])
    traj = run_cooling_sequence(
        PulseSequence((("bsb", float(padded[-1])),), eta, omega, gamma),
        initial_level="u", initial_phonon=n0,
        n_phonon=n_phonon or n0 + 6, times=padded)
    pe = traj.pop_e_total
    return pe if ts[0] == 0.0 else pe[1:]


@dataclass
class RabiFit:
    """Damped-oscillation fit of an excited-population trace.

    coupling is half the angular oscillation frequency of the population,
    i.e. the sideband coupling matrix element; for a blue sideband drive from
    |u, n> it should equal eta*omega*sqrt(n+1).
    """

    coupling: float
    decay: float
    amplitude: float
    offset: float
    rms_residual: float


def fit_rabi_frequency(times, populations) -> RabiFit:
    """Fit P(t) = A*(1 - cos(2 M t) exp(-G t)) + c and return M and friends."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(populations, dtype=float)
    if len(t) < 16:
        raise FitError("need at least 16 samples to fit an oscillation")
    dt = t[1] - t[0]
    spec = np.abs(np.fft.rfft(y - y.mean()))
    freqs = np.fft.rfftfreq(len(t), dt)
    m0 = np.pi * freqs[1 + int(np.argmax(spec[1:]))]
    if m0 <= 0:
        raise FitError("no oscillation found in the trace")

    def model(q, tt):
        amp, m, g, c = q
        return amp * (1.0 - np.cos(2.0 * m * tt) * np.exp(-g * tt)) + c

    res = least_squares(lambda q: model(q, t) - y,
                        x0=[0.5 * (y.max() - y.min()), m0, 0.05, y.min()],
                        method="lm", xtol=1e-14, ftol=1e-14, max_nfev=20000)
    if res.status <= 0:
        raise FitError(f"Rabi fit did not converge: status {res.status}")
    amp, m, g, c = res.x
    return RabiFit(abs(float(m)), float(g), float(amp), float(c),
                   float(np.sqrt(np.mean(res.fun ** 2))))


@dataclass
class RatioResult:
    n: int
    pulse_time: float
    p_rsb: float
    p_bsb: float
    ratio: float
    p_rsb_avg: float        # time-averaged over the pulse
    p_bsb_avg: float
    ratio_avg: float

    @property
    def theory(self) -> float:
        return self.n / (self.n + 1.0)


def sideband_ratio(n: int, eta: float, omega: float, gamma: float,
                   pulse_time: float | None = None,
                   n_phonon: int | None = None,
                   n_samples: int = 64) -> RatioResult:
    """Excited-population ratio after matched red and blue pulses from |u, n>.

    The default pulse length is the first blue-sideband pi time
    pi / (2 eta omega sqrt(n+1)). Both the end-of-pulse populations and their
    time averages over the pulse are reported.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    coupling = eta * omega * np.sqrt(n + 1.0)
    if pulse_time is None:
        if coupling == 0:
            raise ValueError("pulse_time required when eta*omega is zero")
        pulse_time = float(np.pi / (2.0 * coupling))
    n_b = n_phonon or n + 8
    times = np.linspace(0.0, pulse_time, n_samples)
    pe = {}
    for kind in ("rsb", "bsb"):
        traj = run_cooling_sequence(
            PulseSequence(((kind, pulse_time),), eta, omega, gamma),
            initial_level="u", initial_phonon=n, n_phonon=n_b, times=times)
        pe[kind] = traj.pop_e_total
    p_r, p_b = float(pe["rsb"][-1]), float(pe["bsb"][-1])
    avg_r = float(np.trapezoid(pe["rsb"], times) / pulse_time)
    avg_b = float(np.trapezoid(pe["bsb"], times) / pulse_time)
    ratio = p_r / p_b if p_b > 0 else 0.0
    ratio_avg = avg_r / avg_b if avg_b > 0 else 0.0
    return RatioResult(int(n), pulse_time, p_r, p_b, ratio, avg_r, avg_b, ratio_avg)


def run_cooling_sequence(seq: PulseSequence, rho0: DensityMatrix | None = None,
                         initial_level="u", initial_phonon: int = 0,
                         n_phonon: int | None = None,
                         times=None, samples_per_step: int = 200) -> SidebandTrajectory:
    """Evolve a pulse program and record every |level, n> population over time.

    The state may be given directly as rho0, or as (initial_level,
    initial_phonon) with a phonon cutoff. A custom global `times` array may be
    supplied as long as it spans exactly the total program duration.
    """
    if rho0 is None:
        if n_phonon is None:
            n_phonon = initial_phonon + 6
        space = two_level_space(n_phonon)
        rho0 = fock_state(space, initial_level, initial_phonon)
    else:
        space = build_space(rho0.dims)

    total = sum(t for _, t in seq.steps)
    if not seq.steps:
        pu, pe = _populations(rho0)
        return SidebandTrajectory(np.zeros(1), pu[None, :], pe[None, :])

    if times is not None:
        times = np.asarray(times, dtype=float)
        if abs(times[-1] - total) > 1e-12 or times[0] < 0:
            raise ValueError("times must span [0, total program duration]")

    liouvillians = {kind: _liouvillian(space, kind, seq.eta, seq.omega, seq.gamma)
                    for kind in {k for k, _ in seq.steps}}

    all_t = [np.zeros(1)]
    pu0, pe0 = _populations(rho0)
    all_u, all_e = [pu0[None, :]], [pe0[None, :]]
    rho = rho0
    t_start = 0.0
    for kind, duration in seq.steps:
        t_end = t_start + duration
        if times is not None:
            local = times[(times > t_start + 1e-15) & (times <= t_end + 1e-15)] - t_start
            if len(local) == 0 or abs(local[-1] - duration) > 1e-9:
                local = np.append(local, duration)
        else:
            local = np.linspace(0.0, duration, max(2, samples_per_step))[1:]
        states = evolve(liouvillians[kind], rho, local)
        for st, tt in zip(states, local):
            pu, pe = _populations(st)
            all_t.append(np.array([t_start + tt]))
            all_u.append(pu[None, :])
            all_e.append(pe[None, :])
        rho = states[-1]
        t_start = t_end
    return SidebandTrajectory(np.concatenate(all_t),
                              np.concatenate(all_u, axis=0),
                              np.concatenate(all_e, axis=0))

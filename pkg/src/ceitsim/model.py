"""System parameters, Hamiltonians and dissipation channels.

Units: every rate, coupling and detuning is a plain number in MHz and time is
measured in microseconds (MHz * us = 1), with no factor of 2*pi inserted
anywhere. Only the temperature conversions in `thermometry` use absolute
angular frequencies.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .errors import DimensionError
from .hilbert import HilbertSpace, Operator, SpaceDims, build_space

_RATE_FIELDS = ("kappa", "g", "omega_c", "gamma_eg", "gamma_eu", "gamma_b", "n_th",
                "eta", "epsilon", "omega_sec")


@dataclass(frozen=True)
class SystemParams:
    """All physical settings of one simulation run.

    kappa      cavity field decay rate (MHz)
    g          single-ion cavity coupling (MHz); the collective value g*sqrt(n_ions)
               is what enters the Hamiltonians
    omega_c    control Rabi frequency (MHz)
    gamma_eg   spontaneous decay rate e -> g (MHz)
    gamma_eu   spontaneous decay rate e -> u (MHz)
    gamma_b    phonon damping rate (MHz)
    n_th       mean thermal occupancy of the phonon bath
    eta        Lamb-Dicke parameter; only the product eta*omega_c enters the
               vibration-coupled control term
    epsilon    probe drive amplitude (MHz); defaults to 0.05*kappa (weak probe)
    delta_p    probe detuning (MHz)
    n_ions     number of identically coupled ions
    omega_sec  secular trap frequency (MHz, absolute; used only for the
               temperature <-> occupancy conversion)
    dims       Hilbert-space cutoffs
    """

    kappa: float = 0.4
    g: float = 1.2
    omega_c: float = 1.0
    gamma_eg: float = 0.4
    gamma_eu: float = 0.4
    gamma_b: float = 0.1
    n_th: float = 1.0
    eta: float = 1.0
    epsilon: float = None  # type: ignore[assignment]
    delta_p: float = 0.0
    n_ions: int = 1
    omega_sec: float = 10.0
    dims: SpaceDims = field(default_factory=lambda: SpaceDims(3, 3, 12))

    def __post_init__(self):
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", 0.05 * self.kappa)
        for name in _RATE_FIELDS:
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError(f"n_ions must be an integer >= 1, got {self.n_ions}")

    @property
    def g_eff(self) -> float:
        """Collective cavity coupling g*sqrt(N) for N identically coupled ions."""
        return self.g * math.sqrt(self.n_ions)

    @property
    def control_eff(self) -> float:
        """Effective control coupling eta*omega_c entering the thermal model."""
        return self.eta * self.omega_c

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


def _require_atoms(p_or_dims, n: int, what: str):
    dims = p_or_dims.dims if isinstance(p_or_dims, SystemParams) else p_or_dims
    if dims.n_atom != n:
        raise DimensionError(f"{what} requires n_atom={n}, got {dims.n_atom}")


def hamiltonian_thermal(p: SystemParams, space: HilbertSpace | None = None) -> Operator:
    """Probe-frame Hamiltonian of the cavity-coupled Lambda ion with its vibration.

    Terms: probe detuning on |g> and on the cavity mode, the cavity coupling
    g_eff (a† sigma_ge + a sigma_eg), the vibration-coupled control drive, and
    the coherent probe drive epsilon (a† + a).

    The control drive exchanges one vibrational quantum per internal u <-> e
    transition, coupling |u, n+1> <-> |e, n> with matrix element
    eta*omega_c*sqrt(n+1). A ground-sector ion holding n vibrational quanta
    therefore sees an effective control coupling eta*omega_c*sqrt(n+1), which
    is what makes the transparency window occupancy dependent.
    """
    _require_atoms(p, 3, "hamiltonian_thermal")
    s = space or build_space(p.dims)
    dp, geff, ctrl = p.delta_p, p.g_eff, p.control_eff
    h = dp * s.sigma("g", "g") - dp * s.number_photon()
    h = h + geff * (s.a_dag @ s.sigma("g", "e") + s.a @ s.sigma("e", "g"))
    h = h + ctrl * (s.sigma("e", "u") @ s.b + s.sigma("u", "e") @ s.b_dag)
    h = h + p.epsilon * (s.a_dag + s.a)
    return h


def hamiltonian_noneit(p: SystemParams, space: HilbertSpace | None = None) -> Operator:
    """Motion-free Hamiltonian: the control couples u <-> e at fixed omega_c.

    The phonon factor may have size 1. This is the reference model for a
    point-like ion; its transmission admits the closed-form expression in
    `spectrum.analytic_transmission`.
    """
    _require_atoms(p, 3, "hamiltonian_noneit")
    s = space or build_space(p.dims)
    dp, geff = p.delta_p, p.g_eff
    h = dp * s.sigma("g", "g") - dp * s.number_photon()
    h = h + geff * (s.a_dag @ s.sigma("g", "e") + s.sigma("e", "g") @ s.a)
    h = h + p.omega_c * (s.sigma("u", "e") + s.sigma("e", "u"))
    h = h + p.epsilon * (s.a_dag + s.a)
    return h


def dissipators(p: SystemParams, space: HilbertSpace | None = None) -> list[tuple[Operator, float]]:
    """Jump channels (A, r), each contributing r*(2 A rho A† - A†A rho - rho A†A).

    Channels: cavity loss (a, kappa), spontaneous emission (sigma_ge, gamma_eg)
    and (sigma_ue, gamma_eu), phonon cooling (b, gamma_b*(n_th+1)), and, when
    n_th > 0, phonon heating (b†, gamma_b*n_th).

    Note the convention: with these channels the photon number decays at 2*kappa
    and the phonon occupancy relaxes toward n_th at rate 2*gamma_b.
    """
    _require_atoms(p, 3, "dissipators")
    s = space or build_space(p.dims)
    channels = [
        (s.a, p.kappa),
        (s.sigma("g", "e"), p.gamma_eg),
        (s.sigma("u", "e"), p.gamma_eu),
        (s.b, p.gamma_b * (p.n_th + 1.0)),
    ]
    if p.n_th > 0:
        channels.append((s.b_dag, p.gamma_b * p.n_th))
    return channels


def hamiltonian_sideband(kind: str, eta: float, omega: float, dims: SpaceDims,
                         space: HilbertSpace | None = None) -> Operator:
    """Sideband drive on the reduced two-level-plus-phonon space.

    kind="bsb" couples |u, n> <-> |e, n+1> with element eta*omega*sqrt(n+1);
    kind="rsb" couples |u, n> <-> |e, n-1> with element eta*omega*sqrt(n)
    (so |u, 0> is dark under the red sideband).
    """
    _require_atoms(dims, 2, "hamiltonian_sideband")
    if kind not in ("bsb", "rsb"):
        raise ValueError(f"kind must be 'bsb' or 'rsb', got {kind!r}")
    s = space or build_space(dims)
    if kind == "bsb":
        return eta * omega * (s.sigma("e", "u") @ s.b_dag + s.sigma("u", "e") @ s.b)
    return eta * omega * (s.sigma("e", "u") @ s.b + s.sigma("u", "e") @ s.b_dag)

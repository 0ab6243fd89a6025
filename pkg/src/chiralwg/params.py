"""Physical parameters, unit conventions and directional decay rates.

Units used throughout the package:

=========  ==================
energy     μeV (detunings, splittings, wandering width)
time       ns
rate       ns⁻¹
power      W
flux       photons·ns⁻¹
=========  ==================

The transition centre energy is the single exception and is stored in eV.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

#: Reduced Planck constant in μeV·ns.
HBAR = 0.6582119569
#: Elementary charge in C (J per eV).
ELEMENTARY_CHARGE = 1.602176634e-19

#: Weight of the pure-dephasing rate in the coherence decay,
#: gamma_perp = Gamma/2 + DEPHASING_FACTOR / tau_d.
DEPHASING_FACTOR = 0.5


class Branch(enum.Enum):
    """Zeeman component. SigmaPlus is the high-energy line."""

    SigmaPlus = "sigma_plus"
    SigmaMinus = "sigma_minus"

    @property
    def energy_sign(self) -> int:
        return 1 if self is Branch.SigmaPlus else -1


class EnergyBranch(enum.Enum):
    HighEnergy = "high"
    LowEnergy = "low"

    def to_branch(self) -> Branch:
        return Branch.SigmaPlus if self is EnergyBranch.HighEnergy else Branch.SigmaMinus


class Direction(enum.Enum):
    LtoR = "ltr"
    RtoL = "rtl"

    @property
    def reverse(self) -> "Direction":
        return Direction.RtoL if self is Direction.LtoR else Direction.LtoR


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def energy_to_rate(energy_ueV):
    """Angular frequency in ns⁻¹ for an energy (or detuning) in μeV."""
    return _scalar_or_array(energy_ueV) / HBAR


def rate_to_energy(rate):
    return rate * HBAR


def _check_unit_interval(name, value, lo=0.0, hi=1.0):
    if not (lo <= value <= hi):
        raise ValueError(f"{name}={value!r} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class EmitterConfig:
    """Parameters of a single two-level emitter with two Zeeman branches.

    ``beta_d_LR`` is the forward fraction of the preferred branch under
    left-to-right driving; ``beta_d_RL`` the same for right-to-left driving.
    ``strong_branch`` names the Zeeman line preferentially coupled to the
    left-to-right mode.
    """

    beta: float = 0.7
    beta_d_LR: float = 0.95
    beta_d_RL: float = 0.95
    lifetime_tau: float = 1.0
    dephasing_tau_d: float = 0.8
    center_energy: float = 1.3
    zeeman_splitting: float = 160.0
    strong_branch: EnergyBranch = EnergyBranch.HighEnergy

    def __post_init__(self):
        _check_unit_interval("beta", self.beta)
        _check_unit_interval("beta_d_LR", self.beta_d_LR, 0.5)
        _check_unit_interval("beta_d_RL", self.beta_d_RL, 0.5)
        if not self.lifetime_tau > 0:
            raise ValueError(f"lifetime_tau must be > 0, got {self.lifetime_tau!r}")
        if not self.dephasing_tau_d > 0:
            raise ValueError(f"dephasing_tau_d must be > 0, got {self.dephasing_tau_d!r}")
        if not self.center_energy > 0:
            raise ValueError(f"center_energy must be > 0, got {self.center_energy!r}")
        if not self.zeeman_splitting >= 0:
            raise ValueError(f"zeeman_splitting must be >= 0, got {self.zeeman_splitting!r}")
        if not isinstance(self.strong_branch, EnergyBranch):
            object.__setattr__(self, "strong_branch", EnergyBranch(self.strong_branch))

    def branch_offset(self, branch: Branch) -> float:
        """Resonance of ``branch`` relative to the centre energy, in μeV."""
        return 0.5 * self.zeeman_splitting * branch.energy_sign

    def beta_d(self, direction: Direction) -> float:
        return self.beta_d_LR if direction is Direction.LtoR else self.beta_d_RL

    def preferred_branch(self, direction: Direction) -> Branch:
        """Branch that emits mostly along ``direction``."""
        strong = self.strong_branch.to_branch()
        if direction is Direction.LtoR:
            return strong
        return Branch.SigmaMinus if strong is Branch.SigmaPlus else Branch.SigmaPlus


@dataclass(frozen=True)
class EnsembleConfig:
    """Inhomogeneous environment: spectral wandering and blinking.

    The default quadrature order is set by the ratio of wandering width to
    homogeneous linewidth (about 5 for the default emitter), not by cost.
    """

    wandering_sigma: float = 4.0
    p_dark: float = 0.25
    quadrature_order: int = 1601

    def __post_init__(self):
        if not self.wandering_sigma >= 0:
            raise ValueError(f"wandering_sigma must be >= 0, got {self.wandering_sigma!r}")
        _check_unit_interval("p_dark", self.p_dark)
        order = self.quadrature_order
        if isinstance(order, bool) or not isinstance(order, (int, np.integer)) or order < 1 or order % 2 == 0:
            raise ValueError(f"quadrature_order must be a positive odd integer, got {order!r}")


@dataclass(frozen=True)
class DriveConfig:
    direction: Direction = Direction.LtoR
    power_in_waveguide: float = 1e-12
    laser_detuning_grid: tuple = field(default_factory=lambda: tuple(np.linspace(-150.0, 150.0, 1201)))

    def __post_init__(self):
        if not isinstance(self.direction, Direction):
            object.__setattr__(self, "direction", Direction(self.direction))
        if not self.power_in_waveguide >= 0:
            raise ValueError(f"power_in_waveguide must be >= 0, got {self.power_in_waveguide!r}")
        grid = tuple(float(x) for x in self.laser_detuning_grid)
        if len(grid) == 0:
            raise ValueError("laser_detuning_grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("laser_detuning_grid must be strictly increasing")
        object.__setattr__(self, "laser_detuning_grid", grid)

    @property
    def detunings(self) -> np.ndarray:
        return np.asarray(self.laser_detuning_grid, dtype=float)


@dataclass(frozen=True)
class DirectionalRates:
    """Decay-rate partition for one branch under one drive direction (ns⁻¹)."""

    gamma_total: float
    gamma_f: float
    gamma_b: float
    gamma_loss: float
    gamma_perp: float

    def __post_init__(self):
        parts = (self.gamma_f, self.gamma_b, self.gamma_loss)
        if self.gamma_total <= 0 or min(parts) < 0:
            raise ValueError(f"rates must be non-negative with gamma_total > 0: {self}")
        if abs(sum(parts) - self.gamma_total) > 1e-12 * self.gamma_total:
            raise ValueError(
                f"gamma_f + gamma_b + gamma_loss = {sum(parts)!r} != gamma_total = {self.gamma_total!r}"
            )
        if self.gamma_perp < 0.5 * self.gamma_total * (1 - 1e-12):
            raise ValueError(f"gamma_perp={self.gamma_perp!r} below gamma_total/2")

    def swapped(self) -> "DirectionalRates":
        """Same emitter seen from the opposite input port."""
        return DirectionalRates(self.gamma_total, self.gamma_b, self.gamma_f, self.gamma_loss, self.gamma_perp)

    @property
    def linewidth_ueV(self) -> float:
        """Homogeneous full width at half maximum in μeV."""
        return 2.0 * rate_to_energy(self.gamma_perp)


def derive_rates(
    emitter: EmitterConfig,
    branch: Branch,
    direction: Direction,
    dephasing_factor: float = DEPHASING_FACTOR,
) -> DirectionalRates:
    """Partition the radiative decay of ``branch`` for a drive along ``direction``.

    ``gamma_f`` is the decay into the mode co-propagating with the drive and
    ``gamma_b`` into the counter-propagating mode.
    """
    beta = emitter.beta
    beta_d = emitter.beta_d(direction)
    _check_unit_interval("beta", beta)
    _check_unit_interval("beta_d", beta_d)

    gamma = 1.0 / emitter.lifetime_tau
    strong = beta * beta_d * gamma
    weak = beta * (1.0 - beta_d) * gamma
    if branch is emitter.preferred_branch(direction):
        gamma_f, gamma_b = strong, weak
    else:
        gamma_f, gamma_b = weak, strong
    gamma_loss = (1.0 - beta) * gamma
    # tau_d = inf means no pure dephasing
    gamma_perp = 0.5 * gamma + dephasing_factor / emitter.dephasing_tau_d
    return DirectionalRates(gamma, gamma_f, gamma_b, gamma_loss, gamma_perp)


def power_to_flux(power, photon_energy_eV):
    """Photon flux in photons·ns⁻¹ for an optical power in W."""
    if np.any(np.asarray(power) < 0):
        raise ValueError("power must be >= 0")
    if not photon_energy_eV > 0:
        raise ValueError("photon_energy must be > 0")
    return _scalar_or_array(power) / (photon_energy_eV * ELEMENTARY_CHARGE) * 1e-9


def flux_to_power(flux, photon_energy_eV):
    return flux * photon_energy_eV * ELEMENTARY_CHARGE * 1e9


def rabi_from_flux(flux, gamma_f):
    """Rabi frequency (ns⁻¹) of a waveguide drive with photon flux ``flux``."""
    return _scalar_or_array(2.0 * np.sqrt(gamma_f * np.asarray(flux, dtype=float)))


def flux_from_rabi(omega, gamma_f):
    if gamma_f == 0:
        return math.inf if np.any(np.asarray(omega) > 0) else 0.0
    return _scalar_or_array(np.asarray(omega, dtype=float) ** 2 / (4.0 * gamma_f))

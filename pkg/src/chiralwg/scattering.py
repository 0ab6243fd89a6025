"""Steady-state scattering of a driven two-level emitter in a waveguide.

All functions broadcast over numpy arrays of detuning (μeV) and drive.
Sign conventions: the Bloch coherence obeys
``<σ⁻> (γ⊥ + iΔ) = i (Ω/2) <σz>`` and the co-propagating output field is
``a_out = a_in − i √γ_f <σ⁻>``, which gives the weak-drive transmission
``t(Δ) = 1 − γ_f / (γ⊥ + iΔ)`` with Δ in ns⁻¹.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .params import DirectionalRates, energy_to_rate, rate_to_energy


@dataclass(frozen=True)
class BlochState:
    sigma_minus: np.ndarray
    population: np.ndarray
    inversion: np.ndarray


@dataclass(frozen=True)
class ScatterResult:
    """Power and amplitude response for a drive entering one waveguide port.

    ``T``, ``R`` and ``L`` are fractions of the input photon flux that leave
    forward, backward and into free space. ``t_coherent``/``r_coherent`` are
    the coherent field amplitudes normalised to the input field.
    """

    t_coherent: np.ndarray
    r_coherent: np.ndarray
    T: np.ndarray
    R: np.ndarray
    L: np.ndarray

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.t_coherent)


def _inversion(delta_ns, omega_sq, rates):
    gp = rates.gamma_perp
    k = omega_sq * gp / (gp**2 + delta_ns**2)
    return k, -rates.gamma_total / (rates.gamma_total + k)


def bloch_steady_state(delta, omega, rates: DirectionalRates) -> BlochState:
    """Closed-form steady state of the driven, dephased two-level system.

    Parameters
    ----------
    delta : array_like
        Laser detuning from the transition in μeV.
    omega : array_like
        Rabi frequency in ns⁻¹.
    rates : DirectionalRates
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be >= 0")
    dns = energy_to_rate(delta)
    k, inv = _inversion(dns, omega**2, rates)
    pop = k / (2.0 * (rates.gamma_total + k))
    sm = 1j * (omega / 2.0) * inv / (rates.gamma_perp + 1j * dns)
    return BlochState(sm, pop, inv)


def weak_transmission_amplitude(delta, rates: DirectionalRates):
    """Linear-response forward amplitude ``1 − γ_f / (γ⊥ + iΔ)``."""
    dns = energy_to_rate(delta)
    return 1.0 - rates.gamma_f / (rates.gamma_perp + 1j * dns)


def weak_reflection_amplitude(delta, rates: DirectionalRates):
    """Linear-response backward amplitude ``−√(γ_f γ_b) / (γ⊥ + iΔ)``."""
    dns = energy_to_rate(delta)
    return -math.sqrt(rates.gamma_f * rates.gamma_b) / (rates.gamma_perp + 1j * dns)


def scatter_flux(delta, flux, rates: DirectionalRates) -> ScatterResult:
    """Scattering at input photon flux ``flux`` (photons·ns⁻¹).

    Quantities are formed per unit input flux, so ``flux = 0`` returns the
    linear-response limit without special casing. In that limit the
    forward power still carries an incoherent part whenever γ⊥ > Γ/2.
    """
    flux = np.asarray(flux, dtype=float)
    if np.any(flux < 0):
        raise ValueError("flux must be >= 0")
    g, gf, gb, gl, gp = (rates.gamma_total, rates.gamma_f, rates.gamma_b,
                         rates.gamma_loss, rates.gamma_perp)
    dns = energy_to_rate(delta)
    lor = gp**2 + dns**2
    k, inv = _inversion(dns, 4.0 * gf * flux, rates)

    # <σ⁻>/a_in, finite as flux -> 0
    sm_per_field = 1j * math.sqrt(gf) * inv / (gp + 1j * dns)
    t = 1.0 - 1j * math.sqrt(gf) * sm_per_field
    r = -1j * math.sqrt(gb) * sm_per_field
    pop_per_flux = 2.0 * gf * gp / (lor * (g + k))
    coh_per_flux = np.abs(sm_per_field) ** 2

    T = np.abs(t) ** 2 + gf * (pop_per_flux - coh_per_flux)
    R = gb * pop_per_flux
    L = gl * pop_per_flux
    return ScatterResult(t, r, T, R, L)


def scatter(delta, omega, rates: DirectionalRates) -> ScatterResult:
    """Scattering for a drive specified by its Rabi frequency.

    The input flux is ``Ω² / (4 γ_f)``; an emitter with ``γ_f = 0`` cannot be
    driven through the waveguide, so a finite Ω is rejected for it.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be >= 0")
    if rates.gamma_f == 0:
        if np.any(omega > 0):
            raise ValueError("finite Rabi frequency with gamma_f = 0 implies zero input flux")
        flux = np.zeros_like(omega)
    else:
        flux = omega**2 / (4.0 * rates.gamma_f)
    return scatter_flux(delta, flux, rates)


def compose_transitions(plus: ScatterResult, minus: ScatterResult, *,
                        splitting=None, linewidth=None) -> ScatterResult:
    """Combine two spectrally separated branches seen by the same drive.

    Amplitudes and transmitted powers multiply, reflected powers add.
    ``splitting`` and ``linewidth`` (μeV) only feed a validity warning.
    """
    if splitting is not None and linewidth is not None and splitting < 10.0 * linewidth:
        warnings.warn(
            f"Zeeman splitting {splitting:g} ueV is below 10x the linewidth {linewidth:g} ueV; "
            "independent-branch composition is approximate",
            RuntimeWarning,
            stacklevel=2,
        )
    T = plus.T * minus.T
    R = plus.R + minus.R
    return ScatterResult(
        t_coherent=plus.t_coherent * minus.t_coherent,
        r_coherent=plus.r_coherent + minus.r_coherent,
        T=T,
        R=R,
        L=1.0 - T - R,
    )


@dataclass(frozen=True)
class PhaseShift:
    delta_phi: float
    detuning_ueV: float
    abs_t: float


def phase_shift_report(rates: DirectionalRates, grid_points: int = 4001) -> PhaseShift:
    """Largest weak-drive transmission phase and where it occurs.

    A dense grid brackets the maximum of ``|arg t|`` over Δ ≥ 0, then a
    golden-section search refines it.
    """
    gf, gp = rates.gamma_f, rates.gamma_perp
    if gf >= gp:
        return PhaseShift(math.pi, 0.0, abs(1.0 - gf / gp))

    def neg_phase(dns):
        return -abs(np.angle(1.0 - gf / (gp + 1j * dns)))

    dns = np.concatenate([[0.0], np.geomspace(1e-6 * gp, 1e3 * gp, grid_points)])
    vals = -np.abs(np.angle(1.0 - gf / (gp + 1j * dns)))
    i = int(np.argmin(vals))
    if 0 < i < len(dns) - 1:
        res = optimize.minimize_scalar(neg_phase, bracket=(dns[i - 1], dns[i], dns[i + 1]),
                                       method="golden", tol=1e-10)
        best = float(res.x)
    else:
        best = float(dns[i])
    t = 1.0 - gf / (gp + 1j * best)
    return PhaseShift(float(abs(np.angle(t))), float(rate_to_energy(best)), float(abs(t)))


def max_phase_shift(rates: DirectionalRates) -> float:
    """Maximum single-photon phase shift (rad) imparted in transmission."""
    return phase_shift_report(rates).delta_phi

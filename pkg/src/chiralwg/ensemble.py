"""Environment around the homogeneous emitter and the full spectrum pipeline.

Covers the weak Fabry-Pérot cavity formed by the two out-couplers,
Gaussian spectral wandering of the transition (Gauss-Hermite quadrature),
blinking, and the ON/OFF differential signals.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

from .params import (Branch, DirectionalRates, Direction, DriveConfig, EmitterConfig, EnsembleConfig,
                     derive_rates, energy_to_rate, power_to_flux)
from .scattering import compose_transitions, scatter_flux, weak_reflection_amplitude, weak_transmission_amplitude
from .spectrum import Spectrum, SpectrumKind

# Detunings per quadrature batch; bounds the (offsets x grid) temporaries.
_CHUNK = 256


@dataclass(frozen=True)
class CavityConfig:
    """Weak Fabry-Pérot formed by two identical partially reflecting couplers.

    Reflectivity and transmissivity are field amplitudes. The round-trip
    phase is ``round_trip_phase_at_center + round_trip_time * ω`` with ω the
    laser detuning in ns⁻¹.
    """

    mirror_reflectivity: float = 0.3
    mirror_transmissivity: float = math.sqrt(1 - 0.3**2)
    round_trip_phase_at_center: float = 0.0
    round_trip_time: float = 0.0
    emitter_position_phase: float = 0.0

    def __post_init__(self):
        r, t = self.mirror_reflectivity, self.mirror_transmissivity
        if not 0 <= r < 1:
            raise ValueError(f"mirror_reflectivity={r!r} outside [0, 1)")
        if not t >= 0:
            raise ValueError(f"mirror_transmissivity={t!r} must be >= 0")
        if r * r + t * t > 1 + 1e-12:
            raise ValueError(f"mirror_reflectivity**2 + mirror_transmissivity**2 = {r * r + t * t!r} > 1")

    def round_trip_phase(self, detunings):
        return self.round_trip_phase_at_center + self.round_trip_time * energy_to_rate(detunings)


# --------------------------------------------------------------------------
# two-port scattering matrices, stored as (r_left, t_lr, t_rl, r_right)

def _star(a, b):
    """Redheffer star product: element ``a`` on the left, ``b`` on the right."""
    ar_l, at_lr, at_rl, ar_r = a
    br_l, bt_lr, bt_rl, br_r = b
    denom = 1.0 - ar_r * br_l
    return (
        ar_l + at_rl * at_lr * br_l / denom,
        at_lr * bt_lr / denom,
        bt_rl * at_rl / denom,
        br_r + bt_lr * bt_rl * ar_r / denom,
    )


def _propagation(phase):
    p = np.exp(1j * phase)
    z = np.zeros_like(p)
    return (z, p, p, z)


def _mirror(cavity: CavityConfig, shape, inner_face_left: bool):
    r = np.full(shape, cavity.mirror_reflectivity, dtype=complex)
    t = np.full(shape, cavity.mirror_transmissivity, dtype=complex)
    # reflection sign flips between faces so a lossless mirror is unitary
    if inner_face_left:
        return (r, t, t, -r)
    return (-r, t, t, r)


def fp_compose(t_emitter, r_emitter, cavity: CavityConfig, detunings, t_emitter_reverse=None):
    """Embed an emitter two-port between the cavity mirrors.

    Parameters
    ----------
    t_emitter, r_emitter : array_like of complex
        Emitter forward transmission and reflection per detuning.
    cavity : CavityConfig
    detunings : array_like
        Laser detunings in μeV, used for the cavity phase dispersion.
    t_emitter_reverse : array_like of complex, optional
        Transmission for light arriving from the right. Defaults to
        ``t_emitter`` (reciprocal emitter).

    Returns
    -------
    t_sys, r_sys : ndarray of complex
        System amplitudes for left incidence with the free-propagation
        phase between mirrors and emitter removed, so an absent cavity
        returns the emitter amplitudes unchanged.
    """
    detunings = np.asarray(detunings, dtype=float)
    t_e = np.broadcast_to(np.asarray(t_emitter, dtype=complex), np.broadcast_shapes(np.shape(t_emitter), detunings.shape))
    r_e = np.broadcast_to(np.asarray(r_emitter, dtype=complex), t_e.shape)
    t_rev = t_e if t_emitter_reverse is None else np.broadcast_to(np.asarray(t_emitter_reverse, dtype=complex), t_e.shape)
    shape = t_e.shape

    theta = np.broadcast_to(cavity.round_trip_phase(detunings), shape)
    dispersion = theta - cavity.round_trip_phase_at_center
    phi_left = cavity.emitter_position_phase + 0.25 * dispersion
    phi_right = 0.5 * cavity.round_trip_phase_at_center - cavity.emitter_position_phase + 0.25 * dispersion

    system = _mirror(cavity, shape, inner_face_left=False)
    for element in (_propagation(phi_left), (r_e, t_e, t_rev, r_e), _propagation(phi_right),
                    _mirror(cavity, shape, inner_face_left=True)):
        system = _star(system, element)
    r_sys, t_sys = system[0], system[1]

    t_sys = t_sys * np.exp(-1j * (phi_left + phi_right))
    r_sys = r_sys * np.exp(-2j * phi_left)
    if np.any(np.abs(t_sys) ** 2 > 1 + 1e-9):
        raise ValueError("composed transmission exceeds unity; check mirror parameters")
    return t_sys, r_sys


def airy_transmission(cavity: CavityConfig, detunings):
    """Power transmission of the empty cavity."""
    r2 = cavity.mirror_reflectivity**2
    t2 = cavity.mirror_transmissivity**2
    theta = cavity.round_trip_phase(detunings)
    return t2**2 / (1 + r2**2 - 2 * r2 * np.cos(theta))


# --------------------------------------------------------------------------
# ensemble averages

@functools.lru_cache(maxsize=16)
def _hermite_rule(order: int):
    x, w = roots_hermite(order)
    return x, w / math.sqrt(math.pi)


def wandering_offsets(sigma: float, order: int):
    """Centre-frequency offsets (μeV) and weights of the Gaussian average."""
    if sigma == 0:
        return np.zeros(1), np.ones(1)
    x, w = _hermite_rule(order)
    return math.sqrt(2.0) * sigma * x, w


def wandering_average(spectrum_fn, sigma: float, order: int):
    """Average ``spectrum_fn`` over a Gaussian displacement of the emitter centre.

    ``spectrum_fn`` maps a 1-D array of centre offsets (μeV) to an array
    whose leading axis runs over those offsets. ``sigma`` is the standard
    deviation in μeV.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if order < 1:
        raise ValueError("order must be >= 1")
    if sigma == 0:
        return np.asarray(spectrum_fn(np.zeros(1)))[0]
    offsets, weights = wandering_offsets(sigma, order)
    values = np.asarray(spectrum_fn(offsets))
    return np.tensordot(weights, values, axes=(0, 0))


def monte_carlo_average(spectrum_fn, sigma: float, samples: int, rng=None, batch: int = 100_000):
    """Monte-Carlo counterpart of :func:`wandering_average`.

    Returns ``(mean, standard_error)``.
    """
    rng = np.random.default_rng(rng)
    total = total_sq = 0.0
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        vals = np.asarray(spectrum_fn(rng.normal(0.0, sigma, n)))
        total = total + vals.sum(axis=0)
        total_sq = total_sq + (vals**2).sum(axis=0)
        done += n
    mean = total / samples
    var = np.maximum(total_sq / samples - mean**2, 0.0)
    return mean, np.sqrt(var / samples)


def apply_blinking(bright: Spectrum, dark_baseline: Spectrum, p_dark: float) -> Spectrum:
    """Mix the bright response with the emitter-absent response."""
    if not 0 <= p_dark <= 1:
        raise ValueError(f"p_dark={p_dark!r} outside [0, 1]")
    bright.check_aligned(dark_baseline)
    values = (1.0 - p_dark) * bright.values + p_dark * dark_baseline.values
    return bright.with_values(values)


def differential_transmission(on: Spectrum, off: Spectrum) -> Spectrum:
    """ΔT = (on − off) / off."""
    on.check_aligned(off)
    if np.any(off.values <= 0):
        raise ValueError("OFF transmission must be strictly positive")
    return on.with_values((on.values - off.values) / off.values, SpectrumKind.DeltaT)


def differential_reflectivity(r_on: Spectrum, r_off: Spectrum, t_off: Spectrum) -> Spectrum:
    """ΔR = (R_on − R_off) / T_off; normalised by the transmitted baseline."""
    r_on.check_aligned(r_off)
    r_on.check_aligned(t_off)
    if np.any(t_off.values <= 0):
        raise ValueError("OFF transmission must be strictly positive")
    return r_on.with_values((r_on.values - r_off.values) / t_off.values, SpectrumKind.DeltaR)


# --------------------------------------------------------------------------
# pipeline

def branch_rates(emitter: EmitterConfig, direction: Direction) -> dict:
    return {b: derive_rates(emitter, b, direction) for b in Branch}


def _saturating_response(emitter, direction, flux, detunings):
    """Bright (T, R) as a function of centre offset, for :func:`wandering_average`."""
    rates = branch_rates(emitter, direction)
    linewidth = max(r.linewidth_ueV for r in rates.values())
    if emitter.zeeman_splitting < 10 * linewidth:
        warnings.warn(
            f"Zeeman splitting {emitter.zeeman_splitting:g} ueV is below 10x the linewidth "
            f"{linewidth:g} ueV; independent-branch composition is approximate",
            RuntimeWarning, stacklevel=3)

    def response(offsets):
        shifted = detunings[None, :] - offsets[:, None]
        parts = [scatter_flux(shifted - emitter.branch_offset(b), flux, rates[b]) for b in Branch]
        combined = compose_transitions(*parts)
        return np.stack([combined.T, combined.R], axis=1)

    return response


def _emitter_smatrix(emitter, direction, delta):
    """Weak-drive two-port of both branches in series at one position."""
    rates = branch_rates(emitter, direction)
    total = None
    for b in Branch:
        d = delta - emitter.branch_offset(b)
        fwd = rates[b]
        r = weak_reflection_amplitude(d, fwd)
        s = (r, weak_transmission_amplitude(d, fwd), weak_transmission_amplitude(d, fwd.swapped()), r)
        total = s if total is None else _star(total, s)
    return total


def _cavity_response(emitter, direction, cavity, detunings):
    def response(offsets):
        shifted = detunings[None, :] - offsets[:, None]
        r_e, t_e, t_rev, _ = _emitter_smatrix(emitter, direction, shifted)
        t_sys, r_sys = fp_compose(t_e, r_e, cavity, np.broadcast_to(detunings, shifted.shape), t_rev)
        return np.stack([np.abs(t_sys) ** 2, np.abs(r_sys) ** 2], axis=1)

    return response


def _averaged(response, detunings, ensemble: EnsembleConfig):
    out = np.empty((2, len(detunings)))
    for start in range(0, len(detunings), _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[:, sl] = wandering_average(response(detunings[sl]), ensemble.wandering_sigma,
                                       ensemble.quadrature_order)
    return out


def simulate_spectrum(emitter: EmitterConfig, ensemble: EnsembleConfig, drive: DriveConfig,
                      cavity: CavityConfig | None = None, differential: bool = True, digest: str | None = None):
    """Transmission and reflection spectra of the full model.

    Without a cavity the saturating solver is used at the drive power. With
    a cavity the emitter is treated in linear response and the drive power
    only labels the output.

    Returns
    -------
    (Spectrum, Spectrum)
        ``(ΔT, ΔR)`` when ``differential`` else ``(T, R)`` with the emitter
        active.
    """
    det = drive.detunings
    direction = drive.direction
    if cavity is None:
        flux = power_to_flux(drive.power_in_waveguide, emitter.center_energy)
        bright = _averaged(lambda d: _saturating_response(emitter, direction, flux, d), det, ensemble)
        t_dark = np.ones_like(det)
        r_dark = np.zeros_like(det)
    else:
        if drive.power_in_waveguide > 0:
            warnings.warn("cavity composition uses the linear (weak-drive) response; drive power is ignored",
                          RuntimeWarning, stacklevel=2)
        bright = _averaged(lambda d: _cavity_response(emitter, direction, cavity, d), det, ensemble)
        r_e = np.zeros(det.shape, dtype=complex)
        t_cav, r_cav = fp_compose(np.ones(det.shape, dtype=complex), r_e, cavity, det)
        t_dark = np.abs(t_cav) ** 2
        r_dark = np.abs(r_cav) ** 2

    meta = {"direction": direction.value, "power_W": drive.power_in_waveguide}
    if digest is not None:
        meta["config_digest"] = digest
    t_off = Spectrum(det, t_dark, SpectrumKind.Transmission, meta)
    r_off = Spectrum(det, r_dark, SpectrumKind.Reflection, meta)
    t_on = apply_blinking(t_off.with_values(bright[0]), t_off, ensemble.p_dark)
    r_on = apply_blinking(r_off.with_values(bright[1]), r_off, ensemble.p_dark)
    if not differential:
        return t_on, r_on
    return differential_transmission(t_on, t_off), differential_reflectivity(r_on, r_off, t_off)


def simulate_saturation(emitter: EmitterConfig, ensemble: EnsembleConfig, direction: Direction, powers):
    """On-resonance |ΔT| of the preferentially coupled branch for each power (W)."""
    powers = np.asarray(powers, dtype=float)
    if np.any(powers < 0):
        raise ValueError("powers must be >= 0")
    strong = emitter.preferred_branch(direction)
    at = np.array([emitter.branch_offset(strong)])
    depths = np.empty(powers.shape)
    for i, p in enumerate(powers.flat):
        flux = power_to_flux(p, emitter.center_energy)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            t_bright = wandering_average(_saturating_response(emitter, direction, flux, at),
                                         ensemble.wandering_sigma, ensemble.quadrature_order)[0, 0]
        t_on = (1.0 - ensemble.p_dark) * t_bright + ensemble.p_dark
        depths.flat[i] = abs(t_on - 1.0)
    return depths


def branch_extremum(spectrum: Spectrum, center: float, half_width: float) -> float:
    """Signed value of largest magnitude within ``center ± half_width``."""
    win = spectrum.window(center - half_width, center + half_width)
    if len(win) == 0:
        raise ValueError(f"no samples within {center} +/- {half_width} ueV")
    return float(win.values[np.argmax(np.abs(win.values))])

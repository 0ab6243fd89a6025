"""Fano lineshapes, least-squares fitting and contrast ratios.

Lineshape::

    y(ω) = y0 + A (qΓ + ω − ω0)² / (Γ² + (ω − ω0)²)
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import least_squares

from .spectrum import Spectrum

PARAM_NAMES = ("y0", "A", "q", "gamma", "omega0")
DEFAULT_Q_STARTS = (-2.0, -0.5, 0.0, 0.5, 2.0)
MAX_ITERATIONS = 500
MIN_WINDOW_POINTS = 10


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FanoParams:
    y0: float
    A: float
    q: float
    gamma: float
    omega0: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise ValueError(f"non-finite Fano parameters: {self}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.y0, self.A, self.q, self.gamma, self.omega0], dtype=float)

    @classmethod
    def from_array(cls, p) -> "FanoParams":
        """Build canonical parameters from a raw vector.

        The lineshape is unchanged under (q, Γ) -> (−q, −Γ) and under
        (y0, A, q) -> (y0 + A(1+q²), −Aq², −1/q). The representative with
        Γ > 0 and |q| <= 1 is returned, so a symmetric dip has q ≈ 0 and A
        equal to its depth.
        """
        y0, a, q, g, w0 = (float(v) for v in p)
        if g < 0:
            q, g = -q, -g
        if abs(q) > 1:
            y0, a, q = y0 + a * (1 + q * q), -a * q * q, -1 / q
        return cls(y0, a, q, g, w0)


@dataclass(frozen=True)
class FanoFit:
    params: FanoParams
    covariance: np.ndarray
    rss: float
    converged: bool
    iterations: int

    @property
    def stderr(self) -> dict:
        diag = np.diag(self.covariance)
        return {n: float(math.sqrt(v)) if v >= 0 and math.isfinite(v) else float("nan")
                for n, v in zip(PARAM_NAMES, diag)}

    def to_report(self) -> dict:
        return {
            "params": asdict(self.params),
            "stderr": self.stderr,
            "rss": self.rss,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _shape(p, omega):
    y0, a, q, g, w0 = p
    x = omega - w0
    return y0 + a * (q * g + x) ** 2 / (g * g + x * x)


def fano_eval(params: FanoParams, omega):
    return _shape(params.as_array(), np.asarray(omega, dtype=float))


def _jacobian(p, omega):
    _, a, q, g, w0 = p
    x = omega - w0
    u = q * g + x
    den = g * g + x * x
    frac = u * u / den
    return np.column_stack([
        np.ones_like(omega),
        frac,
        a * 2 * u * g / den,
        a * (2 * u * q / den - frac * 2 * g / den),
        a * (-2 * u / den + frac * 2 * x / den),
    ])


def _seeds(omega, y, q_starts):
    n_edge = max(2, len(y) // 10)
    baseline = float(np.median(np.concatenate([y[:n_edge], y[-n_edge:]])))
    gamma = (omega[-1] - omega[0]) / 5.0
    slope = np.gradient(y, omega)
    centres = {float(omega[np.argmax(np.abs(slope))]), float(omega[np.argmax(np.abs(y - baseline))])}
    for w0 in sorted(centres):
        i0 = int(np.argmin(np.abs(omega - w0)))
        excursion = float(y[i0] - baseline) or float(np.ptp(y)) or 1.0
        for q in q_starts:
            # match the asymptote to the baseline and y(ω0) to the data
            a = excursion / (q * q - 1.0)
            yield np.array([baseline - a, a, q, gamma, w0])


def fano_fit(spectrum: Spectrum, window=None, init: FanoParams | None = None) -> FanoFit:
    """Levenberg-Marquardt fit of the Fano lineshape, uniformly weighted.

    Without ``init`` the fit is restarted from several Fano parameters and
    two centre seeds (steepest slope and largest excursion); the converged
    start with the lowest residual sum of squares wins.
    """
    s = spectrum if window is None else spectrum.window(*window)
    omega, y = s.detunings, s.values
    if len(y) < MIN_WINDOW_POINTS:
        raise FitError(f"{len(y)} points in fit window; at least {MIN_WINDOW_POINTS} required")
    if np.ptp(omega) <= 0:
        raise FitError("degenerate fit window")

    starts = [init.as_array()] if init is not None else list(_seeds(omega, y, DEFAULT_Q_STARTS))
    best = None
    for p0 in starts:
        try:
            res = least_squares(lambda p: _shape(p, omega) - y, p0, jac=lambda p: _jacobian(p, omega),
                                method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=MAX_ITERATIONS)
        except ValueError:
            continue
        if not np.all(np.isfinite(res.x)) or res.x[3] == 0:
            continue
        rss = float(np.sum(res.fun**2))
        converged = res.status > 0
        key = (not converged, rss)
        if best is None or key < best[0]:
            best = (key, res, rss, converged)
    if best is None:
        raise FitError("every start diverged")

    _, res, rss, converged = best
    params = FanoParams.from_array(res.x)
    jac = _jacobian(params.as_array(), omega)
    dof = max(len(y) - len(PARAM_NAMES), 1)
    try:
        cov = np.linalg.pinv(jac.T @ jac) * (rss / dof)
    except np.linalg.LinAlgError:
        cov = np.full((5, 5), np.nan)
    cov = 0.5 * (cov + cov.T)
    return FanoFit(params, cov, rss, converged, int(res.nfev))


def fano_contrast(fit_plus: FanoFit, fit_minus: FanoFit) -> float:
    """Directional contrast from the σ⁺ and σ⁻ Fano amplitudes."""
    for name, fit in (("sigma+", fit_plus), ("sigma-", fit_minus)):
        if not fit.converged:
            raise FitError(f"{name} fit did not converge")
    return amplitude_contrast(fit_plus.params.A, fit_minus.params.A)


def amplitude_contrast(a_plus: float, a_minus: float) -> float:
    total = a_plus + a_minus
    if total == 0:
        raise ZeroDivisionError("contrast undefined: amplitudes sum to zero")
    if a_plus * a_minus < 0:
        warnings.warn("Fano amplitudes have opposite signs; contrast may fall outside [-1, 1]",
                      RuntimeWarning, stacklevel=2)
    return (a_plus - a_minus) / total


def pl_contrast(i_plus: float, i_minus: float) -> float:
    """Photoluminescence contrast between σ⁺ and σ⁻ intensities."""
    if i_plus < 0 or i_minus < 0:
        raise ValueError("intensities must be >= 0")
    if i_plus + i_minus == 0:
        raise ZeroDivisionError("contrast undefined: both intensities are zero")
    return (i_plus - i_minus) / (i_plus + i_minus)

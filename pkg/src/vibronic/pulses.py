"""Chirped Gaussian pulses: envelope, quadratic phase, and spectral relations.

A chirped pulse stretches a transform-limited Gaussian of width ``tau_limited``
(intensity FWHM) to ``tau_stretched`` while sweeping its instantaneous
frequency linearly at the chirp rate.  Only the relative phase matters in the
rotating frame, so the phase is the pure quadratic chirp term with zero offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FOUR_LN2 = 4.0 * math.log(2.0)


@dataclass(frozen=True)
class ChirpedPulse:
    """Chirped Gaussian drive between two electronic channels.

    Attributes
    ----------
    coupling : float
        Peak coupling strength W (field amplitude times half the transition
        dipole), in hartree.
    omega : float
        Central angular frequency, reached at ``t_center``, in atomic units.
    t_center : float
        Envelope center, atomic time units.
    tau_limited : float
        Transform-limited intensity FWHM, atomic time units.
    tau_stretched : float
        Stretched intensity FWHM after chirping; at least ``tau_limited``.
    chirp : float
        Signed linear sweep rate of the instantaneous frequency, in inverse
        squared atomic time units.
    """

    coupling: float
    omega: float
    t_center: float
    tau_limited: float
    tau_stretched: float
    chirp: float = 0.0

    def __post_init__(self):
        if self.tau_limited <= 0:
            raise ValueError("tau_limited must be positive")
        if self.tau_stretched < self.tau_limited:
            raise ValueError("tau_stretched must be >= tau_limited")

    @classmethod
    def from_stretch(cls, coupling, omega, t_center, tau_limited, tau_stretched,
                     chirp_sign: int = 1) -> "ChirpedPulse":
        """Build a pulse whose chirp magnitude follows from the stretch ratio."""
        ratio = tau_stretched / tau_limited
        magnitude = FOUR_LN2 * math.sqrt(ratio**2 - 1.0) / tau_stretched**2
        return cls(coupling, omega, t_center, tau_limited, tau_stretched,
                   math.copysign(magnitude, chirp_sign))

    def envelope(self, t):
        """Dimensionless envelope sqrt(tau_L/tau_C) exp(-2 ln2 ((t-t_P)/tau_C)^2)."""
        x = (np.asarray(t, dtype=float) - self.t_center) / self.tau_stretched
        return math.sqrt(self.tau_limited / self.tau_stretched) * np.exp(-2.0 * math.log(2.0) * x * x)

    def phase(self, t):
        """Quadratic phase chirp/2 (t - t_P)^2, radians."""
        d = np.asarray(t, dtype=float) - self.t_center
        return 0.5 * self.chirp * d * d

    def instantaneous_frequency(self, t):
        """omega + chirp (t - t_P); the sweep crosses omega at t_center."""
        return self.omega + self.chirp * (np.asarray(t, dtype=float) - self.t_center)

    def phase_and_frequency(self, t):
        return self.phase(t), self.instantaneous_frequency(t)

    def spectral_width(self) -> float:
        """Energy width hbar 4 ln2 / tau_limited (hbar = 1), set before chirping."""
        return FOUR_LN2 / self.tau_limited

    def stretch_ratio(self) -> float:
        return self.tau_stretched / self.tau_limited

    def stretch_consistency_error(self) -> float:
        """Relative mismatch between tau_C/tau_L and the value the chirp implies."""
        implied = math.sqrt(1.0 + (self.chirp * self.tau_stretched**2 / FOUR_LN2) ** 2)
        return abs(self.stretch_ratio() - implied) / implied

    def coupling_amplitude(self, t) -> complex:
        """Rotating-frame block W f(t) exp(-i phi(t)) on the (upper, lower) entry."""
        return self.coupling * self.envelope(t) * np.exp(-1j * self.phase(t))


@dataclass(frozen=True)
class ConstantDrive:
    """Time-independent real coupling; the resonant Rabi reference drive."""

    coupling: float

    def envelope(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def coupling_amplitude(self, t) -> complex:
        return self.coupling * (1.0 + 0.0j)

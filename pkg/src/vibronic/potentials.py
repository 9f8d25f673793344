"""Electronic potential curves: Morse and harmonic models, tabulated data.

All curves evaluate in atomic units on scalar or array arguments and support
a pointwise energy shift (``shifted``) used to dress potentials with a photon
energy.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import units


class OutOfRangeError(ValueError):
    """Evaluation outside the sampled range of a tabulated curve."""


@dataclass(frozen=True)
class MorsePotential:
    """V(R) = offset + depth * (1 - exp(-steepness (R - r_e)))^2."""

    depth: float
    steepness: float
    r_e: float
    offset: float = 0.0

    def __post_init__(self):
        if self.depth <= 0 or self.steepness <= 0:
            raise ValueError("Morse depth and steepness must be positive")

    @property
    def asymptote(self) -> float:
        return self.offset + self.depth

    def evaluate(self, r):
        x = 1.0 - np.exp(-self.steepness * (np.asarray(r, dtype=float) - self.r_e))
        return self.offset + self.depth * x * x

    def shifted(self, shift: float) -> "MorsePotential":
        return dataclasses.replace(self, offset=self.offset + shift)


@dataclass(frozen=True)
class HarmonicPotential:
    """V(R) = offset + mu omega^2 (R - r_e)^2 / 2.

    The reduced mass is stored with the curve so that the frequency, not the
    force constant, is the configured parameter.
    """

    omega: float
    r_e: float
    reduced_mass: float
    offset: float = 0.0

    def __post_init__(self):
        if self.omega <= 0 or self.reduced_mass <= 0:
            raise ValueError("harmonic omega and reduced_mass must be positive")

    # No dissociation limit; every level below the grid cutoff is bound.
    asymptote = None

    def evaluate(self, r):
        d = np.asarray(r, dtype=float) - self.r_e
        return self.offset + 0.5 * self.reduced_mass * self.omega**2 * d * d

    def shifted(self, shift: float) -> "HarmonicPotential":
        return dataclasses.replace(self, offset=self.offset + shift)


@dataclass(frozen=True)
class TabulatedPotential:
    """Monotone-cubic interpolation of sampled (R, V) pairs.

    PCHIP interpolation reproduces the nodes exactly, is C1 between them, and
    cannot overshoot, so no spurious wells appear between samples.
    Evaluation outside [R_0, R_last] raises :class:`OutOfRangeError`.
    """

    r_values: np.ndarray
    v_values: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=float)
        v = np.asarray(self.v_values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or len(r) < 2:
            raise ValueError("tabulated curve needs two equally long 1-D columns")
        if not np.all(np.diff(r) > 0):
            raise ValueError("tabulated R values must be strictly increasing")
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "v_values", v)
        object.__setattr__(self, "_interp", PchipInterpolator(r, v))

    @property
    def asymptote(self) -> float:
        return self.offset + float(self.v_values[-1])

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.r_values[0], self.r_values[-1]
        eps = 1e-12 * (hi - lo)
        if np.any(r < lo - eps) or np.any(r > hi + eps):
            raise OutOfRangeError(
                f"tabulated curve sampled on [{lo}, {hi}], evaluation outside"
            )
        return self.offset + self._interp(np.clip(r, lo, hi))

    def shifted(self, shift: float) -> "TabulatedPotential":
        return TabulatedPotential(self.r_values, self.v_values, self.offset + shift)


PotentialCurve = Union[MorsePotential, HarmonicPotential, TabulatedPotential]


def dress(curve: PotentialCurve, shift: float) -> PotentialCurve:
    """Pointwise-shifted copy of a curve; the shape is untouched."""
    return curve.shifted(shift)


def load_tabulated(path) -> TabulatedPotential:
    """Read a two-column text file (R in a0, V in cm^-1, '#' comments)."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"expected two columns in {path}, got {data.shape[1]}")
    return TabulatedPotential(data[:, 0], units.cm1_to_au(data[:, 1]))

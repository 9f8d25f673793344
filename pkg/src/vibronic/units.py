"""Unit tags, conversions to and from atomic units, and the constants behind them.

Everything inside the simulator runs in Hartree atomic units
(hbar = m_e = e = a0 = 1).  Presentation units (cm^-1, ps, amu, ...) appear
only at I/O boundaries: scenario files, CSV/JSON output, and test oracles.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

# CODATA 2018 recommended values.
HARTREE_TO_CM1 = 219474.6313632      # hartree -> cm^-1 (hartree/hc, in inverse centimeters)
ATOMIC_TIME_S = 2.4188843265857e-17  # atomic unit of time, in seconds
AMU_TO_ME = 1822.888486209           # atomic mass constant over electron mass

PS_TO_AU = 1.0e-12 / ATOMIC_TIME_S   # picoseconds -> atomic time units

# hbar expressed in cm^-1 * ps (~5.30884); converts chirp rates and spectral
# widths quoted in wavenumber/picosecond form.
HBAR_CM1_PS = HARTREE_TO_CM1 / PS_TO_AU


class IncompatibleDimensionError(ValueError):
    """Conversion requested between dimensionally incompatible unit tags."""


class Dimension(enum.Enum):
    ENERGY = "energy"
    TIME = "time"
    LENGTH = "length"
    MASS = "mass"
    CHIRP = "chirp"


class Unit(enum.Enum):
    """Unit tags accepted in scenario files and by :func:`convert`.

    Each member carries the tag spelled in config files, its dimension, and
    the multiplicative factor taking a value in this unit to atomic units.
    Angular frequency is kept in atomic units; with hbar = 1 it is numerically
    the energy in hartree, so it shares the energy dimension.
    """

    WAVENUMBER = ("cm-1", Dimension.ENERGY, 1.0 / HARTREE_TO_CM1)
    HARTREE = ("hartree", Dimension.ENERGY, 1.0)
    ANGULAR_FREQUENCY = ("angular-frequency", Dimension.ENERGY, 1.0)
    PICOSECOND = ("ps", Dimension.TIME, PS_TO_AU)
    TIME_AU = ("au", Dimension.TIME, 1.0)
    BOHR = ("a0", Dimension.LENGTH, 1.0)
    AMU = ("amu", Dimension.MASS, AMU_TO_ME)
    MASS_AU = ("au", Dimension.MASS, 1.0)
    CHIRP_PS2 = ("ps-2", Dimension.CHIRP, 1.0 / PS_TO_AU**2)

    def __init__(self, tag: str, dimension: Dimension, factor: float):
        self.tag = tag
        self.dimension = dimension
        self.factor = factor


def find_unit(tag: str, dimension: Dimension) -> Unit:
    """Look up a unit by its config-file tag within a known dimension."""
    for unit in Unit:
        if unit.tag == tag and unit.dimension == dimension:
            return unit
    valid = ", ".join(u.tag for u in Unit if u.dimension == dimension)
    raise IncompatibleDimensionError(
        f"unit tag '{tag}' is not a {dimension.value} unit (expected one of: {valid})"
    )


@dataclass(frozen=True)
class Quantity:
    """A value together with its unit tag."""

    value: float
    unit: Unit

    def to_au(self) -> float:
        return self.value * self.unit.factor

    def convert(self, target: Unit) -> "Quantity":
        return convert(self, target)


def convert(q: Quantity, target: Unit) -> Quantity:
    """Re-express ``q`` in the ``target`` unit.

    Raises :class:`IncompatibleDimensionError` when the dimensions differ.
    """
    if q.unit.dimension is not target.dimension:
        raise IncompatibleDimensionError(
            f"cannot convert {q.unit.tag} ({q.unit.dimension.value}) "
            f"to {target.tag} ({target.dimension.value})"
        )
    return Quantity(q.value * q.unit.factor / target.factor, target)


def from_au(value: float, target: Unit) -> Quantity:
    """Wrap an atomic-unit value as a Quantity in the requested unit."""
    return Quantity(value / target.factor, target)


# Scalar helpers for the conversions the simulator actually performs.

def cm1_to_au(value: float) -> float:
    return value / HARTREE_TO_CM1


def au_to_cm1(value: float) -> float:
    return value * HARTREE_TO_CM1


def ps_to_au(value: float) -> float:
    return value * PS_TO_AU


def au_to_ps(value: float) -> float:
    return value / PS_TO_AU


def amu_to_au(value: float) -> float:
    return value * AMU_TO_ME

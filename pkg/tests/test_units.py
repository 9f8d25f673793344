import itertools

import pytest

from vibronic import units
from vibronic.units import Dimension, IncompatibleDimensionError, Quantity, Unit


def test_hartree_to_wavenumber_matches_constant_table():
    # CODATA 2018: 1 hartree = 219474.6313632 cm^-1
    q = Quantity(1.0, Unit.HARTREE).convert(Unit.WAVENUMBER)
    assert q.value == pytest.approx(219474.631, rel=3e-9)


def test_zero_converts_to_zero():
    q = Quantity(0.0, Unit.WAVENUMBER).convert(Unit.HARTREE)
    assert q.value == 0.0


def test_chirp_rate_in_wavenumber_per_ps():
    # hbar |chi| for chi = 4.35 ps^-2 is 23.11 cm^-1/ps to within 0.1 percent.
    assert units.HBAR_CM1_PS * 4.35 == pytest.approx(23.11, rel=1e-3)


def test_hbar_in_wavenumber_picoseconds():
    assert units.HBAR_CM1_PS == pytest.approx(5.3088, rel=1e-4)


def test_round_trip_every_unit_pair():
    by_dim = {}
    for unit in Unit:
        by_dim.setdefault(unit.dimension, []).append(unit)
    for dim, members in by_dim.items():
        for a, b in itertools.product(members, members):
            q = Quantity(1.2345678901234, a)
            back = q.convert(b).convert(a)
            assert back.value == pytest.approx(q.value, rel=1e-14), (a, b)


def test_incompatible_dimensions_rejected():
    with pytest.raises(IncompatibleDimensionError):
        Quantity(1.0, Unit.PICOSECOND).convert(Unit.HARTREE)


def test_find_unit_resolves_au_by_dimension():
    assert units.find_unit("au", Dimension.TIME) is Unit.TIME_AU
    assert units.find_unit("au", Dimension.MASS) is Unit.MASS_AU
    with pytest.raises(IncompatibleDimensionError):
        units.find_unit("cm-1", Dimension.TIME)


def test_scalar_helpers_invert():
    assert units.au_to_cm1(units.cm1_to_au(321.5)) == pytest.approx(321.5, rel=1e-15)
    assert units.au_to_ps(units.ps_to_au(7.25)) == pytest.approx(7.25, rel=1e-15)


def test_amu_conversion():
    # CODATA 2018 atomic mass constant over electron mass.
    assert units.amu_to_au(1.0) == pytest.approx(1822.888486, rel=1e-9)

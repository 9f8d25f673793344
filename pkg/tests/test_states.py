import numpy as np
import pytest

from vibronic.grids import SpatialGrid, eigensolve
from vibronic.potentials import HarmonicPotential, MorsePotential
from vibronic.states import (BasisSet, BipartiteState, ReducedElectronicDensity,
                             TruncationWarning, gaussian_packet,
                             project_coefficients, reconstruct_state,
                             single_channel_state)

MU = 2000.0


@pytest.fixture
def grid():
    return SpatialGrid(0.2, 9.0, 257, MU)


@pytest.fixture
def bases(grid):
    b1 = eigensolve(grid, MorsePotential(0.1, 0.7, 2.0), 6, label="g")
    b2 = eigensolve(grid, MorsePotential(0.09, 0.65, 2.4, offset=0.01), 6, label="e")
    return BasisSet([b1, b2])


def random_state(grid, bases, rng, n_channels=2):
    flat = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    flat /= np.linalg.norm(flat)
    from vibronic.states import VibronicCoefficients
    coeffs = VibronicCoefficients((flat[:6], flat[6:]), bases)
    return reconstruct_state(coeffs), coeffs


def test_single_channel_population_is_one(grid, bases):
    state = single_channel_state(grid, 2, 0, bases.bases[0].functions[0].astype(complex))
    assert state.channel_population(0) == pytest.approx(1.0, abs=1e-12)
    assert state.channel_population(1) == 0.0
    assert state.total_norm() == pytest.approx(1.0, abs=1e-12)


def test_equal_split_populations(grid, bases):
    psi = np.zeros((2, grid.n_points), dtype=complex)
    psi[0] = bases.bases[0].functions[0] / np.sqrt(2.0)
    psi[1] = bases.bases[1].functions[0] / np.sqrt(2.0)
    state = BipartiteState(grid, psi)
    assert np.allclose(state.populations(), [0.5, 0.5], atol=1e-12)


def test_overlap_self_and_disjoint(grid):
    left = gaussian_packet(grid, center=2.0, width=0.15)
    right = gaussian_packet(grid, center=7.0, width=0.15)
    same = BipartiteState(grid, np.array([left, left]) / np.sqrt(2.0))
    # Identical packets in both channels: overlap equals the common norm.
    assert same.overlap(0, 1) == pytest.approx(0.5, abs=1e-12)
    apart = BipartiteState(grid, np.array([left, right]) / np.sqrt(2.0))
    assert abs(apart.overlap(0, 1)) < 1e-12


def test_overlap_conjugate_symmetry(grid, bases):
    state, _ = random_state(grid, bases, np.random.default_rng(5))
    assert state.overlap(0, 1) == pytest.approx(np.conjugate(state.overlap(1, 0)))


def test_displaced_gaussian_overlap_against_quadrature_oracle():
    # Ground states of two identical harmonic wells displaced by d overlap as
    # exp(-d^2 mu omega / 4); recomputed here by brute-force quadrature on a
    # grid ten times finer than the working one.
    omega, d = 0.005, 0.35
    sigma = 1.0 / np.sqrt(2.0 * MU * omega)

    fine = np.linspace(-2.5, 2.5 + d, 20001)
    g0 = (2 * np.pi * sigma**2) ** -0.25 * np.exp(-fine**2 / (4 * sigma**2))
    g1 = (2 * np.pi * sigma**2) ** -0.25 * np.exp(-(fine - d) ** 2 / (4 * sigma**2))
    oracle = np.trapezoid(g0 * g1, fine)
    assert oracle == pytest.approx(np.exp(-d * d * MU * omega / 4.0), rel=1e-10)

    grid = SpatialGrid(-2.5, 2.5 + d, 513, MU)
    b0 = eigensolve(grid, HarmonicPotential(omega, 0.0, MU), 1)
    b1 = eigensolve(grid, HarmonicPotential(omega, d, MU), 1)
    psi = np.array([b0.functions[0], b1.functions[0]], dtype=complex) / np.sqrt(2.0)
    state = BipartiteState(grid, psi)
    assert state.overlap(0, 1).real * 2.0 == pytest.approx(oracle, rel=1e-8)


def test_reduced_density_trivial_cases(grid, bases):
    one = single_channel_state(grid, 2, 0, bases.bases[0].functions[0].astype(complex))
    rho = one.reduced_density()
    assert np.allclose(rho.matrix, np.diag([1.0, 0.0]), atol=1e-12)

    disjoint = BipartiteState(grid, np.array([
        gaussian_packet(grid, 2.0, 0.15), gaussian_packet(grid, 7.0, 0.15)
    ]) / np.sqrt(2.0))
    assert np.allclose(disjoint.reduced_density().matrix, np.diag([0.5, 0.5]),
                       atol=1e-12)


def test_reduced_density_trace_one_random(grid, bases):
    rng = np.random.default_rng(11)
    for _ in range(20):
        state, _ = random_state(grid, bases, rng)
        rho = state.reduced_density()
        assert rho.matrix.trace().real == pytest.approx(1.0, abs=1e-12)
        assert rho.purity() <= 1.0 + 1e-9
        assert rho.purity() >= 0.5 - 1e-9
        assert rho.eigenvalues().min() >= -1e-12


def test_density_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        ReducedElectronicDensity(np.array([[0.5, 0.5], [0.0, 0.5]]))
    with pytest.raises(ValueError, match="trace"):
        ReducedElectronicDensity(np.diag([0.7, 0.6]))
    with pytest.raises(ValueError, match="semidefinite"):
        ReducedElectronicDensity(np.array([[1.1, 0.5], [0.5, -0.1]]))


def test_projection_of_basis_member(grid, bases):
    state = single_channel_state(grid, 2, 0, bases.bases[0].functions[3].astype(complex))
    coeffs = project_coefficients(state, bases)
    expected = np.zeros(6)
    expected[3] = 1.0
    assert np.allclose(coeffs.coefficients[0], expected, atol=1e-10)
    assert np.allclose(coeffs.coefficients[1], 0.0, atol=1e-12)


def test_projection_reconstruction_roundtrip(grid, bases):
    rng = np.random.default_rng(3)
    state, _ = random_state(grid, bases, rng)
    coeffs = project_coefficients(state, bases)
    back = reconstruct_state(coeffs)
    assert np.abs(back.psi - state.psi).max() < 1e-10
    assert max(coeffs.residuals) < 1e-12


def test_projection_warns_on_truncation(grid, bases):
    packet = gaussian_packet(grid, 4.5, 0.2)  # far outside the bound wells
    state = single_channel_state(grid, 2, 0, packet)
    with pytest.warns(TruncationWarning):
        project_coefficients(state, bases)


def test_matrix_elements(grid, bases):
    rng = np.random.default_rng(9)
    _, coeffs = random_state(grid, bases, rng)
    diag = coeffs.matrix_element((0, 2), (0, 2))
    assert diag.imag == 0.0 and diag.real >= 0.0
    a = coeffs.matrix_element((0, 1), (1, 4))
    b = coeffs.matrix_element((1, 4), (0, 1))
    assert a == pytest.approx(np.conjugate(b))
    total = sum(coeffs.matrix_element((ch, v), (ch, v)).real
                for ch in range(2) for v in range(6))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_coefficient_overlap_bridge(grid, bases):
    # Overlap built from coefficients and basis overlap tables equals the
    # grid overlap for states living inside the bases.
    rng = np.random.default_rng(17)
    state, coeffs = random_state(grid, bases, rng)
    s_table = bases.overlap(0, 1)
    from_coeffs = np.conjugate(coeffs.coefficients[0]) @ s_table @ coeffs.coefficients[1]
    assert from_coeffs == pytest.approx(state.overlap(0, 1), abs=1e-12)


def test_gaussian_packet_normalized_with_momentum(grid):
    packet = gaussian_packet(grid, 4.0, 0.3, momentum=5.0)
    assert np.sum(np.abs(packet) ** 2) * grid.dr == pytest.approx(1.0, abs=1e-12)
    assert packet[0] == 0.0 and packet[-1] == 0.0

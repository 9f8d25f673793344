import math

import numpy as np
import pytest

from vibronic import measures, units
from vibronic.dynamics import free_evolution
from vibronic.grids import SpatialGrid, eigensolve
from vibronic.measures import (L1Coherence, coherence_entropy_residual,
                               compute_record, electronic_variance_profile,
                               energy_variance, l1_coherence_electronic,
                               l1_coherence_vibronic, linear_entropy,
                               linear_entropy_from_coefficients,
                               linear_entropy_pairwise, population_entropy,
                               skew_identity_residual, skew_information_local,
                               skew_information_molecular,
                               skew_information_reduced, velocity_identity,
                               velocity_identity_check, von_neumann_entropy)
from vibronic.potentials import MorsePotential
from vibronic.states import (BasisSet, ReducedElectronicDensity,
                             VibronicCoefficients, reconstruct_state)

MU = 2000.0


@pytest.fixture(scope="module")
def system():
    grid = SpatialGrid(0.2, 9.0, 257, MU)
    b1 = eigensolve(grid, MorsePotential(0.1, 0.7, 2.0), 6, label="g")
    b2 = eigensolve(grid, MorsePotential(0.09, 0.65, 2.4, offset=0.01), 6, label="e")
    return grid, BasisSet([b1, b2])


def coefficient_state(bases, flat):
    flat = np.asarray(flat, dtype=complex)
    flat = flat / np.linalg.norm(flat)
    return VibronicCoefficients((flat[:6], flat[6:]), bases)


def random_coefficients(bases, rng):
    return coefficient_state(bases, rng.standard_normal(12) + 1j * rng.standard_normal(12))


# ---------------------------------------------------------------- entropies

def test_von_neumann_entropy_cases():
    assert von_neumann_entropy(ReducedElectronicDensity(np.diag([1.0, 0.0]))) == 0.0
    assert von_neumann_entropy(ReducedElectronicDensity(np.diag([0.5, 0.5]))) \
        == pytest.approx(1.0, abs=1e-12)
    assert von_neumann_entropy(ReducedElectronicDensity(np.diag([0.25] * 4))) \
        == pytest.approx(2.0, abs=1e-12)


def test_population_entropy_matches_two_channel_form():
    p = np.array([0.3, 0.7])
    expected = -(0.3 * math.log2(0.3) + 0.7 * math.log2(0.7))
    assert population_entropy(p) == pytest.approx(expected, rel=1e-14)
    assert population_entropy([1.0, 0.0]) == 0.0


def test_eigen_entropy_reduces_to_population_form_without_overlap():
    rho = ReducedElectronicDensity(np.diag([0.3, 0.7]))
    assert von_neumann_entropy(rho) == pytest.approx(population_entropy([0.3, 0.7]),
                                                     abs=1e-13)


def test_linear_entropy_trivial_cases(system):
    grid, bases = system
    single = coefficient_state(bases, [1, 0, 0, 0, 0, 0] + [0] * 6)
    assert linear_entropy(reconstruct_state(single)) == pytest.approx(0.0, abs=1e-12)
    assert linear_entropy_from_coefficients(single) == pytest.approx(0.0, abs=1e-14)


def test_linear_entropy_maximal_case(system):
    grid, bases = system
    # Equal populations in orthogonal-support packets: L = 1/2 for 2 channels.
    psi = np.zeros((2, grid.n_points), dtype=complex)
    from vibronic.states import BipartiteState, gaussian_packet
    psi[0] = gaussian_packet(grid, 1.8, 0.12) / np.sqrt(2.0)
    psi[1] = gaussian_packet(grid, 6.5, 0.12) / np.sqrt(2.0)
    state = BipartiteState(grid, psi)
    assert linear_entropy(state) == pytest.approx(0.5, abs=1e-12)


def test_linear_entropy_single_level_formula(system):
    # One level per channel: L = 2 |c_g|^2 |c_e|^2 (1 - |<chi_g|chi_e>|^2),
    # evaluated by hand for |c|^2 = 1/2 each and overlap 0.6: L = 0.32.
    grid, bases = system
    j = int(np.argmin(np.abs(np.abs(bases.overlap(0, 1)[0]) - 0.6)))
    s = abs(bases.overlap(0, 1)[0, j])
    flat = np.zeros(12, dtype=complex)
    flat[0] = 1.0
    flat[6 + j] = 1.0
    coeffs = coefficient_state(bases, flat)
    expected = 2.0 * 0.25 * (1.0 - s * s)
    assert linear_entropy(reconstruct_state(coeffs)) == pytest.approx(expected, abs=1e-12)
    hand_value = 2.0 * 0.25 * (1.0 - 0.6**2)
    assert hand_value == pytest.approx(0.32, abs=1e-15)


def test_linear_entropy_routes_agree_on_random_states(system):
    grid, bases = system
    rng = np.random.default_rng(21)
    for _ in range(50):
        coeffs = random_coefficients(bases, rng)
        state = reconstruct_state(coeffs)
        lin = linear_entropy(state)
        assert abs(lin - linear_entropy_pairwise(state)) < 1e-12
        assert abs(lin - linear_entropy_from_coefficients(coeffs)) < 1e-8
        assert abs(measures.purity(state) + lin - 1.0) == 0.0


def test_coefficient_route_zero_overlap_case(system):
    grid, bases = system
    # Pretend wells with orthogonal bases: cross overlap table set to zero.
    flat = np.zeros(12, dtype=complex)
    flat[1] = math.sqrt(0.4)
    flat[6] = math.sqrt(0.6)
    coeffs = coefficient_state(bases, flat)
    p = coeffs.populations()
    s = bases.overlap(0, 1)[1, 0]
    expected = 2.0 * (p[0] * p[1] - abs(flat[1] * flat[6] * s) ** 2)
    assert linear_entropy_from_coefficients(coeffs) == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------- l1 coherence

def test_l1_vibronic_single_state_zero(system):
    _, bases = system
    single = coefficient_state(bases, [0, 0, 1, 0, 0, 0] + [0] * 6)
    result = l1_coherence_vibronic(single)
    assert result.total == pytest.approx(0.0, abs=1e-14)


def test_l1_vibronic_two_level_uniform(system):
    _, bases = system
    flat = np.zeros(12)
    flat[0] = flat[6] = 1.0
    result = l1_coherence_vibronic(coefficient_state(bases, flat))
    assert result.total == pytest.approx(1.0, abs=1e-12)
    assert result.cross_channel == pytest.approx(1.0, abs=1e-12)
    assert result.within_channel == pytest.approx(0.0, abs=1e-14)


def test_l1_vibronic_constant_in_field_free_evolution(system):
    _, bases = system
    coeffs = random_coefficients(bases, np.random.default_rng(8))
    times = np.linspace(0.0, 4000.0, 9)
    traj = free_evolution(coeffs, times)
    values = [l1_coherence_vibronic(c).total for c in traj.coefficients]
    assert np.ptp(values) < 1e-12


def test_l1_electronic_cases(system):
    grid, bases = system
    assert l1_coherence_electronic(
        ReducedElectronicDensity(np.diag([0.4, 0.6]))) == 0.0
    rho = ReducedElectronicDensity(np.array([[0.5, 0.3], [0.3, 0.5]]))
    assert l1_coherence_electronic(rho) == pytest.approx(0.6, abs=1e-14)


def test_coherence_entropy_identity_random(system):
    grid, bases = system
    rng = np.random.default_rng(4)
    for _ in range(50):
        state = reconstruct_state(random_coefficients(bases, rng))
        assert coherence_entropy_residual(state) < 1e-12


# ---------------------------------------------------------------- variance

def test_variance_single_eigenstate_zero(system):
    _, bases = system
    single = coefficient_state(bases, [0, 1, 0, 0, 0, 0] + [0] * 6)
    assert energy_variance(single) == 0.0


def test_variance_two_level_quarter_gap_squared(system):
    _, bases = system
    flat = np.zeros(12)
    flat[0] = flat[3] = 1.0
    coeffs = coefficient_state(bases, flat)
    gap = bases.bases[0].energies[3] - bases.bases[0].energies[0]
    assert energy_variance(coeffs) == pytest.approx(gap**2 / 4.0, rel=1e-12)


def test_variance_matches_moment_route(system):
    _, bases = system
    rng = np.random.default_rng(13)
    for _ in range(25):
        coeffs = random_coefficients(bases, rng)
        p = np.abs(coeffs.flat_values()) ** 2
        e = coeffs.flat_energies()
        direct = p @ e**2 - (p @ e) ** 2
        assert energy_variance(coeffs) == pytest.approx(direct, rel=1e-12)


def test_variance_constant_in_field_free_evolution(system):
    _, bases = system
    coeffs = random_coefficients(bases, np.random.default_rng(2))
    traj = free_evolution(coeffs, np.linspace(0.0, 8000.0, 7))
    values = [energy_variance(c) for c in traj.coefficients]
    assert np.ptp(values) / values[0] < 1e-12


def test_skew_equals_variance_exactly(system):
    _, bases = system
    rng = np.random.default_rng(19)
    for _ in range(20):
        coeffs = random_coefficients(bases, rng)
        assert skew_information_molecular(coeffs) == energy_variance(coeffs)


# ---------------------------------------------------------------- velocity

def test_velocity_identity_eigenstate_zero(system):
    _, bases = system
    single = coefficient_state(bases, [1, 0, 0, 0, 0, 0] + [0] * 6)
    traj = free_evolution(single, [0.0, 4.0, 8.0])
    lhs, rhs, rel = velocity_identity_check(traj, 4.0)
    assert lhs == pytest.approx(0.0, abs=1e-20)
    assert rhs == pytest.approx(0.0, abs=1e-20)


def test_velocity_identity_two_level_analytic(system):
    # For c = (a, b) the analytic density derivative gives
    # Tr[(drho/dt)^2] = 2 gap^2 |a|^2 |b|^2 = 2 (Delta H)^2 exactly.
    _, bases = system
    flat = np.zeros(12, dtype=complex)
    flat[0] = math.sqrt(0.3)
    flat[2] = math.sqrt(0.7)
    coeffs = coefficient_state(bases, flat)
    gap = bases.bases[0].energies[2] - bases.bases[0].energies[0]
    analytic = 2.0 * gap**2 * 0.3 * 0.7
    assert 2.0 * energy_variance(coeffs) == pytest.approx(analytic, rel=1e-12)
    dt = 0.05 / gap
    traj = free_evolution(coeffs, [0.0, dt, 2 * dt])
    lhs, rhs, rel = velocity_identity_check(traj, dt)
    assert lhs == pytest.approx(analytic, rel=1e-3)
    assert rel < 1e-3


def test_velocity_identity_converges_quadratically(system):
    # Central differences carry an O(dt^2) error; quartering the stencil must
    # shrink the residual by about sixteen.
    _, bases = system
    coeffs = random_coefficients(bases, np.random.default_rng(31))
    dt = units.ps_to_au(1e-4)  # 0.1 fs
    traj = free_evolution(coeffs, [0.0, dt, 2 * dt])
    _, _, rel = velocity_identity_check(traj, dt)
    fine = free_evolution(coeffs, [0.0, dt / 4, dt / 2])
    _, _, rel_fine = velocity_identity_check(fine, dt / 4)
    assert rel_fine < rel
    assert rel_fine == pytest.approx(rel / 16.0, rel=0.2)


def test_velocity_identity_needs_three_snapshots(system):
    _, bases = system
    coeffs = random_coefficients(bases, np.random.default_rng(1))
    traj = free_evolution(coeffs, [0.0, 1.0])
    with pytest.raises(measures.InsufficientSnapshotsError):
        velocity_identity_check(traj, 0.5)


# ---------------------------------------------------------------- skew profiles

def test_local_skew_single_channel_zero():
    v = np.array([[1.0, 2.0, 3.0]])
    profile = skew_information_local(v, [1.0], np.arange(3.0))
    assert np.all(profile.values == 0.0)


def test_local_skew_flat_gap():
    # Flat curves split by a constant gap with equal populations: the pure
    # state's local uncertainty is gap^2 P_g P_e = gap^2 / 4 at every R.
    r = np.linspace(0.0, 1.0, 11)
    gap = 0.3
    v = np.vstack([np.zeros(11), np.full(11, gap)])
    profile = skew_information_local(v, [0.5, 0.5], r)
    assert np.allclose(profile.values, gap**2 / 4.0, atol=1e-15)


def test_local_skew_vanishes_at_crossing():
    r = np.linspace(-1.0, 1.0, 201)
    v = np.vstack([r, -r])  # curves cross at r = 0
    profile = skew_information_local(v, [0.5, 0.5], r)
    assert profile.at(0.0) == pytest.approx(0.0, abs=1e-15)
    assert profile.values[0] > 0.0


def test_reduced_skew_zero_for_diagonal_density():
    r = np.linspace(0.0, 1.0, 5)
    v = np.vstack([np.zeros(5), np.ones(5)])
    rho = ReducedElectronicDensity(np.diag([0.4, 0.6]))
    profile = skew_information_reduced(rho, v, r)
    assert np.allclose(profile.values, 0.0, atol=1e-16)


def test_reduced_skew_matches_analytic_two_by_two_root():
    # 2x2 PSD square root has the closed form (rho + sqrt(det) I) /
    # sqrt(tr + 2 sqrt(det)); the eigendecomposition route must agree.
    rng = np.random.default_rng(77)
    r = np.linspace(0.0, 1.0, 7)
    v = np.vstack([np.zeros(7), np.linspace(0.5, 1.5, 7)])
    for _ in range(25):
        z = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        m = z @ z.conj().T
        m /= m.trace().real
        rho = ReducedElectronicDensity(m)
        det = np.linalg.det(m).real
        analytic = (m + np.sqrt(det) * np.eye(2)) / np.sqrt(1.0 + 2.0 * np.sqrt(det))
        expected = (v[0] - v[1]) ** 2 * abs(analytic[0, 1]) ** 2
        profile = skew_information_reduced(rho, v, r)
        assert np.abs(profile.values - expected).max() < 1e-12


def test_reduced_skew_closed_form_and_identity(system):
    grid, bases = system
    v = np.array([50.0 * MorsePotential(0.1, 0.7, 2.0).evaluate(grid.r),
                  50.0 * MorsePotential(0.09, 0.65, 2.4, offset=0.01).evaluate(grid.r)])
    rng = np.random.default_rng(3)
    for _ in range(40):
        coeffs = random_coefficients(bases, rng)
        state = reconstruct_state(coeffs)
        lin = linear_entropy(state)
        reduced = skew_information_reduced(state.reduced_density(), v, grid.r)
        closed = (v[0] - v[1]) ** 2 * abs(state.overlap(0, 1)) ** 2 \
            / (1.0 + math.sqrt(2.0 * lin))
        assert np.abs(reduced.values - closed).max() < 1e-10
        assert skew_identity_residual(state, v, grid.r) < 1e-10
        bound = electronic_variance_profile(state.populations(), v, grid.r)
        assert np.all(reduced.values <= bound.values + 1e-12)


def test_profile_accessor_interpolates():
    r = np.linspace(0.0, 2.0, 21)
    profile = skew_information_local(np.vstack([np.zeros(21), r]), [0.5, 0.5], r)
    assert profile.at(1.05) == pytest.approx((1.05**2) / 4.0, rel=1e-2)


# ---------------------------------------------------------------- records

def test_compute_record_consistency(system):
    grid, bases = system
    coeffs = random_coefficients(bases, np.random.default_rng(55))
    state = reconstruct_state(coeffs)
    record = compute_record(state, coeffs)
    assert record.purity + record.linear_entropy == 1.0
    assert record.skew_hmol == record.variance_hmol
    assert 0.0 <= record.linear_entropy <= 0.5 + 1e-9
    assert 0.0 <= record.s_vn_pop <= 1.0 + 1e-9
    assert record.c_l1_vibronic == pytest.approx(
        record.c_l1_cross_channel + record.c_l1_within_channel, rel=1e-14)


def test_measure_series_csv_roundtrip(tmp_path, system):
    grid, bases = system
    rng = np.random.default_rng(6)
    records = []
    for t in np.linspace(0.0, 100.0, 5):
        coeffs = random_coefficients(bases, rng)
        state = reconstruct_state(coeffs)
        records.append(compute_record(
            type(state)(grid, state.psi, time=float(t)), coeffs))
    series = measures.MeasureSeries.from_records(records)
    path = tmp_path / "series.csv"
    series.to_csv(path)
    back = measures.MeasureSeries.from_csv(path)
    assert back.n_channels == 2
    assert np.abs(back.times - series.times).max() < 1e-9
    for name in series.columns:
        assert np.abs(back[name] - series[name]).max() < 1e-20 + 1e-12 * np.abs(series[name]).max()
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["t_ps", "P_1", "P_2", "S_vN_eigen", "S_vN_pop", "purity",
                      "L", "C_l1_el", "C_l1_vibronic", "variance_Hmol"]

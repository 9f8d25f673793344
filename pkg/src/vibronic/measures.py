"""Entanglement and coherence quantifiers with their cross identities.

All quantifiers act on immutable snapshots: the reduced electronic density,
the grid state, or its vibronic coefficient view.  Entropies use log base 2.
The module keeps two deliberately distinct von Neumann entropies: the
population-only form (exact for uncoupled channel populations) and the
eigenvalue form of the reduced electronic density, whose off-diagonal
overlaps shift the spectrum.  Both are reported side by side.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import units
from .dynamics import CoefficientTrajectory
from .states import BipartiteState, ReducedElectronicDensity, VibronicCoefficients


class InsufficientSnapshotsError(ValueError):
    """A finite-difference check needs three consecutive snapshots."""


def von_neumann_entropy(rho: ReducedElectronicDensity) -> float:
    """-sum(lambda log2 lambda) over the eigenvalues of the reduced density."""
    eigs = rho.eigenvalues()
    eigs = np.where((eigs < 0) & (eigs > -1e-12), 0.0, eigs)
    if eigs.min() < 0:
        raise ValueError(f"density not positive semidefinite: min eig {eigs.min():.3e}")
    positive = eigs[eigs > 0]
    return float(-np.sum(positive * np.log2(positive)))


def population_entropy(populations) -> float:
    """-sum(P log2 P); the channel-population entropy, blind to overlaps."""
    p = np.asarray(populations, dtype=float)
    positive = p[p > 0]
    return float(-np.sum(positive * np.log2(positive)))


def purity(state: BipartiteState) -> float:
    """Tr rho_el^2 = sum over all channel pairs of |<psi_a|psi_b>|^2."""
    return float(np.sum(np.abs(state.gram()) ** 2))


def linear_entropy(state: BipartiteState) -> float:
    """L = 1 - Tr rho_el^2; purity + L = 1 holds by construction."""
    return 1.0 - purity(state)


def linear_entropy_pairwise(state: BipartiteState) -> float:
    """Equivalent pairwise form 2 sum_{a<b} [P_a P_b - |<psi_a|psi_b>|^2]."""
    g = state.gram()
    p = np.diag(g).real
    total = 0.0
    n = state.n_channels
    for a in range(n):
        for b in range(a + 1, n):
            total += p[a] * p[b] - abs(g[a, b]) ** 2
    return 2.0 * total


def linear_entropy_from_coefficients(coeffs: VibronicCoefficients) -> float:
    """Linear entropy evaluated from vibronic coherences and basis overlaps.

    Matches the grid forms within the basis-truncation residual; the
    cross-channel packet overlap becomes c_a^dagger S_ab c_b with S the
    cached vibrational overlap matrix.
    """
    n = coeffs.n_channels
    p = coeffs.populations()
    total = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            s = coeffs.basis_set.overlap(a, b)
            m = np.conjugate(coeffs.coefficients[a]) @ s @ coeffs.coefficients[b]
            total += p[a] * p[b] - abs(m) ** 2
    return 2.0 * total


@dataclass(frozen=True)
class L1Coherence:
    """l1-norm coherence in the vibronic basis, split by block.

    ``cross_channel`` collects the off-diagonal elements between different
    electronic channels, ``within_channel`` the vibrational coherences inside
    each channel; ``total`` is their sum.
    """

    total: float
    cross_channel: float
    within_channel: float


def l1_coherence_vibronic(coeffs: VibronicCoefficients) -> L1Coherence:
    """Sum of |c_v_a| |c_w_b| over distinct vibronic index pairs."""
    mags = [np.abs(c) for c in coeffs.coefficients]
    sums = np.array([m.sum() for m in mags])
    squares = np.array([(m**2).sum() for m in mags])
    within = float(np.sum(sums**2 - squares))
    cross = float(np.sum(np.outer(sums, sums)) - np.sum(sums**2))
    return L1Coherence(total=cross + within, cross_channel=cross, within_channel=within)


def l1_coherence_electronic(rho: ReducedElectronicDensity) -> float:
    """Sum of off-diagonal magnitudes of the reduced electronic density."""
    m = np.abs(rho.matrix)
    return float(m.sum() - np.trace(m))


def coherence_entropy_residual(state: BipartiteState) -> float:
    """Two-channel identity residual |L - (2 P_g P_e - C_l1^2 / 2)|."""
    if state.n_channels != 2:
        raise ValueError("the coherence-entropy identity is a two-channel relation")
    p = state.populations()
    c = l1_coherence_electronic(state.reduced_density())
    return abs(linear_entropy(state) - (2.0 * p[0] * p[1] - 0.5 * c * c))


def energy_variance(coeffs: VibronicCoefficients) -> float:
    """(Delta H)^2 = 1/2 sum_ij (E_i - E_j)^2 p_i p_j over all vibronic levels."""
    p = np.abs(coeffs.flat_values()) ** 2
    e = coeffs.flat_energies()
    diff = np.subtract.outer(e, e)
    return float(0.5 * p @ (diff * diff) @ p)


def skew_information_molecular(coeffs: VibronicCoefficients) -> float:
    """Skew information of the pure state for the molecular Hamiltonian.

    For a pure state the square root of the density is the density itself, so
    this is exactly the energy variance.
    """
    return energy_variance(coeffs)


def velocity_identity(c_prev: VibronicCoefficients, c_now: VibronicCoefficients,
                      c_next: VibronicCoefficients, dt: float) -> tuple[float, float, float]:
    """Compare Tr[(d rho/dt)^2] against 2 (Delta H)^2 (hbar = 1).

    The left side comes from a central finite difference of the pure-state
    density in the truncated vibronic basis; returns (lhs, rhs, relative
    error).
    """
    rho_prev = np.outer(c_prev.flat_values(), np.conjugate(c_prev.flat_values()))
    rho_next = np.outer(c_next.flat_values(), np.conjugate(c_next.flat_values()))
    drho = (rho_next - rho_prev) / (2.0 * dt)
    lhs = float(np.sum(np.abs(drho) ** 2))
    rhs = 2.0 * energy_variance(c_now)
    scale = max(abs(lhs), abs(rhs))
    rel = 0.0 if scale < 1e-300 else abs(lhs - rhs) / scale
    return lhs, rhs, rel


def velocity_identity_check(traj: CoefficientTrajectory, t: float) -> tuple[float, float, float]:
    """Run :func:`velocity_identity` on the snapshot triple around time t."""
    if len(traj) < 3:
        raise InsufficientSnapshotsError("need at least three snapshots")
    i = int(np.argmin(np.abs(traj.times - t)))
    i = min(max(i, 1), len(traj) - 2)
    dt_left = traj.times[i] - traj.times[i - 1]
    dt_right = traj.times[i + 1] - traj.times[i]
    if abs(dt_left - dt_right) > 1e-9 * dt_right:
        raise InsufficientSnapshotsError("central difference needs uniform snapshots")
    return velocity_identity(traj.coefficients[i - 1], traj.coefficients[i],
                             traj.coefficients[i + 1], float(dt_right))


@dataclass(frozen=True)
class SkewProfile:
    """A radial profile of energy-squared values with an interpolating accessor."""

    r: np.ndarray
    values: np.ndarray

    def at(self, r_query):
        return np.interp(r_query, self.r, self.values)


def skew_information_local(v_values: np.ndarray, populations, r: np.ndarray) -> SkewProfile:
    """Local-uncertainty profile sum_{a<b} [V_a(R) - V_b(R)]^2 P_a P_b.

    This is the skew information of the pure bipartite state for the local
    electronic-energy observable, resolved over the internuclear distance.
    """
    v = np.asarray(v_values, dtype=float)
    p = np.asarray(populations, dtype=float)
    out = np.zeros(v.shape[1])
    n = v.shape[0]
    for a in range(n):
        for b in range(a + 1, n):
            out += (v[a] - v[b]) ** 2 * (p[a] * p[b])
    return SkewProfile(np.asarray(r, dtype=float), out)


def skew_information_reduced(rho: ReducedElectronicDensity, v_values: np.ndarray,
                             r: np.ndarray) -> SkewProfile:
    """Profile sum_{a<b} [V_a(R) - V_b(R)]^2 |sqrt(rho)_ab|^2.

    The square root of the reduced density is taken by eigendecomposition
    with tiny negative eigenvalues clipped to zero.
    """
    v = np.asarray(v_values, dtype=float)
    root = rho.sqrtm()
    out = np.zeros(v.shape[1])
    n = v.shape[0]
    for a in range(n):
        for b in range(a + 1, n):
            out += (v[a] - v[b]) ** 2 * abs(root[a, b]) ** 2
    return SkewProfile(np.asarray(r, dtype=float), out)


def electronic_variance_profile(populations, v_values: np.ndarray,
                                r: np.ndarray) -> SkewProfile:
    """Variance of the electronic energy in the reduced state, per R.

    Upper bound for the reduced skew profile (skew never exceeds variance).
    """
    v = np.asarray(v_values, dtype=float)
    p = np.asarray(populations, dtype=float)
    first = p @ (v * v)
    second = (p @ v) ** 2
    return SkewProfile(np.asarray(r, dtype=float), first - second)


def skew_identity_residual(state: BipartiteState, v_values: np.ndarray,
                           r: np.ndarray) -> float:
    """Two-channel pointwise residual of the local/reduced skew identity.

    Checks I_local - (1 + sqrt(2 L)) I_reduced = [V_g - V_e]^2 L / 2 at every
    grid point and returns the largest absolute mismatch.
    """
    if state.n_channels != 2:
        raise ValueError("the skew identity is a two-channel relation")
    v = np.asarray(v_values, dtype=float)
    lin = linear_entropy(state)
    local = skew_information_local(v, state.populations(), r).values
    reduced = skew_information_reduced(state.reduced_density(), v, r).values
    lhs = local - (1.0 + math.sqrt(max(2.0 * lin, 0.0))) * reduced
    rhs = (v[0] - v[1]) ** 2 * lin / 2.0
    return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True)
class MeasureRecord:
    """All per-snapshot quantifiers; profile fields stay None unless asked for."""

    time: float
    populations: np.ndarray
    s_vn_eigen: float
    s_vn_pop: float
    purity: float
    linear_entropy: float
    c_l1_electronic: float
    c_l1_vibronic: float
    c_l1_cross_channel: float
    c_l1_within_channel: float
    variance_hmol: float
    skew_hmol: float
    velocity_sq: float | None = None
    skew_local: SkewProfile | None = None
    skew_reduced: SkewProfile | None = None


def compute_record(state: BipartiteState, coeffs: VibronicCoefficients | None = None,
                   v_values: np.ndarray | None = None,
                   with_profiles: bool = False) -> MeasureRecord:
    """Evaluate every measure on one snapshot.

    Coefficient-based quantities (l1 coherence in the vibronic basis, energy
    variance) need ``coeffs``; the radial skew profiles additionally need the
    bare potential values ``v_values`` on the grid.
    """
    rho = state.reduced_density()
    pops = state.populations()
    pur = rho.purity()
    if coeffs is not None:
        l1 = l1_coherence_vibronic(coeffs)
        var = energy_variance(coeffs)
        skew = skew_information_molecular(coeffs)
    else:
        l1 = L1Coherence(math.nan, math.nan, math.nan)
        var = skew = math.nan
    skew_local = skew_reduced = None
    if with_profiles:
        if v_values is None:
            raise ValueError("profiles need the bare potential values")
        skew_local = skew_information_local(v_values, pops, state.grid.r)
        skew_reduced = skew_information_reduced(rho, v_values, state.grid.r)
    return MeasureRecord(
        time=state.time,
        populations=pops,
        s_vn_eigen=von_neumann_entropy(rho),
        s_vn_pop=population_entropy(pops),
        purity=pur,
        linear_entropy=1.0 - pur,
        c_l1_electronic=l1_coherence_electronic(rho),
        c_l1_vibronic=l1.total,
        c_l1_cross_channel=l1.cross_channel,
        c_l1_within_channel=l1.within_channel,
        variance_hmol=var,
        skew_hmol=skew,
        skew_local=skew_local,
        skew_reduced=skew_reduced,
    )


class MeasureSeries:
    """Time-indexed measure columns with CSV round-tripping.

    Columns are stored in atomic units; the CSV boundary presents time in
    picoseconds and the energy variance in cm^-1 squared.
    """

    CORE_COLUMNS = ("S_vN_eigen", "S_vN_pop", "purity", "L",
                    "C_l1_el", "C_l1_vibronic", "variance_Hmol")

    def __init__(self, times: np.ndarray, columns: dict, n_channels: int):
        self.times = np.asarray(times, dtype=float)
        self.columns = {k: np.asarray(v, dtype=float) for k, v in columns.items()}
        self.n_channels = n_channels
        for name, col in self.columns.items():
            if col.shape != self.times.shape:
                raise ValueError(f"column {name} length mismatch")

    @classmethod
    def from_records(cls, records) -> "MeasureSeries":
        records = list(records)
        if not records:
            raise ValueError("no records")
        n = len(records[0].populations)
        columns = {f"P_{i + 1}": np.array([r.populations[i] for r in records])
                   for i in range(n)}
        columns["S_vN_eigen"] = np.array([r.s_vn_eigen for r in records])
        columns["S_vN_pop"] = np.array([r.s_vn_pop for r in records])
        columns["purity"] = np.array([r.purity for r in records])
        columns["L"] = np.array([r.linear_entropy for r in records])
        columns["C_l1_el"] = np.array([r.c_l1_electronic for r in records])
        columns["C_l1_vibronic"] = np.array([r.c_l1_vibronic for r in records])
        columns["variance_Hmol"] = np.array([r.variance_hmol for r in records])
        times = np.array([r.time for r in records])
        return cls(times, columns, n)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def header(self) -> list[str]:
        pops = [f"P_{i + 1}" for i in range(self.n_channels)]
        return ["t_ps", *pops, *self.CORE_COLUMNS]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header)
            for i in range(len(self)):
                row = [f"{units.au_to_ps(self.times[i]):.12e}"]
                for name in self.header[1:]:
                    value = self.columns[name][i]
                    if name == "variance_Hmol":
                        value = value * units.HARTREE_TO_CM1**2
                    row.append(f"{value:.12e}")
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "MeasureSeries":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(x) for x in row] for row in reader if row]
        if not rows or header[0] != "t_ps":
            raise ValueError(f"{path} is not a measure series CSV")
        data = np.array(rows)
        times = units.ps_to_au(data[:, 0])
        columns = {}
        n_channels = 0
        for j, name in enumerate(header[1:], start=1):
            col = data[:, j]
            if name == "variance_Hmol":
                col = col / units.HARTREE_TO_CM1**2
            columns[name] = col
            if name.startswith("P_"):
                n_channels += 1
        return cls(times, columns, n_channels)

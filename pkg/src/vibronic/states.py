"""Bipartite electronic-vibrational states and their density-operator views.

The grid representation is primary: a state is one complex wave packet per
populated electronic channel, all on a shared radial grid.  Coefficient
vectors against the channels' vibrational bases are a derived view used by
the coherence measures; cross-channel basis overlap matrices are cached in
:class:`BasisSet` because they never change along a trajectory.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .grids import SpatialGrid, VibrationalBasis


class TruncationWarning(UserWarning):
    """Projection onto a vibrational basis left noticeable population behind."""


@dataclass(frozen=True)
class BipartiteState:
    """Per-channel wave packets psi_alpha(R) at one instant.

    ``psi`` has shape (n_channels, n_points).  Hard-wall boundaries mean the
    endpoint values are zero for any state produced by the package.
    """

    grid: SpatialGrid
    psi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.ndim != 2 or psi.shape[1] != self.grid.n_points:
            raise ValueError(
                f"psi must have shape (n_channels, {self.grid.n_points}), got {psi.shape}"
            )
        object.__setattr__(self, "psi", psi)

    @property
    def n_channels(self) -> int:
        return self.psi.shape[0]

    def channel_population(self, alpha: int) -> float:
        """P_alpha = <psi_alpha|psi_alpha> under the grid quadrature."""
        return float(np.sum(np.abs(self.psi[alpha]) ** 2) * self.grid.dr)

    def populations(self) -> np.ndarray:
        return np.sum(np.abs(self.psi) ** 2, axis=1) * self.grid.dr

    def total_norm(self) -> float:
        return float(self.populations().sum())

    def overlap(self, alpha: int, beta: int) -> complex:
        """<psi_alpha|psi_beta>; conjugate-symmetric in the channel pair."""
        return complex(np.vdot(self.psi[alpha], self.psi[beta]) * self.grid.dr)

    def gram(self) -> np.ndarray:
        """Matrix of all pairwise overlaps G[a, b] = <psi_a|psi_b>."""
        return np.conjugate(self.psi) @ self.psi.T * self.grid.dr

    def reduced_density(self) -> "ReducedElectronicDensity":
        """Electronic density matrix rho[a, b] = <psi_b|psi_a>."""
        return ReducedElectronicDensity(self.gram().T)

    def normalized(self) -> "BipartiteState":
        return replace(self, psi=self.psi / np.sqrt(self.total_norm()))


@dataclass(frozen=True)
class ReducedElectronicDensity:
    """Hermitian, unit-trace, positive-semidefinite electronic density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > 1e-10 * scale:
            raise ValueError("density matrix is not Hermitian")
        if abs(m.trace().real - 1.0) > 1e-9 or abs(m.trace().imag) > 1e-12:
            raise ValueError(f"density trace must be 1, got {m.trace():.12g}")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -1e-12:
            raise ValueError(f"density matrix not positive semidefinite: min eig {eigs.min():.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def n_channels(self) -> int:
        return self.matrix.shape[0]

    def populations(self) -> np.ndarray:
        return np.diag(self.matrix).real.copy()

    def purity(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def sqrtm(self) -> np.ndarray:
        """Matrix square root via eigendecomposition, tiny negatives clipped."""
        eigs, vecs = np.linalg.eigh(self.matrix)
        eigs = np.where((eigs < 0) & (eigs > -1e-12), 0.0, eigs)
        return (vecs * np.sqrt(eigs)) @ vecs.conj().T


class BasisSet:
    """Vibrational bases of all channels plus cached cross overlap matrices."""

    def __init__(self, bases):
        bases = tuple(bases)
        if not bases:
            raise ValueError("need at least one basis")
        grid = bases[0].grid
        for b in bases:
            if b.grid is not grid and b.grid != grid:
                raise ValueError("all bases must share one grid")
        self.bases = bases
        self.grid = grid
        self._overlaps: dict[tuple[int, int], np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.bases)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.bases)

    def overlap(self, i: int, j: int) -> np.ndarray:
        """Cached <chi_v^i | chi_w^j> matrix (quadrature, identity for i == j)."""
        key = (i, j)
        if key not in self._overlaps:
            m = self.bases[i].overlap_matrix(self.bases[j])
            self._overlaps[key] = m
            self._overlaps[(j, i)] = m.T
        return self._overlaps[key]


@dataclass(frozen=True)
class VibronicCoefficients:
    """Expansion c_v_alpha of each channel packet in its vibrational basis.

    ``residuals`` records, per channel, the population the basis missed; the
    coefficient view is only as good as these numbers are small.
    """

    coefficients: tuple
    basis_set: BasisSet
    time: float = 0.0
    residuals: tuple = ()

    def __post_init__(self):
        coeffs = tuple(np.asarray(c, dtype=complex) for c in self.coefficients)
        if len(coeffs) != len(self.basis_set):
            raise ValueError("one coefficient vector per channel required")
        for c, b in zip(coeffs, self.basis_set.bases):
            if c.shape != (len(b),):
                raise ValueError("coefficient vector length must match its basis")
        object.__setattr__(self, "coefficients", coeffs)
        if not self.residuals:
            object.__setattr__(self, "residuals", (0.0,) * len(coeffs))

    @property
    def n_channels(self) -> int:
        return len(self.coefficients)

    def channel_population(self, alpha: int) -> float:
        return float(np.sum(np.abs(self.coefficients[alpha]) ** 2))

    def populations(self) -> np.ndarray:
        return np.array([self.channel_population(a) for a in range(self.n_channels)])

    def total_population(self) -> float:
        return float(self.populations().sum())

    def flat_values(self) -> np.ndarray:
        return np.concatenate(self.coefficients)

    def flat_energies(self) -> np.ndarray:
        return np.concatenate([b.energies for b in self.basis_set.bases])

    def matrix_element(self, bra: tuple[int, int], ket: tuple[int, int]) -> complex:
        """Vibronic density element rho[(a,v),(b,w)] = c_v_a conj(c_w_b)."""
        (a, v), (b, w) = bra, ket
        return complex(self.coefficients[a][v] * np.conjugate(self.coefficients[b][w]))


def project_coefficients(state: BipartiteState, basis_set: BasisSet,
                         residual_warn: float = 1e-6) -> VibronicCoefficients:
    """Project each channel packet onto its vibrational basis.

    Emits :class:`TruncationWarning` when the total missed population exceeds
    ``residual_warn``.
    """
    if state.n_channels != len(basis_set):
        raise ValueError("state and basis set disagree on the channel count")
    coeffs = []
    residuals = []
    for alpha, basis in enumerate(basis_set.bases):
        c = basis.project(state.psi[alpha])
        coeffs.append(c)
        residuals.append(state.channel_population(alpha) - float(np.sum(np.abs(c) ** 2)))
    total_residual = float(sum(residuals))
    if total_residual > residual_warn:
        warnings.warn(
            f"basis projection misses {total_residual:.3e} population",
            TruncationWarning,
            stacklevel=2,
        )
    return VibronicCoefficients(tuple(coeffs), basis_set, time=state.time,
                                residuals=tuple(residuals))


def reconstruct_state(coeffs: VibronicCoefficients) -> BipartiteState:
    """Grid state sum_v c_v chi_v per channel."""
    packets = [basis.reconstruct(c)
               for c, basis in zip(coeffs.coefficients, coeffs.basis_set.bases)]
    return BipartiteState(coeffs.basis_set.grid, np.array(packets, dtype=complex),
                          time=coeffs.time)


def single_channel_state(grid: SpatialGrid, n_channels: int, channel: int,
                         packet: np.ndarray, time: float = 0.0) -> BipartiteState:
    """State with one populated channel holding the given grid packet."""
    psi = np.zeros((n_channels, grid.n_points), dtype=complex)
    psi[channel] = packet
    return BipartiteState(grid, psi, time=time)


def gaussian_packet(grid: SpatialGrid, center: float, width: float,
                    momentum: float = 0.0) -> np.ndarray:
    """Normalized Gaussian exp(-(R-c)^2/(4 w^2) + i k R); w is the position std.

    Endpoints are zeroed to respect the hard-wall boundaries.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    r = grid.r
    packet = np.exp(-((r - center) ** 2) / (4.0 * width**2) + 1j * momentum * r)
    packet[0] = packet[-1] = 0.0
    norm = np.sqrt(np.sum(np.abs(packet) ** 2) * grid.dr)
    if norm == 0:
        raise ValueError("Gaussian packet vanished on the grid")
    return packet / norm

"""Radial grids, the sine-basis kinetic operator, and bound-state eigensolving.

The grid is uniform with hard walls at both ends.  Kinetic energy is applied
spectrally in the basis of particle-in-a-box sine functions, which vanish at
``r_min`` and ``r_max``; the discrete sine transform (DST-I) over the interior
points makes the operator exact for any lattice wave the grid can hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg


class GridTooCoarseError(RuntimeError):
    """The requested eigenstates need more kinetic resolution than the grid has."""


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform radial grid with hard-wall boundaries.

    Attributes
    ----------
    r_min, r_max : float
        Grid ends in Bohr radii; wavefunctions vanish there.
    n_points : int
        Number of grid points including both ends (at least 8).
    reduced_mass : float
        Reduced mass in atomic units (electron masses).
    """

    r_min: float
    r_max: float
    n_points: int
    reduced_mass: float

    def __post_init__(self):
        if self.n_points < 8:
            raise ValueError(f"n_points must be >= 8, got {self.n_points}")
        if not self.r_min < self.r_max:
            raise ValueError(f"r_min must be < r_max, got [{self.r_min}, {self.r_max}]")
        if self.reduced_mass <= 0:
            raise ValueError(f"reduced_mass must be positive, got {self.reduced_mass}")

    @property
    def length(self) -> float:
        return self.r_max - self.r_min

    @property
    def dr(self) -> float:
        return self.length / (self.n_points - 1)

    @property
    def n_interior(self) -> int:
        return self.n_points - 2

    @cached_property
    def r(self) -> np.ndarray:
        return np.linspace(self.r_min, self.r_max, self.n_points)

    def norm(self, psi: np.ndarray) -> float:
        """Quadrature norm sum(|psi|^2) * dr along the last axis, all channels."""
        return float(np.sum(np.abs(psi) ** 2).real * self.dr)

    def inner(self, bra: np.ndarray, ket: np.ndarray) -> complex:
        """Quadrature inner product <bra|ket> = sum(conj(bra) * ket) * dr."""
        return complex(np.sum(np.conjugate(bra) * ket) * self.dr)


class SineKineticOperator:
    """Kinetic energy -1/(2 mu) d^2/dR^2 with hard walls at both grid ends.

    Eigenfunctions are sin(pi k (R - r_min) / L) with eigenvalues
    pi^2 k^2 / (2 mu L^2), k = 1 .. n_points - 2.  ``apply`` works on full-grid
    vectors (endpoints forced to zero) and accepts batches along the first axis.
    """

    def __init__(self, grid: SpatialGrid):
        self.grid = grid
        m = grid.n_interior
        k = np.arange(1, m + 1)
        self.eigenvalues = (np.pi * k / grid.length) ** 2 / (2.0 * grid.reduced_mass)
        self.max_eigenvalue = float(self.eigenvalues[-1])
        # Sine-spectral multipliers on the odd-extended Fourier grid: one
        # complex FFT round trip applies the operator to a whole batch.
        full = np.zeros(2 * (m + 1))
        full[1:m + 1] = self.eigenvalues
        full[m + 2:] = self.eigenvalues[::-1]
        self._spectral = full

    @property
    def cutoff(self) -> float:
        """Kinetic resolution scale pi^2 (N / L)^2 / (2 mu) of the grid."""
        g = self.grid
        return (np.pi * g.n_points / g.length) ** 2 / (2.0 * g.reduced_mass)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        m = self.grid.n_interior
        ext = np.zeros(psi.shape[:-1] + (2 * (m + 1),), dtype=complex)
        ext[..., 1:m + 1] = psi[..., 1:-1]
        ext[..., m + 2:] = -psi[..., -2:0:-1]
        modes = np.fft.fft(ext, axis=-1)
        modes *= self._spectral
        result = np.fft.ifft(modes, axis=-1)[..., 1:m + 1]
        if np.iscomplexobj(psi):
            out = np.zeros_like(psi)
            out[..., 1:-1] = result
        else:
            out = np.zeros(psi.shape)
            out[..., 1:-1] = result.real
        return out

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """Dense kinetic matrix over the interior points."""
        m = self.grid.n_interior
        k = np.arange(1, m + 1)
        i = np.arange(1, m + 1)
        s = np.sqrt(2.0 / (m + 1)) * np.sin(np.pi * np.outer(i, k) / (m + 1))
        return (s * self.eigenvalues) @ s.T


def kinetic_operator(grid: SpatialGrid) -> SineKineticOperator:
    return SineKineticOperator(grid)


@dataclass(frozen=True)
class VibrationalBasis:
    """Bound eigenpairs of one electronic channel on a shared grid.

    ``functions`` has shape (n_states, n_points); rows are real, orthonormal
    under the grid quadrature, and carry the sign convention that the first
    lobe (coming from ``r_min``) is positive.
    """

    label: str
    energies: np.ndarray
    functions: np.ndarray
    grid: SpatialGrid

    def __len__(self) -> int:
        return len(self.energies)

    def project(self, psi: np.ndarray) -> np.ndarray:
        """Coefficients <chi_v|psi> of a grid vector in this basis."""
        return self.functions @ psi * self.grid.dr

    def reconstruct(self, coefficients: np.ndarray) -> np.ndarray:
        return coefficients @ self.functions

    def overlap_matrix(self, other: "VibrationalBasis") -> np.ndarray:
        """Cross overlaps <chi_v^self | chi_w^other> under grid quadrature."""
        if other.grid is not self.grid and other.grid != self.grid:
            raise ValueError("overlap requires bases on the same grid")
        return self.functions @ other.functions.T * self.grid.dr


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    # First lobe positive: flip if the wavefunction is negative where it first
    # rises above a tenth of its peak magnitude.
    mag = np.abs(vec)
    idx = int(np.argmax(mag > 0.1 * mag.max()))
    return -vec if vec[idx] < 0 else vec


def eigensolve(grid: SpatialGrid, potential, n_states: int, label: str = "") -> VibrationalBasis:
    """Lowest ``n_states`` bound eigenpairs of T + V on the grid.

    Parameters
    ----------
    potential
        Object with ``evaluate(r)`` returning the potential in hartree, and an
        optional ``asymptote`` attribute used to reject unbound states.
    n_states : int
        Must not exceed the number of bound states the grid can represent.

    Raises
    ------
    GridTooCoarseError
        When the highest requested level sits above half the kinetic cutoff
        (counting energy from the potential minimum).
    ValueError
        When fewer than ``n_states`` bound levels exist below the asymptote.
    """
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if n_states > grid.n_interior:
        raise ValueError(
            f"n_states={n_states} exceeds the {grid.n_interior} interior grid points"
        )
    t_op = SineKineticOperator(grid)
    v_full = np.asarray(potential.evaluate(grid.r), dtype=float)
    h = t_op.matrix()
    h[np.diag_indices_from(h)] += v_full[1:-1]
    energies, vectors = scipy.linalg.eigh(h, subset_by_index=(0, n_states - 1))

    v_min = float(v_full.min())
    if energies[-1] - v_min > 0.5 * t_op.cutoff:
        raise GridTooCoarseError(
            f"level {n_states - 1} at {energies[-1] - v_min:.3e} above the well bottom "
            f"exceeds half the kinetic cutoff {t_op.cutoff:.3e}; refine the grid"
        )
    # The asymptote only binds when the curve actually dips below it; a flat
    # curve confines through the box walls alone.
    asymptote = getattr(potential, "asymptote", None)
    if asymptote is not None and asymptote <= v_min:
        asymptote = None
    if asymptote is not None and energies[-1] >= asymptote:
        n_bound = int(np.sum(energies < asymptote))
        raise ValueError(
            f"only {n_bound} bound states below the asymptote, {n_states} requested"
        )

    full = np.zeros((n_states, grid.n_points))
    full[:, 1:-1] = vectors.T / np.sqrt(grid.dr)
    for i in range(n_states):
        full[i] = _fix_sign(full[i])
    return VibrationalBasis(label=label, energies=energies, functions=full, grid=grid)

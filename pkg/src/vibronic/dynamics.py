"""Coupled-channel propagation: grid Chebyshev stepper and a dense oracle.

The time-dependent Hamiltonian is handled by short steps with the pulse
envelope and phase frozen at the step midpoint; within a step the propagator
exp(-i H dt) is applied through a Chebyshev polynomial expansion whose
coefficients are Bessel functions of the scaled step.  A dense matrix
exponential in the truncated vibronic basis provides an independent
propagation route for cross-checks and small models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import jv

from .grids import SpatialGrid, SineKineticOperator
from .states import BasisSet, BipartiteState, VibronicCoefficients

# Chebyshev coefficients below this magnitude are dropped.  Tight enough that
# norm drift stays under 1e-9 across 1e5 steps.
COEFFICIENT_CUTOFF = 1e-15


class SpectralRangeError(RuntimeError):
    """The Hamiltonian left the energy window the expansion was scaled to."""


class NormDriftError(RuntimeError):
    """Propagation lost or gained more norm than unitarity allows."""


class BasisTooLargeError(ValueError):
    """The dense oracle is restricted to small vibronic bases."""


@dataclass(frozen=True)
class CouplingTerm:
    """One pulse-driven off-diagonal block between two channels.

    ``amplitude(t)`` lands on the (upper, lower) block; the (lower, upper)
    block takes the conjugate, keeping the Hamiltonian Hermitian at every t.
    ``detuning`` carries the leftover rotation when the frame reference
    frequency differs from the pulse carrier.
    """

    upper: int
    lower: int
    drive: object
    detuning: float = 0.0

    def amplitude(self, t: float) -> complex:
        a = self.drive.coupling_amplitude(t)
        if self.detuning != 0.0:
            a = a * np.exp(-1j * self.detuning * t)
        return complex(a)


class CoupledHamiltonian:
    """T + V'_alpha on the diagonal, pulse blocks off the diagonal.

    Potentials are the dressed (frame-shifted) curves; they are evaluated on
    the grid once at construction.
    """

    def __init__(self, grid: SpatialGrid, potentials, couplings=()):
        self.grid = grid
        self.kinetic = SineKineticOperator(grid)
        self.v_values = np.array([np.asarray(p.evaluate(grid.r), dtype=float)
                                  for p in potentials])
        self.couplings = tuple(couplings)
        n = self.n_channels
        for c in self.couplings:
            if not (0 <= c.upper < n and 0 <= c.lower < n) or c.upper == c.lower:
                raise ValueError(f"coupling references invalid channel pair "
                                 f"({c.upper}, {c.lower}) of {n} channels")

    @property
    def n_channels(self) -> int:
        return self.v_values.shape[0]

    def apply(self, psi: np.ndarray, t: float) -> np.ndarray:
        return self.frozen(t)(psi)

    def frozen(self, t: float):
        """Hamiltonian applier with couplings evaluated once at time t."""
        amplitudes = [(c.upper, c.lower, c.amplitude(t)) for c in self.couplings]
        v_values = self.v_values
        kinetic = self.kinetic.apply

        def apply_frozen(psi: np.ndarray) -> np.ndarray:
            out = kinetic(psi)
            out += v_values * psi
            for upper, lower, a in amplitudes:
                out[upper] += a * psi[lower]
                out[lower] += np.conjugate(a) * psi[upper]
            return out

        return apply_frozen

    def spectral_bounds(self) -> tuple[float, float]:
        """Conservative energy window covering the spectrum at all times."""
        w_sum = sum(abs(c.drive.coupling) for c in self.couplings)
        e_min = float(self.v_values.min()) - w_sum
        e_max = self.kinetic.max_eigenvalue + float(self.v_values.max()) + w_sum
        return e_min, e_max


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of a grid propagation with their quadrature norms."""

    times: np.ndarray
    states: tuple
    norms: np.ndarray

    def __len__(self) -> int:
        return len(self.states)


def _chebyshev_coefficients(alpha: float, cutoff: float) -> np.ndarray:
    """Expansion coefficients (2 - delta_k0) J_k(alpha), truncated at cutoff."""
    n_max = int(alpha + 40 + 10 * np.log1p(alpha))
    while True:
        k = np.arange(n_max + 1)
        coeff = 2.0 * jv(k, alpha)
        coeff[0] *= 0.5
        tail = np.abs(coeff) < cutoff
        tail[: int(np.ceil(alpha)) + 1] = False  # ignore pre-turnover zeros
        if tail.any():
            return coeff[: int(np.argmax(tail)) + 1]
        n_max *= 2


def _chebyshev_step(apply_h, psi: np.ndarray, center: float, half_span: float,
                    coeff: np.ndarray) -> np.ndarray:
    """Apply exp(-i H dt) via the Chebyshev recurrence for a frozen H."""
    inv = 1.0 / half_span

    def h_scaled(x):
        out = apply_h(x)
        out -= center * x
        out *= inv
        return out

    limit = 25.0 * float(np.sum(np.abs(psi) ** 2))
    phi_prev = psi
    acc = coeff[0] * phi_prev
    phi = -1j * h_scaled(phi_prev)
    acc += coeff[1] * phi
    for k in range(2, len(coeff)):
        phi_next = -2j * h_scaled(phi)
        phi_next += phi_prev
        acc += coeff[k] * phi_next
        phi_prev, phi = phi, phi_next
        if k % 16 == 0 and float(np.sum(np.abs(phi) ** 2)) > limit:
            raise SpectralRangeError(
                "Chebyshev recurrence diverging; spectral bounds exceeded"
            )
    if float(np.sum(np.abs(acc) ** 2)) > limit:
        raise SpectralRangeError(
            "Chebyshev expansion diverged; spectral bounds exceeded"
        )
    return acc


def propagate(h: CoupledHamiltonian, initial: BipartiteState, t0: float, t1: float,
              dt: float, snapshot_stride: int = 1,
              coefficient_cutoff: float = COEFFICIENT_CUTOFF) -> Trajectory:
    """Propagate from t0 to t1 in midpoint-frozen steps of length dt.

    Records the initial state, every ``snapshot_stride``-th step, and the
    final step.  Raises :class:`NormDriftError` if the quadrature norm moves
    by more than 1e-6 from its initial value, and :class:`SpectralRangeError`
    if the expansion leaves its energy window.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    n_steps = max(1, int(round((t1 - t0) / dt)))

    e_min, e_max = h.spectral_bounds()
    center = 0.5 * (e_max + e_min)
    half_span = 0.5 * (e_max - e_min) * 1.1  # safety margin on the window
    coeff = _chebyshev_coefficients(half_span * dt, coefficient_cutoff)
    step_phase = np.exp(-1j * center * dt)

    psi = np.array(initial.psi, dtype=complex)
    psi[:, 0] = psi[:, -1] = 0.0  # hard walls
    norm0 = h.grid.norm(psi)

    times = [t0]
    snapshots = [BipartiteState(h.grid, psi.copy(), time=t0)]
    norms = [norm0]
    for k in range(n_steps):
        t_mid = t0 + (k + 0.5) * dt
        psi = step_phase * _chebyshev_step(h.frozen(t_mid), psi, center, half_span, coeff)
        norm = h.grid.norm(psi)
        if abs(norm - norm0) > 1e-6:
            raise NormDriftError(
                f"norm drifted to {norm:.9f} at t = {t0 + (k + 1) * dt:.6g}"
            )
        if (k + 1) % snapshot_stride == 0 or k + 1 == n_steps:
            t = t0 + (k + 1) * dt
            times.append(t)
            snapshots.append(BipartiteState(h.grid, psi.copy(), time=t))
            norms.append(norm)
    return Trajectory(np.array(times), tuple(snapshots), np.array(norms))


@dataclass(frozen=True)
class CoefficientTrajectory:
    """Vibronic-basis snapshots from the dense oracle propagator."""

    times: np.ndarray
    coefficients: tuple

    def __len__(self) -> int:
        return len(self.coefficients)


class VibronicHamiltonian:
    """The coupled Hamiltonian projected onto the channels' bound bases.

    ``frame_shifts`` are the per-channel dressing energies; diagonal entries
    are E_v + shift, and each coupling block is the pulse amplitude times the
    cross-channel overlap matrix.  Capped at 64 states per channel; this is
    the exact small-model oracle, not the production propagator.
    """

    MAX_STATES = 64

    def __init__(self, basis_set: BasisSet, frame_shifts=None, couplings=()):
        self.basis_set = basis_set
        sizes = basis_set.sizes
        if max(sizes) > self.MAX_STATES:
            raise BasisTooLargeError(
                f"dense oracle capped at {self.MAX_STATES} states per channel"
            )
        if frame_shifts is None:
            frame_shifts = np.zeros(len(basis_set))
        self.frame_shifts = np.asarray(frame_shifts, dtype=float)
        if self.frame_shifts.shape != (len(basis_set),):
            raise ValueError("one frame shift per channel required")
        self.couplings = tuple(couplings)

        bounds = np.concatenate([[0], np.cumsum(sizes)])
        self.slices = tuple(slice(bounds[i], bounds[i + 1]) for i in range(len(sizes)))
        self.energies = np.concatenate(
            [b.energies + s for b, s in zip(basis_set.bases, self.frame_shifts)]
        )
        self._blocks = [basis_set.overlap(c.upper, c.lower) for c in self.couplings]

    @property
    def size(self) -> int:
        return len(self.energies)

    def matrix(self, t: float) -> np.ndarray:
        m = np.diag(self.energies.astype(complex))
        for c, block in zip(self.couplings, self._blocks):
            a = c.amplitude(t)
            m[self.slices[c.upper], self.slices[c.lower]] += a * block
            m[self.slices[c.lower], self.slices[c.upper]] += np.conjugate(a) * block.T
        return m

    def split(self, flat: np.ndarray, time: float = 0.0) -> VibronicCoefficients:
        return VibronicCoefficients(tuple(flat[s] for s in self.slices),
                                    self.basis_set, time=time)


def propagate_exact(h: VibronicHamiltonian, initial: VibronicCoefficients,
                    t0: float, t1: float, dt: float,
                    snapshot_stride: int = 1) -> CoefficientTrajectory:
    """Dense-oracle propagation in the vibronic basis.

    Field-free systems evolve by exact phase factors; with couplings, each
    midpoint-frozen step applies a dense matrix exponential.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    n_steps = max(1, int(round((t1 - t0) / dt)))
    snap_idx = sorted({0, n_steps, *range(snapshot_stride, n_steps, snapshot_stride)})

    c = initial.flat_values()
    if not h.couplings:
        times = t0 + dt * np.array(snap_idx, dtype=float)
        coeffs = tuple(
            h.split(c * np.exp(-1j * h.energies * (t - t0)), time=t) for t in times
        )
        return CoefficientTrajectory(times, coeffs)

    times = [t0]
    coeffs = [h.split(c.copy(), time=t0)]
    for k in range(n_steps):
        t_mid = t0 + (k + 0.5) * dt
        c = scipy.linalg.expm(-1j * h.matrix(t_mid) * dt) @ c
        if k + 1 in snap_idx:
            t = t0 + (k + 1) * dt
            times.append(t)
            coeffs.append(h.split(c.copy(), time=t))
    return CoefficientTrajectory(np.array(times), tuple(coeffs))


def free_evolution(initial: VibronicCoefficients, times) -> CoefficientTrajectory:
    """Exact field-free coefficients c_v(t) = c_v(t0) exp(-i E_v (t - t0)).

    Uses the bare basis energies; magnitudes stay constant for all t.
    """
    times = np.asarray(times, dtype=float)
    energies = initial.flat_energies()
    flat0 = initial.flat_values()
    sizes = initial.basis_set.sizes
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    out = []
    for t in times:
        flat = flat0 * np.exp(-1j * energies * (t - initial.time))
        parts = tuple(flat[bounds[i]:bounds[i + 1]] for i in range(len(sizes)))
        out.append(VibronicCoefficients(parts, initial.basis_set, time=t,
                                        residuals=initial.residuals))
    return CoefficientTrajectory(times, tuple(out))

"""Coupled-channel vibronic wave-packet dynamics and quantum-information measures.

Propagates vibrational wave packets on several electronic potentials driven
by chirped laser pulses, and tracks entanglement (von Neumann and linear
entropy of the electronic subsystem) and coherence (l1 norm, skew
information) along the trajectory.
"""

from .analysis import (OscillationReport, build_report, extremes,
                       predict_periods, spectral_peaks)
from .dynamics import (CoefficientTrajectory, CoupledHamiltonian, CouplingTerm,
                       Trajectory, VibronicHamiltonian, free_evolution,
                       propagate, propagate_exact)
from .grids import SpatialGrid, VibrationalBasis, eigensolve, kinetic_operator
from .measures import (L1Coherence, MeasureRecord, MeasureSeries, SkewProfile,
                       compute_record, energy_variance, l1_coherence_electronic,
                       l1_coherence_vibronic, linear_entropy,
                       linear_entropy_from_coefficients, linear_entropy_pairwise,
                       population_entropy, purity, skew_information_local,
                       skew_information_molecular, skew_information_reduced,
                       velocity_identity, velocity_identity_check,
                       von_neumann_entropy)
from .potentials import (HarmonicPotential, MorsePotential, TabulatedPotential,
                         dress, load_tabulated)
from .pulses import ChirpedPulse, ConstantDrive
from .scenario import (ScenarioConfig, ScenarioResult, load_config,
                       run_scenario, write_outputs)
from .states import (BasisSet, BipartiteState, ReducedElectronicDensity,
                     VibronicCoefficients, gaussian_packet,
                     project_coefficients, reconstruct_state,
                     single_channel_state)

__version__ = "0.1.0"

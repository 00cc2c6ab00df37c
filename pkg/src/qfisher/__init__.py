"""Optimal measurements for estimating an observable through a known noisy channel."""

__version__ = "0.1.0"

from .channel import AffineChannel, KrausChannel, affine_repr, compose, dephasing, depolarizing
from .estimation import (
    OptimalMeasurement,
    compare_tomography,
    fisher_about_x,
    fisher_matrix_povm,
    optimal_measurement,
    sld_fisher_matrix,
    variance,
)
from .spin_boson import BathSpec, PulseSequence, gamma0, pulsed_gamma, trajectory
from .su_basis import ObservableRepr, bloch_to_state, build_generators, state_to_bloch, structure_constants

__all__ = [
    "AffineChannel", "BathSpec", "KrausChannel", "ObservableRepr", "OptimalMeasurement", "PulseSequence",
    "affine_repr", "bloch_to_state", "build_generators", "compare_tomography", "compose", "dephasing",
    "depolarizing", "fisher_about_x", "fisher_matrix_povm", "gamma0", "optimal_measurement",
    "pulsed_gamma", "sld_fisher_matrix", "state_to_bloch", "structure_constants", "trajectory", "variance",
]

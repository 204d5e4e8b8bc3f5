"""Finite-size Lyapunov exponents and spectra of the skew-shift Schrödinger cocycle."""

__version__ = "0.1.0"

from . import _backend
from .cocycle import (
    CocycleParams,
    ScaledMatrix,
    batch_u,
    companion_norm,
    finite_exponent_u,
    scaled_product,
    spectral_norm,
    transfer_matrix,
)
from .grid import GridSpec, mc_points, pairwise_mean, pairwise_sum
from .lyapunov import (
    BadSetReport,
    BadSlice,
    CriterionVerdict,
    LyapunovEstimate,
    SliceProfile,
    bad_set_measure,
    bad_slice_search,
    criterion_check,
    grid_integrate,
    grid_integrate_scales,
    mc_error_bound,
    mc_integrate,
    run_criterion,
    slice_profile,
)
from .phase import (
    FrequencyOmega,
    TorusCoordinate,
    TorusPoint,
    golden_mean,
    phase_at,
    potential,
    potential_sequence,
    skew_shift_power,
    skew_shift_step,
)
from .spectrum import (
    ModalEnergy,
    SpectrumHistogram,
    TridiagonalHamiltonian,
    build_hamiltonian,
    eigen_histogram,
    eigenvalues_bisection,
    max_gap,
    modal_energy,
    residual_distance,
    sturm_count,
)

BACKEND = _backend.NAME

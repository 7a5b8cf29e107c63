"""Finite-volume Gibbs distributions over spatial random permutations.

Points live on a lattice with Poisson multiplicities; permutations are
weighted by exp(-alpha * sum of jump potentials) and represented as gases
of point-disjoint cycles. The package provides exact enumeration of small
volumes, a loss-network perfect sampler that agrees with the enumeration,
and numeric checks for every constant and bound of the temperature-regime
analysis.
"""

from .boxes import Box, Site, centered_box, parse_box
from .cyclegas import (
    Cycle,
    GasConfig,
    compatible,
    cycle_weight,
    gas_compatible,
    gas_from_permutation,
    hamiltonian,
    neighbors,
    ordered_support,
    permutation_from_gas,
)
from .diagnostics import (
    CycleStats,
    cycle_stats,
    kf_event,
    open_path_exists,
    separates,
    separating_set_search,
    tv_distance,
)
from .environment import (
    ContinuumPointSet,
    Environment,
    PointId,
    discretize,
    points_of,
    sample_continuum,
    sample_environment,
)
from .errors import (
    BoundaryError,
    CapExceededError,
    ConsistencyError,
    DomainError,
    InvariantBreachError,
    NonterminationError,
    ParameterError,
    PermgasError,
    StructureError,
    WindowTooSmallError,
)
from .exactgibbs import (
    BoundarySpec,
    SpecTable,
    boundary_cycles,
    enumerate_cycles,
    enumerate_gases,
    sample_exact,
    specification,
)
from .lossnet import (
    CoupledSample,
    LossNetworkSampler,
    Mark,
    MarkSet,
    PerfectSampleInfo,
    ThinningResult,
    ancestor_set,
    coupled_pair,
    free_state,
    generate_marks,
    perfect_sample,
    sample_free_state,
    thin_marks,
    thin_marks_fixed_point,
)
from .potential import (
    ContinuumComparison,
    Potential,
    Quadratic,
    RadialTable,
    jump_range,
    potential_from_name,
    weight_sum,
    weight_sum_closed_bound,
)
from .regime import (
    GoodDensityResult,
    RegimeReport,
    count_cycles_with_support,
    critical_alpha,
    cycle_count_bound,
    evaluate_regime,
    expected_count_bound,
    good_density,
    site_factor,
    support_weight_sum,
    uniqueness_root,
)

__version__ = "0.1.0"

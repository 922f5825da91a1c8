"""Concurrence of rank-2 two-qubit states and the 3-tangle as multi-copy observables."""

__version__ = "0.1.0"

from .entanglement import (  # noqa: E402
    MomentPair,
    concurrence_from_moments,
    tau_from_moments,
    three_tangle_from_reduced,
    three_tangle_hyperdet,
    trace_moments,
    wootters_concurrence,
)
from .observables import (  # noqa: E402
    ObservableGroup,
    build_A,
    build_B,
    build_M,
    build_N,
    build_cyclic_swap,
    build_mm_reduced,
    enumerate_groups,
)
from .sampling import EstimateReport, estimate_concurrence, estimate_moments, estimate_three_tangle, simulate  # noqa: E402
from .states import (  # noqa: E402
    DensityMatrix,
    RandomSource,
    canonical_state,
    haar_random_pure,
    load_state,
    random_rank2_state,
    save_state,
    spin_flip,
)
from .tensor import DenseOperator, PureState, kron, partial_trace, permute_subsystems  # noqa: E402

"""Metropolis Glauber dynamics for proper colourings of complete b-ary trees."""

from .tree_model import (
    StateSpaceTooLarge,
    TreeShape,
    enumerate_omega,
    is_proper,
    make_shape,
    omega_size,
    sample_uniform_colouring,
)
from .glauber_chain import (
    ChainSpec,
    build_matrix,
    check_ergodic,
    mixing_time_exact,
    step,
    variation_distance,
)
from .canonical_paths import canonical_path, congestion, count_consistent_states
from .forced_analysis import (
    classify,
    conductance_exact,
    conductance_mc,
    epsilon,
    forced_set,
    is_loose,
    psi_exact,
    u_exact,
)

__version__ = "0.1.0"

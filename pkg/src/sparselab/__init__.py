"""Dyadic sparse-domination laboratory on the periodic unit cube."""
from .dyadic import (DyadicCube, DyadicLattice, LevelOverflowError, SparseFamily, build_sparse_family,
                     carleson_ratio, children, root, shifted_lattices, verify_sparsity)
from .maximal import (dyadic_maximal, hl_maximal, multilinear_maximal, orlicz_maximal,
                      weighted_dyadic_maximal)
from .pdo import (SquareFunctionSpec, SymbolSpec, builtin_symbol, commutator_apply, multiplier_apply,
                  pdo_apply, square_function, symbol_spot_check)
from .rispaces import (SpaceSpec, associate_pairing_check, boyd_indices, product_hypothesis_check,
                       space_norm)
from .sample import GridFunction, RearrangementProfile, average, distribution, pairing, rearrangement
from .sparse import sparse_apply, sparse_commutator, stopping_family
from .verify import (ExperimentConfig, RatioReport, check_modular, check_sparse_domination,
                     check_weak_endpoint, check_weighted_bound, run_suite)
from .weights import (BmoFunction, Weight, a1_constant, ainfty_constant, ap_constant, bmo_norm,
                      power_weight)
from .young import (YoungFunction, complementary, delta2_constant, dilation_indices, luxemburg_norm,
                    n_function_identities)

__version__ = "0.1.0"

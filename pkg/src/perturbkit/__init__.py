"""Perturbation theory for functions of density matrices.

Divided differences and Frechet derivatives of primary matrix functions,
second-order expansions of entropy, relative entropy, Chernoff information,
fidelity and Bures distance, an exact diagonalization oracle, and a harness
that fits the remainder exponents of every expansion.
"""

from .calculus import (
    ExpansionResult,
    dk_expand,
    frechet_derivative,
    modulus_expansion,
    schur_complement,
    second_directional_derivative,
    singular_root_expansion,
)
from .estimators import MatrixFunctionExpansion, PerturbativeExpansion
from .exact import (
    bures_distance,
    chernoff_bound,
    chernoff_exponent_s,
    fidelity,
    quantum_relative_entropy,
    tsallis_entropy,
    tsallis_relative_entropy,
    von_neumann_entropy,
)
from .functions import (
    ScalarFunctionSpec,
    first_divided_difference,
    first_divided_difference_extended,
    get_function,
    power,
    second_divided_difference,
)
from .harness import fit_slope, run_convergence, run_lemma_suite
from .linalg import SpectralData, block_decompose, eigendecompose, hs_norm
from .measures import (
    MeasureResult,
    bures_se,
    bures_sp,
    chernoff_s_sp,
    dk_expand_state,
    entropy_se,
    entropy_sp,
    fidelity_se,
    fidelity_sp,
    qcb_se,
    qcb_sp,
    qre_se,
    qre_sp,
)
from .states import (
    DensityMatrix,
    PerturbationScenario,
    StatePerturbation,
    density_matrix,
    make_scenario,
    random_density,
    random_perturbation,
    random_scenario,
    validate_perturbation,
)

__version__ = "0.1.0"

"""Quantum Jensen divergences, Frechet derivatives of matrix functions and
randomised joint-convexity / Matrix Entropy Class checks."""

__version__ = "0.1.0"

from .calculus import (
    GeneratorFunction,
    MECPreconditionError,
    SuperOperator,
    apply_function,
    divided_difference,
    finite_diff_directional,
    frechet_apply,
    hermitian_basis,
    superop_invert,
    superop_matrix,
    trace_function,
)
from .catalog import CatalogEntry, MecExpectation, catalog_get, get_generator, scalar_mec_oracle
from .divergence import (
    DivergenceParams,
    QuadratureGrid,
    gauss_legendre_grid,
    jensen_divergence,
    jensen_integral_rep,
    xi_point,
)
from .hermitian import (
    DomainError,
    SpectralDecomposition,
    ValidationError,
    eigendecompose,
    hs_inner,
    loewner_leq,
    random_hermitian,
    random_pd,
)
from .lab import (
    SearchConfig,
    Verdict,
    ViolationCertificate,
    claim32_equivalence_audit,
    expansion_check,
    inverse_concavity_check,
    midpoint_violation_search,
    quadform,
    theorem_audit,
    witness_identity_check,
    zeta_convexity_check,
)

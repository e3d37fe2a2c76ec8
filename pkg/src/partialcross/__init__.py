"""Finite partial C*-dynamical systems, their reduced crossed products, and
desk-scale certification of the maps used to transfer the Haagerup property."""

__version__ = "0.1.0"

from .algebra import (DEFAULT_TOL, AlgebraElement, BlockShape, Ideal, TracialState, adjoint, is_positive,
                      multiply, operator_norm)
from .crossed_product import (CrossedElement, CrossedProduct, RegularRepresentation, build_regular_representation,
                              check_covariance, conditional_expectation, cp_adjoint, cp_multiply, induced_trace,
                              reduced_norm)
from .errors import (CentralityError, CertificationError, DomainError, GroupAxiomError, StructuralError)
from .gns import (GNSSpace, LinearMap, MatrixAlgebra, check_completely_positive, check_tau_decreasing, check_ucp,
                  finite_rank_approximation, induce_operator, two_norm)
from .groups import (FiniteGroup, cyclic_group, direct_product, is_scalar_positive_definite, symmetric_group,
                     validate_group)
from .haagerup import (CenterValuedPDFunction, certify_haagerup_data, compress_to_algebra, equivariance_defect,
                       eta_from_ucp, h_from_eta, induce_ucp_on_crossed, is_pd_wrt_action, pd_matrix,
                       truncation_estimate)
from .inductive_limit import (Chain, ChainStage, Embedding, equivariant_chain_crossed_products, extend_operator,
                              gns_isometry, lift_ucp, validate_embedding)
from .partial_action import (PartialAction, apply, check_invariant_trace, global_action, restrict_global,
                             trivial_action, validate_partial_action)

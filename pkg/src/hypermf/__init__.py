"""Interacting particle systems with higher-order couplings, their fibered
mean-field limits, and the metrics that quantify convergence between the two.

Layers: finite weighted hypergraphs and their step-function embeddings
(`hypergraph`, `hypergraphon`), interaction kernels (`kernels`), particle
integration and discrete-to-limit error constants (`particle`), the fibered
transport solver and continuum characteristics (`vlasov`), measure and
cut-type distances (`metrics`), end-to-end studies (`studies`), and a
command-line driver (`cli`).
"""

from .errors import (CFLError, HypermfError, IntegrationError, ParameterError,
                     ParseError, ResourceLimitError, ValidationError)
from .hypergraph import (AdjacencyTensor, Hypergraph, build_balanced,
                         build_clique_lift, build_homogeneous,
                         load_hypergraph, quadratic_profile, save_hypergraph,
                         scaling_bound, validate_hypergraph)
from .hypergraphon import (AnalyticHypergraphon, AnalyticLevel, Hypergraphon,
                           StepHypergraphon, balanced_hypergraphon,
                           constant_hypergraphon, discretize_l1,
                           discretize_pointwise, homogeneous_hypergraphon,
                           load_step_hypergraphon, sample_to_step,
                           save_step_hypergraphon, step_from_hypergraph)
from .kernels import (InteractionKernel, KernelFamily, check_assumption1,
                      kuramoto_kernel, linear_mean_kernel,
                      opinion_diam_kernel, skardal_kernels)
from .metrics import (CutDistanceResult, DirectedHypertree, DiscreteMeasure,
                      FiberedAtoms, cut_norm_exact, cut_norm_heuristic, d_bl,
                      d_p_nu, d_square, delta_square_perm,
                      fibered_atoms_from_density, hypertree_moment,
                      l1_level_distance, operator_norm_infty_to_1,
                      rebin_fibered_atoms)
from .particle import (McKeanConstants, ParticleState, Trajectory,
                       empirical_fibered, force_particles, integrate,
                       mckean_error_constants, sample_initial_uniform)
from .vlasov import (DensitySeries, FiberedDensity, LabelTrajectory,
                     flow_map_frozen, force_lipschitz_bound, force_sup_bound,
                     load_density, mean_field_force, save_density, solve,
                     solve_continuum, solve_coupled_pde, step_transport,
                     wellposedness_constant)
from .studies import (benchmark_homogeneous, reproduce_figures,
                      run_convergence_study, run_cutdist_study)

__version__ = "0.1.0"

"""Spectral exterior calculus on flat tori and compensated-compactness experiments."""
__version__ = "0.1.0"

from .errors import (ConfigError, DegreeError, ExponentError, GateError, GridError,
                     HodgeLabError, HypothesisWarning, ResolutionError, ShapeError)
from .torus import TorusGrid, merge_indices, multi_indices, star_complement
from .forms import (Form, SpectralForm, codifferential, evaluate, exterior_derivative,
                    gradient_lp_norm, hodge_star, inner_pairing, inner_product_field,
                    laplacian, lp_norm, neg_sobolev_norm, pair_with_test, random_form,
                    to_physical, to_spectral, wedge)
from .hodge import (HodgeParts, coexact_projection, exact_projection, green_operator,
                    harmonic_projection, hodge_decompose)
from .config import ExperimentConfig, load_config, parse_config
from .sequences import FormSequence, bubble, mollified_atom, oscillator
from .harness import (ExperimentResult, Verdict, WeakWedge, bilinear_wedge_experiment,
                      cycle_pairing_check, divcurl_experiment, endpoint_experiment,
                      multilinear_experiment, subcritical_vanishing_check, weak_weak_wedge)
from .estimates import endpoint_elliptic_check, gaffney_check, quadratic_defect_check
from .immersion import (ConnectionForm, SecondFundamentalForm, assemble_connection,
                        clifford_baseline, structural_residual, weak_continuity_experiment)

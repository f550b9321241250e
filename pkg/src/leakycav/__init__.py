"""Input-output theory of a leaky cavity with unwanted noise.

Modules:

* ``bs_network`` - beam-splitter replacement schemes and their cavity coefficients
* ``noise_model`` - coefficient sets, commutator constraints, degeneracy analysis
* ``temporal_modes`` - CAOM / MIM / AOM mode structure and reflection kernel
* ``fock_engine`` - truncated Fock-space states and channels
* ``tomography`` - unbalanced and cascaded homodyne reconstruction
* ``cli`` - the ``leakycav`` command
"""

__version__ = "0.1.0"

from .bs_network import (BeamSplitterParams, ReplacementScheme, coefficients,
                         coefficients_by_elimination, degenerate_scheme_from_vector,
                         ideal_scheme, random_scheme, reflecting_scheme, scheme_from_vector)
from .errors import *  # noqa: F401,F403
from .fock_engine import (CountDistribution, DensityMatrix, coherent_state, displace,
                          exact_phase_space, loss_channel, odd_cat_state,
                          output_count_distribution, quadrature_distribution)
from .noise_model import (CavityCoefficients, GeneralNoiseModel, check_constraints,
                          degenerate_residual, jacobian_rank, manifold_dimension,
                          reduce_to_general)
from .temporal_modes import (ModeBudget, build_modes, discrete_kernel, mode_budget, reflect,
                             spectrum)
from .tomography import (CascadedConfig, UnbalancedConfig, cascaded_reconstruct, dawson, f00,
                         sampling_function, simulate_quadrature_samples, tradeoff_intersection,
                         unbalanced_reconstruct, xi_factor)

"""rismc: physically-consistent RIS models with mutual coupling and offline
scattering optimization for multi-user MIMO downlinks.

The package splits into numerical kernels (``linalg``), channel generation
(``channel``), surface models and constraint projections (``scattering``),
the per-channel precoder/phase solver (``inner``), the offline surface
optimizers (``outer``) and the experiment harness (``config``, ``runner``,
``report``, ``cli``).
"""

__version__ = "0.1.0"

from .channel import (
    ChannelSample,
    ScenarioConfig,
    gen_geometric,
    gen_parametric,
    path_loss,
    steering_bs,
    steering_ris,
    substream,
)
from .config import ExperimentSpec, dbm_to_watts, load_config
from .inner import (
    InnerConfig,
    PrecoderSolution,
    optimal_precoder,
    optimize_inner,
    per_user_mmse,
    phase_gradient,
    sum_rate,
    total_mse,
)
from .linalg import dft_matrix, invert, kron, project_unitary, svd_economy, two_dft
from .outer import (
    OuterConfig,
    OuterTrace,
    grad_s1_sample,
    grad_s2_sample,
    grad_sigma_aa_sample,
    grad_sigma_ab_sample,
    run_algorithm1,
    run_algorithm2,
)
from .runner import emit_results, run_experiment
from .scattering import (
    PhaseConfig,
    ReflectiveScattering,
    TransmissiveScattering,
    check_constraints,
    conventional_reflective,
    effective_reflective,
    effective_transmissive,
    end_to_end,
    identity_transmissive,
    neumann_partial,
    project_lossless,
    symmetrize,
)

__all__ = [name for name in dir() if not name.startswith("_")]

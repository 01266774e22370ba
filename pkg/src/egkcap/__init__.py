"""Ergodic capacity of diversity combiners over extended generalized-K fading."""

from .capacity import (CapacityResult, CombinerSpec, QuadratureSpec, Scheme, aux_c,
                       aux_c_closed_form, aux_c_foxh, aux_c_meijer, aux_c_rmsc_closed_form,
                       capacity_mrc_baselines, combiner_params, ergodic_capacity_inid,
                       ergodic_capacity_joint, integrate_semi_infinite, map_semi_infinite)
from .egk import (EgkParams, egk_generalized_mgf, egk_generalized_mgf_derivative, egk_pdf,
                  egk_pdf_foxh, egk_sample, named_special_case)
from .errors import *  # noqa: F401,F403
from .hyper import (ContourSpec, FoxHSpec, FoxHValue, ValidatedFoxH, eval_foxh, eval_meijer_g,
                    foxh, validate_foxh)
from .montecarlo import (SimulationPlan, SimulationResult, SurrogateBiasReport, combine_snr,
                         simulate_capacity, simulate_surrogate_bias)

__version__ = "0.1.0"

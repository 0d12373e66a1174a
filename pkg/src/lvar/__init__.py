"""Lambda Value-at-Risk under capacities: robust evaluation over ambiguity
sets and multi-agent risk sharing, on finite scenario spaces with exact
merged-grid computation and independent brute-force oracles."""

from .ambiguity import (LikelihoodBand, PhiBall, distortion_rm,
                        invertible_curve, robust_distortion_bound,
                        robust_lambda_var, worst_case_capacity)
from .core import (ATOL, Capacity, Event, FiniteSpace, ProbabilityMeasure,
                   RandomVariable, capacity_dual, capacity_eval, is_monotone,
                   is_subadditive)
from .divergence import (DistortionCurve, PhiFn, divergence_objective,
                         g_inverse, g_value, transform_lambda, x_delta)
from .errors import (ContractError, DomainError, LvarError, NumericError,
                     SchemaError, StructuralError)
from .lambdavar import (INF, DownsetFamily, LambdaFn, choquet_quantile,
                        ext_add, induced_rho, lambda_var, lambda_var_plus,
                        lambda_var_via_choquet)
from .oracle import (GridSpec, brute_comonotone, brute_divergence_witness,
                     brute_inf_convolution, brute_lambda_var,
                     brute_sup_over_ball, greedy_band_mass)
from .risksharing import (Agent, FinitenessClass, FinitenessReport,
                          RobustAgent, SharingResult,
                          comonotone_inf_convolution, finiteness_check,
                          homogeneous_grid_value, inf_convolution,
                          inf_convolution_homogeneous, lambda_star,
                          robust_sharing, sup_convolution_value)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

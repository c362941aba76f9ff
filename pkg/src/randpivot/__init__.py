"""Randomized pivots and confidence intervals for the mean of linear processes."""

from .bootstrap import BootstrapConfig, block_ci, filtered_sieve_ci, sieve_ci
from .ci import Interval, classical_ci, randomized_ci
from .errors import (BudgetExceededError, ConfigError, DegenerateDataError,
                     DegenerateStudentizerError, DegenerateVarianceError, DenominatorError,
                     EstimationError, FitError, IncompleteMomentsError, NoAdmissibleWindowError,
                     ParameterError, RandPivotError)
from .harness import (CoverageReport, EdgeworthConfig, ErrorCurve, ExperimentConfig,
                      coverage_experiment, edgeworth_error_experiment, table_preset)
from .linproc import (Innovation, MomentStructure, ProcessSpec, Series, plugin_moments,
                      sample_autocov, simulate, theoretical_moments)
from .pivot import (conditional_variance, pivot_classical, pivot_randomized,
                    randomized_variance)
from .studentize import (HacEstimate, MemoryEstimate, bandwidth, estimate_memory, hac_classical,
                         hac_complete, hac_partial, studentized_classical, studentized_randomized)
from .weights import WeightScheme, gen_weights, pattern_moments
from .window import WindowSolution, model_window, plugin_window, solve_window_constant

__version__ = "0.1.0"

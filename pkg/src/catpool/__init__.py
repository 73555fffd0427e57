"""Pareto-optimal catastrophe risk pooling over independent heavy-tailed losses.

Closed-form limit diversification ratios and their optimal feasible set,
Monte Carlo estimation of practical diversification ratios, global
metaheuristics for the practical optimum, and the extreme-value estimation
and testing pipeline for observed loss data.
"""

from .distributions import (FrechetParams, frechet_cdf, frechet_layer_expectation,
                            frechet_quantile, frechet_sample)
from .errors import (ConfigError, DataError, DegeneratePoolError,
                     EstimationError)
from .evt import (HillEstimate, PooledTailEstimate, evt_var, hill_estimate,
                  hill_sweep, order_statistics, pooled_tail_estimate,
                  scale_estimate)
from .ingest import (ClaimRecord, LossSeries, aggregate_monthly, parse_claims,
                     persist_series, read_series)
from .montecarlo import (DrReport, PoolSample, build_pool_sample, dr_empirical,
                         dr_simulated)
from .optimize import (ALGORITHMS, ComparisonReport, OptimizerConfig,
                       OptimizerRun, compare_optimizers, minimize,
                       pool_objective)
from .pool import (AsymptoticDr, FeasibleBox, LambdaVector, LayerSpec,
                   TailModel, asymptotic_dr, attachment_from_var,
                   distance_to_box, feasible_box, layer_loss, pool_delta,
                   premium_shares, z_set)
from .stattests import (RvTestResult, TailEquivalenceResult, correlation_tests,
                        rv_critical_value, rv_test, rv_test_statistic,
                        tail_equivalence_test)

__version__ = "0.1.0"

"""Duplication-divergence random graphs and their birth-catastrophe tagged-degree processes."""
from .model import (ModelSpec, MultiBirth, RegimeReport, SpecError, ThinningFamily, basic,
                    classify, config_digest, dense_generator, eta_star, p_star, q_row, region,
                    region_boundaries, spec_from_config, x_star)
from .timechange import harmonic, harmonic_gap, landing_step, log_gamma_ratio, sandwich_violations
from .forward import (DistributionVector, TruncationWarning, conditional_from_semigroup,
                      conditional_limit, discrete_recursion, quasi_stationarity_check,
                      recover_unweighted, semigroup, stationary, weighted_discrete_recursion)
from .tagged import (CoupledPair, PathSample, basic_fast_many, build_coupled_pair,
                     quantile_couple, simulate_basic_fast, simulate_ctmc,
                     simulate_discrete_tagged)
from .graph import (DDGraph, DegreeCensus, census, census_to_distribution, complete_graph,
                    duplicate_step, from_edges, run_graph)
from .statlab import ExperimentReport

__version__ = "0.1.0"

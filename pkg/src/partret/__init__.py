"""Partition Retention: find small interacting groups of influential
discrete variables by partition-based influence statistics."""
from .dataset import (Dataset, DataError, DiscretizationSpec, discretize, load_csv,
                      normalize_response, write_csv, RANDOM_Y, SPECIFIED_Y)
from .influence import (PartitionTable, DropScore, build_partition, influence_I, influence_J,
                        drop_score, drop_score_closed_form, null_expectation_I, coarsen)
from .elimination import EliminationTrace, StoppingRule, eliminate, stopping_rule
from .ranking import RankingTable
from .marginal import (t_statistic, i1, chi_square, pair_scan, rank_i2_first_appearance,
                       rank_i2f, marginal_ranking)
from .screening import (ScreeningConfig, RetentionTally, screen, rank_by_retention,
                        resuscitate, InfeasibleConfig)
from .permfdr import (PermutationStudy, FdrCurve, permute_response, run_permutation_study,
                      fdr_curve, threshold_at, rank_coverage_curve, spiked_permutation,
                      select_variables)
from .simgen import (ExampleSpec, generate, gen_example1, gen_example2, gen_example3,
                     gen_example4, gen_example5)

__version__ = "0.1.0"

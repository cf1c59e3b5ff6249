"""Learning adversary response functions in security games.

Parametric (SUQR) and non-parametric Lipschitz response models, defender
planning against a learned model, prediction-error evaluation, and
sample-complexity / utility-bound calculators.
"""
from .complexity import (ComplexityQuery, ComplexityResult, eulerian_numbers, irwin_hall_cdf,
                         ln_cover_X, ln_irwin_hall_cdf, rho_distance, samples_gsuqr,
                         samples_gsuqr_weak, samples_npl, samples_ssuqr)
from .evaluation import (EvalReport, alpha_metric, coarse_grained_alpha, evaluate,
                         inverse_sqrt_fit, sample_size_sweep)
from .game import (AttackDataset, AttackRecord, SecurityGame, ValidationError, check_distribution,
                   check_strategy, dedupe_dataset, defender_utility, load_game, read_dataset_csv,
                   softmax_from_exponents, write_dataset_csv)
from .npl import NplModel, minlip_extend, npl_fit, npl_fit_anchors, npl_predict, select_khat
from .optim import ConvergenceError, SolverConfig, project_capped_simplex
from .parametric import (GeneralizedSuqrModel, StandardSuqrModel, gsuqr_fit, gsuqr_predict,
                         log_likelihood, ssuqr_fit, ssuqr_predict)
from .planner import (UtilityBoundInputs, delta_from_risk, empirical_pinsker_check, plan_strategy,
                      utility_lower_bound)
from .serialization import load_model, save_model
from .simulate import GroundTruth, random_game, sample_strategies, simulate_attacks, simulate_dataset

__version__ = "0.1.0"

"""Online structured prediction with Fenchel-Young surrogate losses.

Score vectors are decoded to structured outputs by a randomized rule whose
expected target loss is controlled by the surrogate loss round by round;
online gradient methods on linear estimators then enjoy regret bounds that
stay finite in the horizon.  The package ships the polytope output spaces,
affine target losses, regularized prediction maps, decoding, learners, and
an experiment harness with closed-form bound accounting.
"""

from .errors import (
    CapacityError,
    ConfigurationError,
    ConvergenceError,
    GenerationError,
    InputError,
)
from .spaces import (
    Birkhoff,
    Enumerated,
    Hypercube,
    OrdinalChain,
    OutputSpace,
    Permutahedron,
    Simplex,
    space_from_json,
)
from .target_losses import (
    TargetLoss,
    builtin_loss,
    hamming_loss,
    loss_from_json,
    ordinal_absolute_loss,
    permutahedron_align_loss,
    rank_mismatch_loss,
    zero_one_loss,
)
from .frank_wolfe import (
    ConvexCombination,
    QuadraticObjective,
    decompose,
    minimize_quadratic,
)
from .regularizers import (
    CrfEnumerable,
    EntropySimplex,
    Prediction,
    QuadraticRegularizer,
    Regularizer,
    ScaledEntropyBirkhoff,
    regularizer_from_json,
)
from .decoder import DecodePlan, decode, expected_target_loss, plan
from .learners import (
    Learner,
    OgdAdaptive,
    OgdConstant,
    ParameterFree,
    ProblemConstants,
    learner_from_json,
    regret_certificate,
)
from .streams import (
    AdaptiveStream,
    Stream,
    generate_linear_model_stream,
    generate_lower_bound_stream,
    generate_separable_stream,
    lower_bound_round_count,
    random_planted_matrix,
)
from .harness import (
    RegretTrace,
    RoundRecord,
    baseline_uniform_exploration_decode,
    build_summary,
    high_prob_eval,
    online_to_batch,
    run,
    trace_to_csv,
    write_summary_json,
    write_trace_csv,
)
from .config import Experiment, builtin_triple, config_hash, expand_sweep, load_config
from .estimator import OnlineStructuredPredictor

__version__ = "0.1.0"

__all__ = [
    "AdaptiveStream",
    "Birkhoff",
    "CapacityError",
    "ConfigurationError",
    "ConvergenceError",
    "ConvexCombination",
    "CrfEnumerable",
    "DecodePlan",
    "EntropySimplex",
    "Enumerated",
    "Experiment",
    "GenerationError",
    "Hypercube",
    "InputError",
    "Learner",
    "OgdAdaptive",
    "OgdConstant",
    "OnlineStructuredPredictor",
    "OrdinalChain",
    "OutputSpace",
    "ParameterFree",
    "Permutahedron",
    "Prediction",
    "ProblemConstants",
    "QuadraticObjective",
    "QuadraticRegularizer",
    "Regularizer",
    "RegretTrace",
    "RoundRecord",
    "ScaledEntropyBirkhoff",
    "Simplex",
    "Stream",
    "TargetLoss",
    "baseline_uniform_exploration_decode",
    "build_summary",
    "builtin_loss",
    "builtin_triple",
    "config_hash",
    "decode",
    "decompose",
    "expand_sweep",
    "expected_target_loss",
    "generate_linear_model_stream",
    "generate_lower_bound_stream",
    "generate_separable_stream",
    "hamming_loss",
    "high_prob_eval",
    "learner_from_json",
    "load_config",
    "loss_from_json",
    "lower_bound_round_count",
    "minimize_quadratic",
    "online_to_batch",
    "ordinal_absolute_loss",
    "permutahedron_align_loss",
    "plan",
    "random_planted_matrix",
    "rank_mismatch_loss",
    "regret_certificate",
    "regularizer_from_json",
    "run",
    "space_from_json",
    "trace_to_csv",
    "write_summary_json",
    "write_trace_csv",
    "zero_one_loss",
]

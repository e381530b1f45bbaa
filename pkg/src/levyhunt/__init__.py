"""Hunt's hypothesis (H) for Levy processes: analytic verdicts and Monte Carlo checks."""

__version__ = "0.1.0"

from .errors import (
    CapabilityError,
    ConvergenceError,
    EvaluationError,
    IntegrabilityError,
    InvalidTripletError,
    LevyHuntError,
    ProbeError,
    QuadratureError,
    SpecFileError,
)
from .hcheck import (
    GridSpec,
    HuntReport,
    KestenClass,
    KestenResult,
    QuadSpec,
    Rule,
    Tolerances,
    Verdict,
    decide_H,
    density_flag,
    estimate_kanda_forst,
    kanda_forst_bound_fullrank,
    kesten,
    subordinator_rule,
    subordinator_triplet,
)
from .simulate import (
    AffineSubspace,
    HittingEstimate,
    PathEnsemble,
    Point,
    SimConfig,
    estimate_hitting,
    first_off_range_jump,
    sample_paths,
    thinness_probe,
)
from .specfile import ProcessSpec, dump_spec, load_fixture, load_spec, parse_spec
from .spectral import SolveResult, SpectralData, decompose, solve_condition_S, transform_triplet
from .triplet import (
    Atomic,
    ExponentOnly,
    LevyTriplet,
    NoJumps,
    RadialPower,
    compensated_drift,
    exponent,
    restrict_off_range,
    symmetric_stable,
    symmetrized_exponent,
)

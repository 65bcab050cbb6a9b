"""Numerical tests for whether a norm on R^d is induced by an inner product."""

__version__ = "0.1.0"

from .characterize import (  # noqa: E402
    CharacterizationResult,
    TestParams,
    Verdict,
    bilinearity_check,
    check_characterization,
    compute_A,
    compute_R,
    day_test,
    enumerate_sign_patterns,
    frechet_defect,
    parallelogram_defect,
    polarization,
    rkn_akn_test,
)
from .search import SearchConfig, Target, ViolationCertificate, search_violation, sweep  # noqa: E402
from .vecspace import (  # noqa: E402
    CustomNorm,
    MaxOf,
    PNorm,
    QuadraticNorm,
    ScaledSum,
    SupNorm,
    WeightedPNorm,
    evaluate,
    norm_axiom_check,
    norm_from_json,
)

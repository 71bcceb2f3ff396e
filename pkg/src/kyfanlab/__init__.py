"""kyfan-lab: a numerical verification laboratory for partial-sum identities
and inequalities of weakly stationary sequences.

Models come in three interchangeable representations (covariance function,
atomic spectral measure, operator orbit); a cached Gram engine computes
partial-sum norms and inner products for each; checker modules verify the
three-term average identity, its norming generalizations, subadditive limit
statements, ratio diagnostics along index subsequences, fractional
difference transforms, and the running-sup ratio bound, all with explicit
residuals and documented tolerances.
"""

from .errors import (
    ConfigError,
    HorizonError,
    KyfanLabError,
    ModelError,
    PreconditionError,
    SeriesFormatError,
    StationarityError,
    UndefinedRatioError,
)
from .models import (
    CovarianceModel,
    InvariantCheck,
    OperatorOrbitModel,
    SpectralAtomsModel,
    ValidationReport,
    covariance_of,
    model_from_dict,
    model_id,
    model_to_dict,
    to_covariance,
    validate,
)
from .reports import CheckReport, ScanReport, Tolerance, DEFAULT_TOL
from .sums import GramEngine, SumStats, dirichlet_kernel_sq, dirichlet_sum
from .kyfan import (
    NormingSequence,
    kyfan_identity,
    kyfan_inequality,
    norming_inequality,
    scan,
    superadditivity_check,
)
from .asymptotics import (
    CesaroReport,
    DensityReport,
    FeketeTrace,
    ProjectionReport,
    cesaro_limit,
    density_limit,
    fekete_limit,
    fixed_space_projection,
)
from .diagnostics import (
    ChainReport,
    ChainSpec,
    IndexSequence,
    RatioReport,
    arithmetic_identity,
    chain_series,
    ratio_statistic,
    ratio_sum,
    recenter,
)
from .fractional import (
    DecayTrace,
    FractionalTransform,
    SeriesReport,
    apply_fractional,
    decay_trace,
    membership_series,
)
from .fsup import (
    FSupTable,
    IRatioReport,
    SubadditivityScan,
    f_sq,
    prop_iratio,
    subadditivity_scan,
)

__version__ = "0.1.0"

"""Impedance-based stability margin assessment for paralleled power park modules."""

from .errors import (
    AmbiguousWinding,
    CriticalPointOnLocus,
    DisjointSpans,
    EmptyTable,
    GenerationFailed,
    GridMismatch,
    InconsistentInputs,
    KindMismatch,
    MarginGateError,
    NonFiniteValue,
    NonMonotonicFrequency,
    NonpositiveImpedanceMagnitude,
    NotOnUnitCircle,
    OutOfRange,
    ResonanceSingular,
    SingularAtFrequency,
    SingularSensitivity,
    UnknownHeader,
    UnsupportedFormat,
    ZeroDenominator,
    ZeroMagnitudeSample,
)
from .freqresp import (
    FrequencyGrid,
    FrequencyResponse,
    PhaseSeries,
    align,
    log_grid,
    parse_response,
    unwrap_phase,
    value_at,
    values_at,
    write_response,
)
from .loopgain import (
    LoopGain,
    LoopGainDerivation,
    consistency_error,
    loop_gain,
    one_plus,
    rho,
    update_loop_gain,
)
from .margins import (
    CrossoverPoint,
    MarginDecomposition,
    MarginSummary,
    decompose_margins,
    find_crossovers,
    margin_at,
    summarize_margins,
)
from .netsynth import (
    Capacitor,
    CaseFixture,
    Inductor,
    NetworkElement,
    Parallel,
    Rational,
    Resistor,
    Series,
    Thevenin,
    eval_network,
    network_from_json,
    network_to_json,
    par,
    random_case,
    scale_network,
    ser,
)
from .regions import (
    EncirclementResult,
    RegionVerdict,
    classify_crossing,
    critical_intersection,
    gm_circle_check,
    winding_number,
)
from .report import (
    AssessmentReport,
    build_report,
    parse_report,
    render,
)
from .speclimit import (
    ComplianceRecord,
    LimitCurve,
    MarginPolicy,
    check_compliance,
    impedance_limit,
    limit_curve,
    pm_old_at,
)

__version__ = "0.1.0"

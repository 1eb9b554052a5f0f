"""Exception hierarchy shared across the package.

Every contract violation raises one of these; plain ValueError is reserved
for programming errors (bad enum strings, wrong argument types).
"""


class MarginGateError(Exception):
    """Base class for all margin-gate errors."""


# -- frequency-response data -------------------------------------------------

class UnknownHeader(MarginGateError):
    """Table header is not one of the recognized column sets."""


class NonMonotonicFrequency(MarginGateError):
    """Frequency column is not strictly increasing and positive."""


class NonFiniteValue(MarginGateError):
    """A numeric field is NaN, infinite, or unparseable."""


class EmptyTable(MarginGateError):
    """File contains no data rows."""


class OutOfRange(MarginGateError):
    """Requested frequency lies outside the measured span."""


class DisjointSpans(MarginGateError):
    """Grids share no usable common frequency span."""


class ZeroMagnitudeSample(MarginGateError):
    """Operation needs log-magnitude or phase of a zero sample."""


# -- network synthesis -------------------------------------------------------

class SingularAtFrequency(MarginGateError):
    """Network evaluation hits a pole or exact antiresonance on the grid."""


class ResonanceSingular(MarginGateError):
    """Parallel combination of impedances that sum to (numerically) zero."""


class GenerationFailed(MarginGateError):
    """Random fixture generation exhausted its retry budget."""


# -- loop-gain algebra -------------------------------------------------------

class GridMismatch(MarginGateError):
    """Pointwise operation on responses with different grids."""


class ZeroDenominator(MarginGateError):
    """Quotient denominator curve contains a zero sample."""


class SingularSensitivity(MarginGateError):
    """|1 + rho| vanished; the loop-gain update is undefined there."""


# -- margins and limits ------------------------------------------------------

class KindMismatch(MarginGateError):
    """Crossover value inconsistent with the requested margin kind."""


class NonpositiveImpedanceMagnitude(MarginGateError):
    """Impedance limit requested for a non-positive |Z_net|."""


# -- Nyquist regions ---------------------------------------------------------

class NotOnUnitCircle(MarginGateError):
    """Crossing classification needs a value of unit magnitude."""


class CriticalPointOnLocus(MarginGateError):
    """A locus sample coincides with the critical point -1+0j."""


class AmbiguousWinding(MarginGateError):
    """Angle sum does not resolve to an integer winding number."""


# -- reporting / CLI ---------------------------------------------------------

class UnsupportedFormat(MarginGateError):
    """Requested report format is not implemented."""


class InconsistentInputs(MarginGateError):
    """Report components disagree (grids, policies, or record counts)."""

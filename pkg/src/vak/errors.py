"""Exception types shared across the kit."""


class VakError(Exception):
    """Base class for all library errors."""

    code = "error"


class DimensionMismatch(VakError):
    code = "dimension-mismatch"


class NotACone(VakError):
    code = "not-a-cone"


class ScaleExceeded(VakError):
    """Enumeration exceeded the configured node budget."""

    code = "scale-exceeded"


class EmptyCone(VakError):
    code = "empty-cone"


class PointNotOnGraph(VakError):
    code = "point-not-on-graph"


class RankDeficient(VakError):
    code = "rank-deficient"


class DegenerateChord(VakError):
    code = "degenerate-chord"


class FormsDisagree(VakError):
    """Fixed-point and intersection forms differ; indicates an upstream bug."""

    code = "forms-disagree"


class InsufficientSamples(VakError):
    code = "insufficient-samples"


class UnboundedIntermediate(VakError):
    code = "unbounded-intermediate"


class UnboundedDecomposition(VakError):
    code = "unbounded-decomposition"


class UnsupportedRestrictionSet(VakError):
    code = "unsupported-restriction-set"


class DimensionTooHigh(VakError):
    code = "dimension-too-high"


class SchemaViolation(VakError):
    """Carries the full list of validation errors, not just the first."""

    code = "schema-violation"

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))

"""Exception types. Each carries a stable ``code`` used by the CLI."""


class GaugeLabError(Exception):
    code = "E_DOMAIN"


class BallTooLarge(GaugeLabError, ValueError):
    code = "E_BALL_TOO_LARGE"


class ShapeError(GaugeLabError, ValueError):
    code = "E_SHAPE"


class FrameNormError(ShapeError):
    code = "E_FRAME_NORM"


class SingularCenter(GaugeLabError, ValueError):
    code = "E_SINGULAR_CENTER"


class BranchCut(GaugeLabError, ValueError):
    code = "E_BRANCH_CUT"


class AuditUndefined(GaugeLabError, ValueError):
    code = "E_AUDIT_UNDEFINED"


class Inapplicable(GaugeLabError):
    code = "E_INAPPLICABLE"


class DegenerateShell(GaugeLabError, ValueError):
    code = "E_DEGENERATE_SHELL"


class InsufficientResolution(GaugeLabError):
    code = "E_RESOLUTION"


class RefinementBreaksCover(GaugeLabError):
    code = "E_REFINE_COVER"


class FormatError(GaugeLabError, ValueError):
    """Malformed or inconsistent GRF1 input."""

    code = "E_FORMAT"

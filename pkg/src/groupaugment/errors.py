"""Exception types shared across the package."""


class GroupAugmentError(Exception):
    """Base class for all package errors."""


class ValidationError(GroupAugmentError, ValueError):
    """A value, configuration, or file failed validation."""


class ImageError(ValidationError):
    """Invalid image buffer or unreadable/unsupported image file."""


class DegenerateConfigError(ValidationError):
    """A configuration that cannot be executed (e.g. all-zero group weights)."""


class ProtocolError(GroupAugmentError):
    """Objective-evaluator wire protocol violation."""


class BudgetExhaustedError(GroupAugmentError):
    """No evaluations left in the search budget."""


class InsufficientTrialsError(GroupAugmentError):
    """Not enough completed trials for the requested analysis."""

import logging
from functools import wraps
from typing import Any, NamedTuple, Optional

logger = logging.getLogger(__name__)


class Outcome(NamedTuple):
    value: Any
    error: Optional[str]

    @property
    def ok(self):
        return self.error is None


def isolated(func):
    """Return an Outcome holding either the value or the error message."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return Outcome(func(*args, **kwargs), None)
        except (ArithmeticError, RuntimeError, ValueError) as error:
            logger.warning("%s failed: %s", func.__name__, error)
            return Outcome(None, f"{type(error).__name__}: {error}")

    return wrapper


def reported(func):
    """Log the start and the end of a long computation at info level."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        logger.info("%s started", func.__name__)
        result = func(*args, **kwargs)
        logger.info("%s finished", func.__name__)
        return result

    return wrapper

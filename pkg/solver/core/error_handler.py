"""
Error Handler & Structured Logging
Readable failures for the cycloid solver: what broke, where, and what to try next
"""

import logging
import sys
from datetime import datetime, timezone
from functools import wraps
from typing import Any, Dict, List, Optional

import colorama
from pythonjsonlogger import jsonlogger


LOG_FORMAT = '%(asctime)s | %(levelname)s | %(name)s | %(message)s'


class ColoredFormatter(logging.Formatter):
    """Colored log formatter for terminal output"""

    COLORS = {
        'DEBUG': '\033[36m',     # Cyan
        'INFO': '\033[32m',      # Green
        'WARNING': '\033[33m',   # Yellow
        'ERROR': '\033[31m',     # Red
        'CRITICAL': '\033[35m',  # Magenta
    }
    RESET = '\033[0m'

    def format(self, record):
        # Work on a copy so file/JSON handlers sharing the record stay uncoloured
        record = logging.makeLogRecord(record.__dict__)
        color = self.COLORS.get(record.levelname, self.RESET)
        record.levelname = f"{color}{record.levelname}{self.RESET}"
        return super().format(record)


def setup_logging(
    level=logging.INFO,
    log_file: Optional[str] = None,
    json_format: bool = False,
):
    """
    Setup structured logging with colors, optional JSON lines and file output.

    Calling it again replaces the handlers installed by the previous call.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR) or its name
        log_file: Optional file path for log output
        json_format: Emit one JSON object per record on the console

    Returns:
        The configured root logger
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            raise ConfigError(
                message="Unknown log level",
                context={'level': level},
            )

    colorama.just_fix_windows_console()

    root = logging.getLogger()
    root.setLevel(level)
    for handler in list(root.handlers):
        if getattr(handler, '_cycloid_handler', False):
            root.removeHandler(handler)

    console = logging.StreamHandler(sys.stderr)    # stdout carries the JSON reports
    console.setLevel(level)
    if json_format:
        console.setFormatter(jsonlogger.JsonFormatter(
            '%(asctime)s %(levelname)s %(name)s %(message)s'
        ))
    else:
        console.setFormatter(ColoredFormatter(LOG_FORMAT, datefmt='%H:%M:%S'))
    console._cycloid_handler = True
    root.addHandler(console)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)  # Log everything to file
        file_handler.setFormatter(logging.Formatter(
            LOG_FORMAT,
            datefmt='%Y-%m-%d %H:%M:%S'
        ))
        file_handler._cycloid_handler = True
        root.addHandler(file_handler)

    return root


class CycloidError(Exception):
    """
    Base exception for the cycloid solver.

    Carries the failing component, numeric context and suggestions so that a
    CLI report or a test failure explains itself. ``exit_code`` is what the
    command-line entry point returns when this error ends a command.
    """

    exit_code = 1
    default_component = "unknown"
    default_suggestions: List[str] = []

    def __init__(
        self,
        message: str,
        component: Optional[str] = None,
        context: Optional[Dict[str, Any]] = None,
        suggestions: Optional[list] = None,
        original_error: Optional[Exception] = None
    ):
        self.message = message
        self.component = component or self.default_component
        self.context = context or {}
        self.suggestions = suggestions if suggestions is not None else list(self.default_suggestions)
        self.original_error = original_error
        self.timestamp = datetime.now(timezone.utc).isoformat()

        super().__init__(self._build_message())

    def _build_message(self) -> str:
        """Build a structured, helpful error message"""
        lines = [
            "\n" + "=" * 70,
            f"❌ CYCLOID SOLVER ERROR ({type(self).__name__})",
            "=" * 70,
            "",
            f"🔴 Component: {self.component}",
            f"🔴 Problem:   {self.message}",
            f"🕐 Time:      {self.timestamp}",
        ]

        if self.context:
            lines.append("\n📋 Context:")
            for key, value in self.context.items():
                lines.append(f"   • {key}: {value}")

        if self.original_error:
            lines.append(f"\n🐛 Original Error: {type(self.original_error).__name__}")
            lines.append(f"   {str(self.original_error)}")

        if self.suggestions:
            lines.append("\n💡 Suggestions:")
            for suggestion in self.suggestions:
                lines.append(f"   • {suggestion}")

        lines.append("\n" + "=" * 70 + "\n")

        return "\n".join(lines)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON reports"""
        return {
            'error': type(self).__name__,
            'component': self.component,
            'message': self.message,
            'context': {key: _jsonable(value) for key, value in self.context.items()},
            'suggestions': self.suggestions,
            'timestamp': self.timestamp,
            'exit_code': self.exit_code,
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


class InvalidModel(CycloidError):
    """Plane model rejected (family parameters, convexity, positivity)"""
    exit_code = 2
    default_component = "plane"
    default_suggestions = [
        "LpBall needs p > 1, Ellipse needs a, b > 0",
        "FourierSupport terms must use even k >= 2",
        "Keep the k-terms small enough that H > 0 and H + H'' > 0",
    ]


class GridTooCoarse(CycloidError):
    """Duality residual too large for the requested grid"""
    exit_code = 2
    default_component = "plane"
    default_suggestions = [
        "Increase --n (power of two)",
        "Reduce high-k Fourier terms",
    ]


class ConfigError(CycloidError):
    """Configuration errors"""
    exit_code = 2
    default_component = "Configuration"
    default_suggestions = [
        "Check the .env file next to solver/",
        "Compare with .env.example for the expected formats",
        "Numbers must parse as floats/ints, booleans as true/false",
    ]


class StepUnderflow(CycloidError):
    """Adaptive step fell below the machine-relative floor"""
    exit_code = 3
    default_component = "sturm"
    default_suggestions = [
        "Loosen the integrator tolerance (CYCLOID_ODE_TOL)",
        "The plane may be too degenerate near a coefficient singularity",
    ]


class BracketFailure(CycloidError):
    """Eigenvalue search could not bracket the requested rung"""
    exit_code = 3
    default_component = "spectrum"
    default_suggestions = [
        "Raise the search cap (--lambda-cap)",
        "Lower --kmax",
        "Check the plane diagnostics with the `plane` command",
    ]


class LadderTooShort(CycloidError):
    """Eigen-expansion residual above the requested tolerance"""
    exit_code = 3
    default_component = "analysis"
    default_suggestions = [
        "Compute the ladder with a larger k_max",
        "Use a smoother (lower-frequency) input function",
    ]


class SingularSupport(CycloidError):
    """Support function derivative is not finite at a regular node"""
    exit_code = 4
    default_component = "geometry"
    default_suggestions = [
        "Pass the h'/[q,q'] samples from the integrator",
        "Use curve_from_eigen for eigen-cycloids",
    ]


class NotZeroDualLength(CycloidError):
    """Input of the involute operator is not in L0"""
    exit_code = 4
    default_component = "analysis"
    default_suggestions = [
        "Subtract the weighted mean: h - <h,1>/<1,1>",
        "Use analysis.project_c0 before iterating involutes",
    ]


class PreconditionViolated(CycloidError):
    """Input violates an operation precondition"""
    exit_code = 4
    default_component = "analysis"
    default_suggestions = [
        "Project out the low-order eigen-components first",
    ]


class BadRequest(CycloidError):
    """Command-line request that cannot be served"""
    exit_code = 4
    default_component = "cli"
    default_suggestions = [
        "Run with --help for the accepted flag combinations",
    ]


class InvariantFailure(CycloidError):
    """A verification suite found a violated invariant"""
    exit_code = 1
    default_component = "verify"
    default_suggestions = [
        "Inspect the JSON report for the failing check",
        "Increase --n or tighten --tol and rerun",
    ]


def log_error(logger: logging.Logger, error: Exception, context: Optional[Dict] = None):
    """
    Log an error with full context and traceback.

    Args:
        logger: Logger instance
        error: Exception to log
        context: Optional context dict
    """
    if isinstance(error, CycloidError):
        logger.error(f"{type(error).__name__} in {error.component}: {error.message}")
    else:
        logger.error(f"Exception: {type(error).__name__}: {str(error)}")

    if context:
        logger.error(f"Context: {context}")

    # Full traceback at DEBUG level
    logger.debug("Traceback:", exc_info=error)


def safe_execute(func):
    """
    Decorator for command functions with structured error logging.

    Usage:
        @safe_execute
        def cmd_plane(args):
            ...
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        logger = logging.getLogger(func.__module__)
        try:
            return func(*args, **kwargs)
        except CycloidError:
            # Already structured, just re-raise
            raise
        except Exception as e:
            log_error(logger, e, context={
                'function': func.__name__,
                'args': str(args)[:100],
                'kwargs': str(kwargs)[:100]
            })
            raise CycloidError(
                message=f"Unexpected error in {func.__name__}",
                component=func.__module__,
                original_error=e,
                suggestions=[
                    "Check logs for full traceback",
                    f"Review {func.__name__} implementation",
                ]
            ) from e
    return wrapper

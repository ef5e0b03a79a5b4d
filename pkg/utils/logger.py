"""
Logging utilities for SRG Bode
Structured logging wrapper, call timing decorator and phase timers
"""

import logging
import sys
import time
from functools import wraps
from typing import Dict, Optional

from config import Config

_RESERVED = set(vars(logging.makeLogRecord({})).keys()) | {'message', 'asctime'}


class FieldsFormatter(logging.Formatter):
    """Formatter that appends structured fields as key=value pairs"""

    def format(self, record: logging.LogRecord) -> str:
        base = super().format(record)
        fields = getattr(record, 'fields', None)
        if not fields:
            return base
        rendered = ' '.join(f"{key}={_render(value)}" for key, value in fields.items())
        return f"{base} | {rendered}"


def _render(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class SrgBodeLogger:
    """Project logger for SRG Bode"""

    def __init__(self, name: str = 'srg_bode', level: str = 'INFO', log_file: Optional[str] = None):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, level.upper(), logging.INFO))
        self.log_file = log_file

        # Prevent duplicate handlers
        if not self.logger.handlers:
            self._setup_handlers()

    def _setup_handlers(self):
        """Setup logging handlers"""
        # stdout belongs to command output
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.DEBUG)
        console_handler.setFormatter(FieldsFormatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        ))
        self.logger.addHandler(console_handler)

        if self.log_file:
            file_handler = logging.FileHandler(self.log_file)
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(FieldsFormatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
            ))
            self.logger.addHandler(file_handler)

    def set_level(self, level: str):
        """Change the threshold at runtime (command line --log-level)"""
        self.logger.setLevel(getattr(logging, level.upper(), logging.INFO))

    def _log(self, level: int, message: str, fields: Dict):
        clean = {key: value for key, value in fields.items() if key not in _RESERVED}
        self.logger.log(level, message, extra={'fields': clean}, stacklevel=3)

    def info(self, message: str, **kwargs):
        """Log info message"""
        self._log(logging.INFO, message, kwargs)

    def debug(self, message: str, **kwargs):
        """Log debug message"""
        self._log(logging.DEBUG, message, kwargs)

    def warning(self, message: str, **kwargs):
        """Log warning message"""
        self._log(logging.WARNING, message, kwargs)

    def error(self, message: str, **kwargs):
        """Log error message"""
        self._log(logging.ERROR, message, kwargs)

    def critical(self, message: str, **kwargs):
        """Log critical message"""
        self._log(logging.CRITICAL, message, kwargs)

    def log_performance(self, operation: str, duration: float, **kwargs):
        """Log performance metrics"""
        self.info(f"Performance: {operation} took {duration:.2f}s",
                  operation=operation, duration=duration, **kwargs)

    def log_error_with_context(self, error: Exception, context: dict = None):
        """Log error with additional context"""
        self.error(f"Error occurred: {error}",
                   error_type=type(error).__name__, **(context or {}))


# Global logger instance
logger = SrgBodeLogger(level=Config.LOG_LEVEL, log_file=Config.LOG_FILE)


def log_function_call(func):
    """Decorator to log function calls"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        logger.debug(f"Calling {func.__name__}",
                     args_count=len(args), kwargs_count=len(kwargs))

        try:
            result = func(*args, **kwargs)
            duration = time.perf_counter() - start_time
            logger.debug(f"Function {func.__name__} completed in {duration:.2f}s")
            return result
        except Exception as e:
            duration = time.perf_counter() - start_time
            logger.error(f"Function {func.__name__} failed after {duration:.2f}s",
                         error=str(e))
            raise

    return wrapper


class PerformanceMonitor:
    """Monitor and log performance metrics"""

    def __init__(self):
        self.metrics = {}
        self.completed: Dict[str, float] = {}

    def start_timer(self, operation: str):
        """Start timing an operation"""
        self.metrics[operation] = {'start': time.perf_counter()}

    def end_timer(self, operation: str) -> float:
        """End timing an operation and return duration"""
        if operation in self.metrics:
            duration = time.perf_counter() - self.metrics[operation]['start']
            logger.log_performance(operation, duration)
            del self.metrics[operation]
            self.completed[operation] = duration
            return duration
        return 0.0

    def timings(self) -> Dict[str, float]:
        """Durations of every finished operation, in seconds"""
        return dict(self.completed)

    def reset(self):
        """Forget finished timings"""
        self.completed.clear()


# Global performance monitor
performance_monitor = PerformanceMonitor()

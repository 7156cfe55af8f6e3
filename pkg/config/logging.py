"""
Structured Logging Configuration
JSON logs on stderr, verbosity from MFPNET_LOG
"""
import logging
import sys
from typing import Optional

import structlog
from pythonjsonlogger import jsonlogger

from config.settings import get_settings


def configure_logging(level: Optional[str] = None):
    """Configure structured logging for training and experiment runs"""
    level_name = (level or get_settings().log_level).upper()
    numeric_level = getattr(logging, level_name, logging.INFO)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(jsonlogger.JsonFormatter("%(message)s"))

    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(numeric_level)
    # matplotlib font discovery is noisy at DEBUG
    logging.getLogger("matplotlib").setLevel(max(numeric_level, logging.WARNING))

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.stdlib.render_to_log_kwargs,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    return structlog.get_logger("mfpnet")


def get_logger(name: str = "mfpnet"):
    """Module-level logger; configuration happens lazily on first CLI call"""
    return structlog.get_logger(name)

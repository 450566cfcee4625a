# Logging setup for the whole package. Every module logs through
# get_logger(__name__), which places it under the "windcast" root logger.
import logging
import sys

ROOT_LOGGER = "windcast"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "INFO") -> logging.Logger:
    """
    Attach a single stderr handler to the package root logger.
    Args:
        level (str): Level name such as DEBUG, INFO or WARNING
    Returns:
        The configured root logger of the package
    """
    logger = logging.getLogger(ROOT_LOGGER)
    handler = next((h for h in logger.handlers if getattr(h, "_windcast", False)), None)
    if handler is None:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._windcast = True
        logger.addHandler(handler)
    else:
        # sys.stderr may have been swapped since the first call.
        handler.stream = sys.stderr
    logger.setLevel(level.upper())
    return logger


def get_logger(name: str) -> logging.Logger:
    if not name.startswith(ROOT_LOGGER):
        name = f"{ROOT_LOGGER}.{name}"
    return logging.getLogger(name)

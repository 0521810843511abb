import logging
import sys

from loguru import logger


class InterceptHandler(logging.Handler):
    """Intercepts standard library logging and redirects to loguru."""

    def emit(self, record):
        # Get corresponding Loguru level if it exists
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        # Find caller from where originated the logged message
        frame, depth = logging.currentframe(), 2
        while frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(
            level, record.getMessage()
        )


def setup_logging(level: str = "INFO"):
    """Configure logging for the entire application.

    Logs go to stderr so that stdout and written artifacts stay machine readable.
    """
    log_format = (
        "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
        "<level>{level: <8}</level> | "
        "<cyan>{extra[name]}</cyan> | "
        "<level>{message}</level>"
    )

    logger.remove()
    logger.configure(extra={"name": "latent-traj"})
    logger.add(
        sys.stderr,
        format=log_format,
        level=level.upper(),
        colorize=sys.stderr.isatty(),
    )

    # Intercept standard library logging and warnings (numpy, pandas, scipy)
    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)
    logging.captureWarnings(True)

    for logger_name in ["py.warnings", "matplotlib", "numexpr"]:
        logging.getLogger(logger_name).handlers = [InterceptHandler()]
        logging.getLogger(logger_name).propagate = False

    return logger

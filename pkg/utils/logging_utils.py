# Logging Utils module
import logging
from config.config import LOGGING_LEVEL


def setup_logging(level: str | None = None):
    logging.basicConfig(
        level=(level or LOGGING_LEVEL).upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=[logging.StreamHandler()],
        force=True
    )

from loguru import logger

from .__version__ import __version__  # noqa: F401

# library code stays quiet until setup_logging() is called
logger.disable("pyentangle")

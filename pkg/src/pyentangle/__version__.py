# This file contains the version  # noqa: D100
__version__ = "0.2.0"
__version_info__ = tuple(int(i) for i in __version__.split("."))

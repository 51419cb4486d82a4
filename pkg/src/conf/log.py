"""Logging setup for the command line entry point"""

import logging

LOG_FORMAT = "%(asctime)s level=%(levelname)s logger=%(name)s %(message)s"


def setup_logging(level: str = "INFO") -> None:
    """
    The setup_logging function configures the root logger once.
    Messages are emitted as key=value pairs so that run logs stay machine-parsable.

    :param level: Name of the logging level, e.g. INFO or DEBUG
    :type level: str
    :return: None
    """
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT, force=True)

import logging
from pathlib import Path
from typing import Optional, Union

from pytorch_lightning.utilities import rank_zero_only

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_pylogger(name=__name__) -> logging.Logger:
    """Initializes multi-process-friendly python command line logger."""

    logger = logging.getLogger(name)

    # mark every logging level with the rank zero decorator so that worker
    # processes spawned by the training loop do not duplicate records
    logging_levels = ("debug", "info", "warning", "error", "exception", "fatal", "critical")
    for level in logging_levels:
        setattr(logger, level, rank_zero_only(getattr(logger, level)))

    return logger


def configure_logging(level: str = "INFO", log_file: Optional[Union[str, Path]] = None) -> None:
    """Installs the stream handler (and optionally a file handler) on the package root logger."""
    level_no = {
        "NOTSET": logging.NOTSET,
        "DEBUG": logging.DEBUG,
        "INFO": logging.INFO,
        "WARN": logging.WARN,
        "WARNING": logging.WARNING,
        "ERROR": logging.ERROR,
        "CRITICAL": logging.CRITICAL,
    }.get(level.upper(), logging.INFO)

    root = logging.getLogger("rmpc")
    root.setLevel(level_no)

    formatter = logging.Formatter(LOG_FORMAT)
    if not any(isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler)
               for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(formatter)
        root.addHandler(handler)

    if log_file is not None:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        for h in list(root.handlers):
            if isinstance(h, logging.FileHandler):
                root.removeHandler(h)
                h.close()
        file_handler = logging.FileHandler(log_file, mode="a", encoding="utf-8")
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

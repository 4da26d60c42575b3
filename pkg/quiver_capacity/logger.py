import logging
import os
import sys


def init_logger(log_dir: str = "logs", console_level: int = logging.INFO) -> logging.Logger:
    """
    Initializes the "QuiverCapacity" logger: debug/info/error log files in `log_dir` plus a
    console handler on stderr (stdout carries the JSON report). Clears existing logs on each run.

    Args:
        log_dir (str): Directory to store log files. Default is "logs".
        console_level (int): Level of the stderr handler. Default is INFO.

    Returns:
        logging.Logger: Configured logger instance.

    Raises:
        OSError: If the log directory cannot be created or a log file cannot be opened.
    """
    try:
        os.makedirs(log_dir, exist_ok=True)
    except OSError as e:
        error_message = f"Failed to create log directory '{log_dir}': {e}"
        print(error_message, file=sys.stderr)
        raise OSError(error_message) from e

    logger = logging.getLogger("QuiverCapacity")
    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    if logger.hasHandlers():
        for handler in list(logger.handlers):
            handler.close()
        logger.handlers.clear()

    log_format = logging.Formatter("%(asctime)s [%(levelname)s] %(message)s")

    for filename, level in (("debug.log", logging.DEBUG), ("info.log", logging.INFO), ("error.log", logging.ERROR)):
        try:
            file_handler = logging.FileHandler(os.path.join(log_dir, filename), mode="w")
        except OSError as e:
            error_message = f"Failed to create {filename}: {e}"
            logger.error(error_message)
            raise OSError(error_message) from e
        file_handler.setLevel(level)
        file_handler.setFormatter(log_format)
        logger.addHandler(file_handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(log_format)
    logger.addHandler(console_handler)

    logger.debug("Initializing QuiverCapacity logger with log directory: '%s'", log_dir)
    return logger

import logging

_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


def configure_logging(level: str | int = "INFO") -> logging.Logger:
    """Attach a single console handler to the ``ebgev`` logger tree."""
    logger = logging.getLogger("ebgev")
    logger.setLevel(level if isinstance(level, int) else level.upper())

    if not any(getattr(h, "_ebgev", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._ebgev = True
        logger.addHandler(handler)

    logging.getLogger("joblib").setLevel(logging.WARNING)
    return logger

import logging

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Configure logging
logging.basicConfig(
    level=logging.WARNING,
    format=LOG_FORMAT,
    handlers=[
        logging.StreamHandler()  # diagnostics go to stderr, reports to stdout
    ]
)

# Create a logger for the application
logger = logging.getLogger('subreg')


def set_verbosity(verbose: int) -> None:
    """-v shows INFO, -vv shows DEBUG."""
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG
    logging.getLogger().setLevel(level)
    logger.setLevel(level)

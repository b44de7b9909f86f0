"""Command-line entry point for spectra-forge"""
import logging
import sys

from src.cli import run_command

# Configure logging; the level is set per run from --log-level
logging.basicConfig(
    level=logging.WARNING,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()

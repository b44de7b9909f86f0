"""Process-level settings read from the environment (and an optional .env file)."""

from __future__ import annotations

import logging
import os

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class Settings:
    """Holds environment-derived settings for the process lifetime."""

    def __init__(self) -> None:
        load_dotenv()
        self.threads: int = self._read_threads()
        level = os.getenv("SPECTRA_FORGE_LOG_LEVEL", "WARNING").upper()
        if level not in LOG_LEVELS:
            logger.warning("ignoring SPECTRA_FORGE_LOG_LEVEL=%s; expected one of %s", level, ", ".join(LOG_LEVELS))
            level = "WARNING"
        self.log_level: str = level

    @staticmethod
    def _read_threads() -> int:
        default = os.cpu_count() or 1
        raw = os.getenv("SPECTRA_FORGE_THREADS")
        if not raw:
            return default
        try:
            threads = int(raw)
        except ValueError:
            logger.warning("ignoring SPECTRA_FORGE_THREADS=%r; not an integer", raw)
            return default
        return max(1, threads)


def load_settings() -> Settings:
    return Settings()

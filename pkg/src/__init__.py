"""Project source package.

Exposes key entrypoints for external use/tests.
"""

from .cli import run_command  # re-export for convenience
from .transforms import build_potential, predict_spectrum

__all__ = [
    'run_command',
    'build_potential',
    'predict_spectrum',
]

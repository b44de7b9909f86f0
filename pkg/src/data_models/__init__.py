from .output import (
    CriterionOutput,
    GenerateOutput,
    LevelOutput,
    SpectrumOutput,
    SweepFrame,
    SweepManifest,
    VerifyOutput,
)

__all__ = [
    "CriterionOutput",
    "GenerateOutput",
    "LevelOutput",
    "SpectrumOutput",
    "SweepFrame",
    "SweepManifest",
    "VerifyOutput",
]

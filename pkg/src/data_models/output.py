"""
Output data models for the CLI subcommands.
These models correspond 1:1 to the subcommands defined in cli.py.
"""

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


class LevelOutput(BaseModel):
    """One predicted level as written to JSON."""
    value: float = Field(description="Level energy")
    label: str = Field(description="created(eps1), created(eps2) or inherited(n)")
    scale: float = Field(description="Energy scale factor applied to the level")


class GenerateOutput(BaseModel):
    """Output model for the generate subcommand."""
    kind: str = Field(description="Transform kind")
    levels: List[LevelOutput] = Field(description="Predicted spectrum, ascending")
    certified_domain: Tuple[float, float] = Field(description="Interval on which the potential is certified nonsingular")
    file: Optional[str] = Field(default=None, description="Path of the written samples, if any")


class SpectrumOutput(BaseModel):
    """Output model for the spectrum subcommand."""
    model_config = ConfigDict(populate_by_name=True)

    levels: List[LevelOutput] = Field(description="Predicted spectrum, ascending")
    computed: List[float] = Field(description="Finite-difference eigenvalues on the base grid")
    errors: List[float] = Field(description="|computed - predicted| per level")
    passed: bool = Field(alias="pass", description="True when every error is within its level tolerance")
    refined: List[float] = Field(description="Eigenvalues on the doubled grid")
    level_tolerances: List[float] = Field(description="Tolerance applied to each level")
    tolerance: float = Field(description="Requested tolerance")
    discretization_estimate: float = Field(description="Richardson estimate max |E_N - E_2N| / 3")
    grid_points: int = Field(description="Points of the base grid actually used")


class SweepFrame(BaseModel):
    """One value of a sweep."""
    value: float = Field(description="Value of the swept parameter")
    file: str = Field(description="CSV file holding the potential samples")
    parameters: Dict[str, float] = Field(description="Full parameter set of this frame")
    levels: List[LevelOutput] = Field(description="Predicted spectrum of this frame")


class SweepManifest(BaseModel):
    """Output model for the sweep subcommand."""
    kind: str = Field(description="Transform kind")
    param: str = Field(description="Name of the swept parameter")
    values: List[float] = Field(description="Swept values, in request order")
    files: List[str] = Field(description="Per-frame output file names")
    fixed: Dict[str, float] = Field(description="Parameters held fixed during the sweep")
    locks: List[str] = Field(default_factory=list, description="Locked energies, as given")
    frames: List[SweepFrame] = Field(description="Per-frame record")
    warnings: List[str] = Field(default_factory=list, description="Clamping and other warnings")


class CriterionOutput(BaseModel):
    """One acceptance check."""
    criterion: int = Field(description="Criterion number")
    name: str = Field(description="Short description")
    passed: bool = Field(description="Outcome")
    detail: str = Field(description="Worst deviation or failure reason")


class VerifyOutput(BaseModel):
    """Output model for the verify subcommand."""
    criteria: List[CriterionOutput] = Field(description="Results in criterion order")
    passed: bool = Field(description="Conjunction of all criteria")

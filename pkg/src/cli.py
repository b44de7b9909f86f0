"""Command-line front end: generate, spectrum, sweep and verify.

Exit status is 0 on success, 1 on a domain failure (singular potential,
failed verification) and 2 on a usage error. Every failure prints one
machine-parsable reason line on standard error; logging also goes to
standard error so standard output holds only the command payload.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from .acceptance import run_acceptance
from .config import LOG_LEVELS, load_settings
from .data_models.output import GenerateOutput, LevelOutput, SpectrumOutput, SweepFrame, SweepManifest
from .eigensolver import DEFAULT_GRID_L, DEFAULT_GRID_N, DEFAULT_TOLERANCE, WIDE_SCALE_TOLERANCE, Grid, verify_spectrum
from .errors import (
    DegenerateEnergiesError,
    OrderingViolationError,
    SpectraForgeError,
    UsageError,
)
from .riccati import OSCILLATOR_E0, FactorizationConfig
from .transforms import (
    GeneratedPotential,
    ScalingParam,
    SpectrumPrediction,
    TransformSpec,
    build_potential,
    created_level_count,
    predict_spectrum,
)

logger = logging.getLogger(__name__)

KINDS = {
    "first-order": "first_order",
    "second-order": "second_order",
    "scaled-first": "scaled_first",
    "scaled-second": "scaled_second",
}
PARAMS = ("eps1", "nu1", "q1", "eps2", "nu2", "q2")
REQUIRED = {
    "first_order": ("eps1",),
    "second_order": ("eps1", "eps2", "nu2"),
    "scaled_first": ("eps1", "q1"),
    "scaled_second": ("eps1", "q1", "eps2", "nu2"),
}
# levels shown when --nmax is omitted, created ones included
DEFAULT_LEVELS = 5
# locked energies with c > 0 are kept this far below 1/2
CLAMP_MARGIN = 1e-6
USAGE_ERRORS = (ValidationError, OrderingViolationError, DegenerateEnergiesError, UsageError)

_LOCK = re.compile(
    r"^(?P<target>eps[12])=(?P<sign>[-+]?)(?:(?P<coef>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)\*)?q1\^2(?:/(?P<den>\d+(?:\.\d*)?))?$"
)

PRESETS: Dict[str, Dict] = {
    "moving-ground": dict(
        kind="first-order", param="eps1", start=-2.0, stop=0.45, steps=11, values=dict(nu1=0.9), locks=[]
    ),
    "moving-first-excited": dict(
        kind="second-order", param="eps1", start=-0.4, stop=0.4, steps=9,
        values=dict(nu1=0.0, eps2=-0.5, nu2=10000.0), locks=[],
    ),
    "fixed-ground": dict(
        kind="scaled-first", param="q1", start=1.0 / math.sqrt(2.0), stop=math.sqrt(2.0), steps=9,
        values=dict(nu1=0.0), locks=["eps1=-q1^2/2"],
    ),
    "fixed-first-excited": dict(
        kind="scaled-second", param="q1", start=1.0 / math.sqrt(2.0), stop=math.sqrt(2.0), steps=9,
        values=dict(nu1=0.0, eps2=-1.5, nu2=1.1, q2=1.0), locks=["eps1=-q1^2/2"],
    ),
    "fixed-two-lowest": dict(
        kind="scaled-second", param="q1", start=1.0 / math.sqrt(2.0), stop=math.sqrt(2.0), steps=9,
        values=dict(nu1=0.0, nu2=10000.0, q2=1.0), locks=["eps1=q1^2/4", "eps2=-q1^2/2"],
    ),
}


class EnergyLock(BaseModel):
    """eps_i = coefficient * q1^2."""

    model_config = ConfigDict(frozen=True)

    target: str
    coefficient: float
    text: str

    def apply(self, q1: float) -> Tuple[float, Optional[str]]:
        value = self.coefficient * q1 * q1
        if self.coefficient > 0 and value >= OSCILLATOR_E0:
            clamped = OSCILLATOR_E0 - CLAMP_MARGIN
            return clamped, f"{self.target}={value:.6g} at q1={q1:.6g} leaves (0, 1/2); clamped to {clamped:.7g}"
        return value, None


class FrameTask(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: str
    param: str
    value: float
    parameters: Dict[str, float]
    grid_l: float
    grid_n: int
    n_max: Optional[int]
    path: str
    fmt: str


def parse_lock(text: str) -> EnergyLock:
    match = _LOCK.match(text.replace(" ", ""))
    if match is None:
        raise UsageError(f"unsupported lock {text!r}; expected eps1=c*q1^2, eps2=-q1^2/2 and similar")
    coefficient = float(match.group("coef") or 1.0) / float(match.group("den") or 1.0)
    if match.group("sign") == "-":
        coefficient = -coefficient
    if coefficient == 0.0:
        raise UsageError(f"lock {text!r} pins the energy on the interval boundary 0")
    return EnergyLock(target=match.group("target"), coefficient=coefficient, text=text)


def build_transform_spec(kind: str, values: Dict[str, Optional[float]]) -> TransformSpec:
    """Turn CLI-level parameters into a validated TransformSpec."""
    internal = KINDS[kind]
    missing = [name for name in REQUIRED[internal] if values.get(name) is None]
    if missing:
        raise UsageError(f"--kind {kind} needs " + ", ".join(f"--{name}" for name in missing))

    def factor(eps: str, nu: str) -> FactorizationConfig:
        return FactorizationConfig(eps=values[eps], nu=values.get(nu) or 0.0)

    return TransformSpec(
        kind=internal,
        f1=factor("eps1", "nu1"),
        f2=factor("eps2", "nu2") if internal in ("second_order", "scaled_second") else None,
        s1=ScalingParam(q=values["q1"]) if internal.startswith("scaled") else None,
        s2=ScalingParam(q=values.get("q2") or 1.0) if internal == "scaled_second" else None,
    )


def default_tolerance(spec: TransformSpec) -> float:
    return WIDE_SCALE_TOLERANCE if spec.energy_scale >= 1.5 else DEFAULT_TOLERANCE


def resolve_n_max(spec: TransformSpec, n_max: Optional[int]) -> int:
    if n_max is None:
        return DEFAULT_LEVELS - created_level_count(spec)
    if n_max < 0:
        raise UsageError(f"--nmax must be non-negative, got {n_max}")
    return n_max


def grid_for(potential: GeneratedPotential, grid_l: float, grid_n: int) -> Grid:
    """Symmetric grid, narrowed to the certified domain when needed."""
    half = min(grid_l, -potential.certified_domain[0], potential.certified_domain[1])
    if half < grid_l:
        logger.warning("grid half-width %.6g exceeds the certified domain; using %.6g", grid_l, half)
    return Grid.symmetric(half, grid_n)


def write_samples(potential: GeneratedPotential, grid: Grid, path: Path, fmt: str) -> None:
    xs = grid.points()
    frame = pd.DataFrame({"x": xs, "V": np.asarray(potential(xs), dtype=float)})
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path.write_text(json.dumps(frame.to_dict(orient="list")) + "\n")
    else:
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def _levels(prediction: SpectrumPrediction) -> List[LevelOutput]:
    return [LevelOutput(**level.model_dump()) for level in prediction.levels]


def _values_from_args(args: argparse.Namespace) -> Dict[str, Optional[float]]:
    return {name: getattr(args, name) for name in PARAMS}


def _cmd_generate(args: argparse.Namespace) -> int:
    spec = build_transform_spec(args.kind, _values_from_args(args))
    potential = build_potential(spec)
    grid = grid_for(potential, args.grid_l, args.grid_n)
    prediction = predict_spectrum(spec, resolve_n_max(spec, args.nmax))

    out = Path(args.out or f"potential.{args.format}")
    write_samples(potential, grid, out, args.format)
    logger.info("wrote %d samples to %s", grid.n_points, out)

    payload = GenerateOutput(
        kind=args.kind, levels=_levels(prediction), certified_domain=potential.certified_domain, file=str(out)
    )
    print(payload.model_dump_json(indent=2))
    return 0


def _cmd_spectrum(args: argparse.Namespace) -> int:
    spec = build_transform_spec(args.kind, _values_from_args(args))
    potential = build_potential(spec)
    grid = grid_for(potential, args.grid_l, args.grid_n)
    prediction = predict_spectrum(spec, resolve_n_max(spec, args.nmax))
    tol = args.tol if args.tol is not None else default_tolerance(spec)

    report = verify_spectrum(prediction, potential, grid, tol)
    payload = SpectrumOutput(
        levels=_levels(prediction),
        computed=report.computed,
        errors=report.abs_errors,
        passed=report.passed,
        refined=report.refined,
        level_tolerances=report.level_tolerances,
        tolerance=report.tolerance,
        discretization_estimate=report.discretization_estimate,
        grid_points=report.grid_points,
    )
    text = payload.model_dump_json(indent=2, by_alias=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)

    if not report.passed:
        worst = max(e - t for e, t in zip(report.abs_errors, report.level_tolerances))
        print(f"verification_failed: a level misses its tolerance by {worst:.3e}", file=sys.stderr)
        return 1
    return 0


def compute_frame(task: FrameTask) -> SweepFrame:
    """Build, sample and predict one sweep value; top-level so worker processes can run it."""
    spec = build_transform_spec(task.kind, dict(task.parameters))
    potential = build_potential(spec)
    grid = grid_for(potential, task.grid_l, task.grid_n)
    write_samples(potential, grid, Path(task.path), task.fmt)
    prediction = predict_spectrum(spec, resolve_n_max(spec, task.n_max))
    return SweepFrame(
        value=task.value, file=Path(task.path).name, parameters=task.parameters, levels=_levels(prediction)
    )


def _sweep_settings(args: argparse.Namespace) -> Tuple[str, str, float, float, int, Dict[str, Optional[float]], List[str]]:
    preset = PRESETS.get(args.preset, {}) if args.preset else {}
    values = {name: getattr(args, name) for name in PARAMS}
    for name, value in preset.get("values", {}).items():
        if values[name] is None:
            values[name] = value
    kind = args.kind or preset.get("kind")
    param = args.param or preset.get("param")
    start = args.from_ if args.from_ is not None else preset.get("start")
    stop = args.to if args.to is not None else preset.get("stop")
    steps = args.steps if args.steps is not None else preset.get("steps", 9)
    locks = list(args.lock or preset.get("locks", []))

    missing = [flag for flag, value in (("--kind", kind), ("--param", param), ("--from", start), ("--to", stop)) if value is None]
    if missing:
        raise UsageError("sweep needs " + ", ".join(missing) + " (or --preset)")
    if steps < 1:
        raise UsageError(f"--steps must be positive, got {steps}")
    if steps > 1 and start == stop:
        raise UsageError("--from and --to coincide; frame names would collide")
    return kind, param, float(start), float(stop), int(steps), values, locks


def _cmd_sweep(args: argparse.Namespace) -> int:
    kind, param, start, stop, steps, values, lock_texts = _sweep_settings(args)
    locks = [parse_lock(text) for text in lock_texts]
    locked = {lock.target for lock in locks}
    if param in locked:
        raise UsageError(f"{param} is both swept and locked")
    if locks and param != "q1" and values.get("q1") is None:
        raise UsageError("locked energies need q1, either swept or given with --q1")

    out_dir = Path(args.out or "sweep")
    sweep_values = np.linspace(start, stop, steps).tolist()
    warnings: List[str] = []
    tasks = []
    for value in sweep_values:
        parameters = {name: v for name, v in values.items() if v is not None}
        parameters[param] = value
        for lock in locks:
            parameters[lock.target], warning = lock.apply(parameters["q1"])
            if warning:
                logger.warning(warning)
                warnings.append(warning)
        # validated here so worker processes only raise picklable domain errors
        build_transform_spec(kind, parameters)
        path = out_dir / f"{param}_{value:.17g}.{args.format}"
        tasks.append(
            FrameTask(
                kind=kind, param=param, value=value, parameters=parameters, grid_l=args.grid_l,
                grid_n=args.grid_n, n_max=args.nmax, path=str(path), fmt=args.format,
            )
        )

    for target in ("eps1", "eps2"):
        energies = [task.parameters[target] for task in tasks if target in task.parameters]
        if energies and min(energies) < 0.0 < max(energies):
            warning = f"{target} changes sign across the sweep ({min(energies):.6g} to {max(energies):.6g})"
            logger.warning(warning)
            warnings.append(warning)

    workers = min(load_settings().threads, len(tasks))
    if workers > 1:
        logger.info("computing %d frames on %d worker processes", len(tasks), workers)
        with Pool(processes=workers) as pool:
            frames = pool.map(compute_frame, tasks)
    else:
        frames = [compute_frame(task) for task in tasks]

    fixed = {name: v for name, v in values.items() if v is not None and name != param and name not in locked}
    manifest = SweepManifest(
        kind=kind,
        param=param,
        values=sweep_values,
        files=[frame.file for frame in frames],
        fixed=fixed,
        locks=lock_texts,
        frames=frames,
        warnings=warnings,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    text = manifest.model_dump_json(indent=2)
    (out_dir / "manifest.json").write_text(text + "\n")
    print(text)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    result = run_acceptance()
    table = pd.DataFrame([c.model_dump() for c in result.criteria])
    table["passed"] = table["passed"].map({True: "pass", False: "FAIL"})
    print(table.to_string(index=False))
    if args.out:
        Path(args.out).write_text(result.model_dump_json(indent=2) + "\n")
    if not result.passed:
        failed = ",".join(str(c.criterion) for c in result.criteria if not c.passed)
        print(f"verification_failed: criteria {failed}", file=sys.stderr)
        return 1
    return 0


def _add_transform_args(parser: argparse.ArgumentParser, kind_required: bool) -> None:
    parser.add_argument('--kind', choices=sorted(KINDS), required=kind_required, default=None, help='Transform to apply to the oscillator')
    parser.add_argument('--eps1', type=float, default=None, help='First factorization energy (< 1/2)')
    parser.add_argument('--nu1', type=float, default=None, help='Mixing constant of the first seed (default 0)')
    parser.add_argument('--q1', type=float, default=None, help='First scaling factor (scaled kinds)')
    parser.add_argument('--eps2', type=float, default=None, help='Second factorization energy (two-step kinds, < eps1)')
    parser.add_argument('--nu2', type=float, default=None, help='Mixing constant of the second seed (|nu2| > 1)')
    parser.add_argument('--q2', type=float, default=None, help='Second scaling factor (scaled-second, default 1)')
    parser.add_argument('--grid-l', type=float, dest='grid_l', default=DEFAULT_GRID_L, help='Grid half-width (default 10)')
    parser.add_argument('--grid-n', type=int, dest='grid_n', default=DEFAULT_GRID_N, help='Grid points (default 2001)')
    parser.add_argument('--nmax', type=int, default=None, help='Inherited oscillator levels to report (default: five levels in total)')


def _add_common_args(parser: argparse.ArgumentParser, default_level: str) -> None:
    parser.add_argument('--log-level', dest='log_level', choices=LOG_LEVELS, default=default_level, help='Logging level (default from SPECTRA_FORGE_LOG_LEVEL or WARNING)')


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    default_level = load_settings().log_level
    parser = argparse.ArgumentParser(description='Potentials with prescribed spectra from intertwining transforms of the oscillator.')
    sub = parser.add_subparsers(dest='command', required=True)

    generate = sub.add_parser('generate', help='Write V(x) samples and print the predicted spectrum')
    _add_transform_args(generate, kind_required=True)
    generate.add_argument('--out', type=str, default=None, help='Output file (default potential.csv or potential.json)')
    generate.add_argument('--format', choices=('csv', 'json'), default='csv', help='Sample file format (default csv)')
    _add_common_args(generate, default_level)

    spectrum = sub.add_parser('spectrum', help='Verify the predicted spectrum with the finite-difference eigensolver')
    _add_transform_args(spectrum, kind_required=True)
    spectrum.add_argument('--tol', type=float, default=None, help='Absolute tolerance (default 2e-3, 4e-3 when the energy scale is >= 1.5)')
    spectrum.add_argument('--out', type=str, default=None, help='Optional path for the JSON report')
    _add_common_args(spectrum, default_level)

    sweep = sub.add_parser('sweep', help='Vary one parameter and write one sample file per value plus a manifest')
    _add_transform_args(sweep, kind_required=False)
    sweep.add_argument('--param', choices=PARAMS, default=None, help='Parameter to sweep')
    sweep.add_argument('--from', type=float, dest='from_', default=None, help='First value')
    sweep.add_argument('--to', type=float, default=None, help='Last value')
    sweep.add_argument('--steps', type=int, default=None, help='Number of values (default 9)')
    sweep.add_argument('--lock', action='append', default=None, help='Tie an energy to q1, e.g. "eps1=-q1^2/2" (repeatable)')
    sweep.add_argument('--preset', choices=sorted(PRESETS), default=None, help='Fill in one of the spectral-manipulation scenarios')
    sweep.add_argument('--out', type=str, default=None, help='Output directory (default ./sweep)')
    sweep.add_argument('--format', choices=('csv', 'json'), default='csv', help='Frame file format (default csv)')
    _add_common_args(sweep, default_level)

    verify = sub.add_parser('verify', help='Run the built-in acceptance suite')
    verify.add_argument('--out', type=str, default=None, help='Optional path for the JSON results')
    _add_common_args(verify, default_level)

    return parser.parse_args(argv)


COMMANDS = {
    "generate": _cmd_generate,
    "spectrum": _cmd_spectrum,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def _reason(e: Exception) -> str:
    if isinstance(e, SpectraForgeError):
        return e.reason
    if isinstance(e, ValidationError):
        first = e.errors()[0]
        wrapped = first.get("ctx", {}).get("error")
        if isinstance(wrapped, SpectraForgeError):
            return wrapped.reason
        where = ".".join(str(part) for part in first.get("loc", ()))
        return f"invalid_input: {where} {first.get('msg', '')}".strip()
    return f"error: {e}"


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    logging.getLogger().setLevel(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as e:
        print(_reason(e), file=sys.stderr)
        return 2
    except SpectraForgeError as e:
        logger.debug("command failed", exc_info=True)
        print(_reason(e), file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_command(argv)


if __name__ == "__main__":
    sys.exit(main())

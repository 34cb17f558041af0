"""Scenario files, initial states, and the ``run`` command.

A scenario is a JSON document::

    {
      "schema_version": 1,
      "grid": {"dim": 3, "points_per_axis": 16, "box_length": 12.0},
      "orbitals": [
        {"kind": "gaussian", "center": [-1.2, 0, 0], "width": 0.75, "occupation": 0.6},
        {"kind": "plane_modulated_gaussian", "center": [1.2, 0, 0], "width": 0.75,
         "momentum": [0.5, 0, 0], "occupation": 0.4}
      ],
      "interaction": {"enabled": true, "coupling": 1.0},
      "propagator": {"scheme": "strang", "dt": 0.001, "t_final": 1.0},
      "output": {"sample_stride": 50, "snapshot_stride": 5},
      "audit": {"e_tot": 1e-6}
    }

``propagator`` accepts every :class:`~tdhf.propagate.PropagatorConfig`
field except ``coupling`` and ``sample_stride``; for the Picard scheme
``dt`` is the window length.  ``snapshot_stride`` counts samples, not steps.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from contextlib import nullcontext
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.special import erfc, erfcinv

from . import diagnostics
from .grid import Grid
from .propagate import PropagatorConfig, run as propagate_run
from .state import DensityMatrix, new_state, particle_density

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MASS_LEAK_TOL = 1e-8
SCHEME_ALIASES = {"strang": "strang_orbital", "picard": "picard_operator",
                  "strang_orbital": "strang_orbital", "picard_operator": "picard_operator"}
ORBITAL_KINDS = ("gaussian", "plane_modulated_gaussian")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_AUDIT = 2


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class OrbitalSpec:
    kind: str
    center: tuple
    width: float
    occupation: float
    momentum: tuple = ()


@dataclass
class Scenario:
    grid: Grid
    orbitals: list
    config: PropagatorConfig
    interaction: bool = True
    sample_stride: int = 1
    snapshot_stride: int = 0
    audit_tolerances: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _vector(value, dim, name):
    if value is None:
        return (0.0,) * dim
    vec = tuple(float(v) for v in np.atleast_1d(value))
    if len(vec) != dim:
        raise ScenarioError(f"{name} must have {dim} components, got {len(vec)}")
    return vec


def parse_scenario(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        gspec = data["grid"]
        grid = Grid(int(gspec["dim"]), int(gspec["points_per_axis"]), float(gspec["box_length"]),
                    float(gspec.get("soft_coulomb_a", 1.0)))
    except KeyError as exc:
        raise ScenarioError(f"grid spec is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid grid spec: {exc}") from None

    raw_orbitals = data.get("orbitals") or []
    if not raw_orbitals:
        raise ScenarioError("at least one orbital spec is required")
    orbitals = []
    for i, o in enumerate(raw_orbitals):
        kind = o.get("kind")
        if kind not in ORBITAL_KINDS:
            raise ScenarioError(f"orbital {i}: kind must be one of {ORBITAL_KINDS}, got {kind!r}")
        width = float(o.get("width", 0))
        if not width > 0:
            raise ScenarioError(f"orbital {i}: width must be positive")
        occ = float(o.get("occupation", 1.0))
        if not np.isfinite(occ):
            raise ScenarioError(f"orbital {i}: occupation must be finite")
        momentum = o.get("momentum")
        if kind == "gaussian" and momentum is not None and np.any(momentum):
            raise ScenarioError(f"orbital {i}: use kind 'plane_modulated_gaussian' for nonzero momentum")
        orbitals.append(OrbitalSpec(kind, _vector(o.get("center"), grid.dim, "center"), width, occ,
                                    _vector(momentum, grid.dim, "momentum")))

    inter = data.get("interaction", {})
    enabled = bool(inter.get("enabled", True))
    coupling = float(inter.get("coupling", 1.0)) if enabled else 0.0

    out = data.get("output", {})
    sample_stride = int(out.get("sample_stride", 1))
    snapshot_stride = int(out.get("snapshot_stride", 0))

    prop = dict(data.get("propagator", {}))
    prop["scheme"] = SCHEME_ALIASES.get(prop.get("scheme", "strang"), prop.get("scheme"))
    allowed = {f.name for f in fields(PropagatorConfig)} - {"coupling", "sample_stride"}
    unknown = set(prop) - allowed
    if unknown:
        raise ScenarioError(f"unknown propagator fields: {sorted(unknown)}")
    try:
        config = PropagatorConfig(coupling=coupling, sample_stride=sample_stride, **prop)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid propagator config: {exc}") from None
    if snapshot_stride < 0:
        raise ScenarioError("snapshot_stride must be >= 0")

    audit = data.get("audit", {})
    unknown = set(audit) - set(diagnostics.DEFAULT_TOLERANCES)
    if unknown:
        raise ScenarioError(f"unknown audit tolerances: {sorted(unknown)}")
    return Scenario(grid, orbitals, config, enabled, sample_stride, snapshot_stride,
                    {k: float(v) for k, v in audit.items()}, data)


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: JSON parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_scenario(data)


def gaussian_mass_outside(grid: Grid, center, width) -> float:
    """Fraction of |phi|**2 outside the box for a Gaussian of density std ``width``."""
    half = grid.box_length / 2
    inside = 1.0
    for c in center:
        inside *= 1 - 0.5 * erfc((half - c) / (np.sqrt(2) * width)) - 0.5 * erfc((half + c) / (np.sqrt(2) * width))
    return 1 - inside


def suggested_box_length(center, width, dim, tol=MASS_LEAK_TOL) -> float:
    # per-axis leak budget tol/dim split over both sides
    z = np.sqrt(2) * erfcinv(tol / dim)
    return float(2 * (max(abs(c) for c in center) + z * width))


def gaussian_orbital(grid: Grid, center, width, momentum=None) -> np.ndarray:
    """exp(-|x - x0|**2 / (4 width**2) + i p.x), unnormalized."""
    r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, center))
    phase = 0.0
    if momentum is not None:
        phase = sum(p * x for x, p in zip(grid.coords, momentum))
    return np.exp(-r2 / (4 * width ** 2) + 1j * phase)


def build_initial_state(scenario: Scenario) -> DensityMatrix:
    grid = scenario.grid
    raw = []
    for i, o in enumerate(scenario.orbitals):
        leak = gaussian_mass_outside(grid, o.center, o.width)
        if leak > MASS_LEAK_TOL:
            raise ScenarioError(
                f"orbital {i}: {leak:.2e} of its mass lies outside the box; "
                f"use box_length >= {suggested_box_length(o.center, o.width, grid.dim):.3g}")
        raw.append(gaussian_orbital(grid, o.center, o.width, o.momentum or None))
    return new_state(grid, [o.occupation for o in scenario.orbitals], raw)


def write_snapshot(directory: Path, index: int, t: float, rho: DensityMatrix) -> Path:
    """Density as little-endian float64 (row-major) plus a JSON sidecar."""
    data = np.ascontiguousarray(particle_density(rho), dtype="<f8").tobytes(order="C")
    path = directory / f"density_{index:06d}.bin"
    path.write_bytes(data)
    sidecar = {"grid": rho.grid.spec(), "t": t, "dtype": "<f8", "order": "C",
               "shape": list(rho.grid.shape), "sha256": hashlib.sha256(data).hexdigest()}
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return path


def read_snapshot(path) -> tuple:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    data = path.read_bytes()
    if hashlib.sha256(data).hexdigest() != meta["sha256"]:
        raise ValueError(f"{path}: checksum mismatch")
    return np.frombuffer(data, dtype="<f8").reshape(meta["shape"]), meta


def write_diagnostics(path: Path, reports: list):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(diagnostics.EnergyReport.COLUMNS)
        for r in reports:
            writer.writerow([format(float(v), ".17g") for v in r.row()])


def execute(scenario: Scenario, out_dir) -> dict:
    """Run a parsed scenario, write all outputs, return the audit record."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rho0 = build_initial_state(scenario)
    traj = propagate_run(rho0, scenario.config)
    reports = diagnostics.annotate(traj)
    write_diagnostics(out / "diagnostics.csv", reports)

    if scenario.snapshot_stride:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for i in range(0, len(traj), scenario.snapshot_stride):
            write_snapshot(snap_dir, i, traj.times[i], traj.states[i])

    audit = diagnostics.conservation_audit(traj, scenario.audit_tolerances)
    kin = diagnostics.kinetic_bound_check(traj)
    failures = audit.failures + kin.failures
    record = {
        "passed": not failures,
        "failures": failures,
        "conservation": audit.to_dict(),
        "kinetic_bound": {"applicable": kin.applicable, "passed": kin.passed,
                          "lower_margin": kin.lower_margin, "upper_margin": kin.upper_margin,
                          "reason": kin.reason},
        "scheme": scenario.config.scheme,
        "coupling": scenario.config.coupling,
        "samples": len(traj),
    }
    if traj.picard_log:
        record["picard"] = [{"window": w["window"], "iterations": len(w["distances"]),
                             "max_ratio": max(w["ratios"], default=0.0)} for w in traj.picard_log]
    (out / "audit.json").write_text(json.dumps(record, indent=2, default=_json_default) + "\n")
    return record


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj))


def run(scenario_path, out_dir, scheme=None, interaction=True, deterministic=False) -> int:
    """Run a scenario file; return the process exit status.

    0 when every audit passes, 1 on configuration or I/O errors, 2 when an
    audit fails.
    """
    try:
        scenario = load_scenario(scenario_path)
        overrides = {}
        if scheme is not None:
            overrides["scheme"] = SCHEME_ALIASES[scheme]
        if not interaction:
            overrides["coupling"] = 0.0
            scenario.interaction = False
        if overrides:
            scenario.config = PropagatorConfig(**{**_asdict(scenario.config), **overrides})
        limiter = nullcontext()
        if deterministic:
            from threadpoolctl import threadpool_limits
            limiter = threadpool_limits(1)
        with limiter:
            record = execute(scenario, out_dir)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not record["passed"]:
        for f in record["failures"]:
            print(f"audit failure: {f}", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def _asdict(config: PropagatorConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(config)}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tdhf", description="Time-dependent Hartree-Fock simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario and write diagnostics")
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--deterministic", action="store_true",
                   help="pin BLAS/FFT helpers to one thread")
    p.add_argument("--scheme", choices=("strang", "picard"))
    p.add_argument("--no-interaction", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    return run(args.config, args.out, scheme=args.scheme,
               interaction=not args.no_interaction, deterministic=args.deterministic)

"""Pydantic schemas for problem files, reports and API payloads."""
import csv
import json
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ValidationError, model_validator

from errors import ProblemIOError
from flow import FlowTrace, uniform_target, validate_target
from hyperbolic import HyperbolicCoords, from_hyperbolic
from mesh import build
from packing_geometry import Packing


# ─── Problem files ───────────────────────────────────────────────────

class MeshIn(BaseModel):
    num_vertices: int
    faces: List[List[int]]
    twins: Optional[List[int]] = None
    edge_ids: Optional[List[int]] = None
    genus: Optional[int] = None


class PackingIn(BaseModel):
    coords: Literal["euclidean", "hyperbolic"] = "euclidean"
    inv_dist: Optional[List[float]] = None
    lengths: Optional[List[float]] = None
    radii: List[float]

    @model_validator(mode="after")
    def _one_edge_array(self):
        if self.coords == "euclidean" and (self.inv_dist is None or self.lengths is not None):
            raise ValueError("euclidean packings carry inv_dist and no lengths")
        if self.coords == "hyperbolic" and (self.lengths is None or self.inv_dist is not None):
            raise ValueError("hyperbolic packings carry lengths and no inv_dist")
        return self


class TargetIn(BaseModel):
    curvature: Union[Literal["uniform"], List[float]] = "uniform"


class ConfigIn(BaseModel):
    method: Optional[Literal["euler", "newton"]] = None
    step: Optional[float] = None
    tol: Optional[float] = None
    max_iters: Optional[int] = None
    flip_tol: Optional[float] = None
    flip_budget: Optional[int] = None


class ProblemFile(BaseModel):
    mesh: MeshIn
    packing: PackingIn
    target: Optional[TargetIn] = None
    config: Optional[ConfigIn] = None


@dataclass
class Problem:
    """A loaded problem: validated packing plus the optional target and overrides."""
    packing: Packing
    coords: str
    target: Optional[np.ndarray]
    overrides: Dict[str, Any]


def load_problem(pf: ProblemFile) -> Problem:
    m = pf.mesh
    tri = build(m.num_vertices, m.faces, m.twins, m.edge_ids, m.genus)
    if pf.packing.coords == "hyperbolic":
        pk = from_hyperbolic(HyperbolicCoords(tri, pf.packing.lengths, pf.packing.radii))
    else:
        pk = Packing(tri, pf.packing.inv_dist, pf.packing.radii)

    target = None
    if pf.target is not None:
        if pf.target.curvature == "uniform":
            target = uniform_target(tri)
        else:
            target = validate_target(tri, pf.target.curvature)
    overrides = pf.config.model_dump(exclude_none=True) if pf.config else {}
    return Problem(packing=pk, coords=pf.packing.coords, target=target, overrides=overrides)


def packing_to_problem(pk: Packing, coords: str = "euclidean", target: Optional[TargetIn] = None,
                       config: Optional[ConfigIn] = None) -> ProblemFile:
    tri = pk.tri
    if coords == "hyperbolic":
        packing = PackingIn(coords="hyperbolic", lengths=np.arccosh(pk.inv_dist).tolist(), radii=pk.radii.tolist())
    else:
        packing = PackingIn(inv_dist=pk.inv_dist.tolist(), radii=pk.radii.tolist())
    return ProblemFile(
        mesh=MeshIn(num_vertices=tri.num_vertices, faces=[list(f) for f in tri.faces],
                    twins=list(tri.twins), edge_ids=list(tri.edge_ids)),
        packing=packing,
        target=target,
        config=config,
    )


# ─── Reports ─────────────────────────────────────────────────────────

class ValidationReport(BaseModel):
    num_vertices: int
    num_edges: int
    num_faces: int
    euler_characteristic: int
    genus: int
    slacks: List[Optional[float]]
    delaunay: bool


class CurvatureReport(BaseModel):
    curvatures: List[float]
    cone_angles: List[float]
    gauss_bonnet_residual: float


class FlipLogEntry(BaseModel):
    edge: int
    old: float
    new: float
    slack: float


class DelaunayReport(BaseModel):
    flips: List[FlipLogEntry]
    problem: ProblemFile


class FlowStepOut(BaseModel):
    iter: int
    max_err: float
    merit: float
    flips: int
    step: float
    num_edges: int
    gauss_bonnet: float


class FlowReport(BaseModel):
    method: str
    converged: bool
    iterations: int
    total_flips: int
    max_err: float
    trace: List[FlowStepOut]
    problem: ProblemFile


class CanonicalReport(BaseModel):
    problem: ProblemFile


class EquivalenceReport(BaseModel):
    equivalent: bool
    tol: float


class SuiteResult(BaseModel):
    name: str
    samples: int
    max_residual: float
    threshold: float
    passed: bool


class SelfTestReport(BaseModel):
    seed: int
    samples: int
    passed: bool
    suites: List[SuiteResult]
    stats: Dict[str, Any] = {}


class RunOut(BaseModel):
    id: str
    command: str
    input_digest: str
    status: str
    num_vertices: Optional[int] = None
    num_edges: Optional[int] = None
    euler_characteristic: Optional[int] = None
    iterations: Optional[int] = None
    flips: Optional[int] = None
    max_error: Optional[float] = None
    message: Optional[str] = None
    created_at: datetime

    class Config:
        from_attributes = True


class ErrorReport(BaseModel):
    error: str
    message: str
    exit_code: int
    details: Dict[str, Any] = {}


# ─── API requests ────────────────────────────────────────────────────

class EquivRequest(BaseModel):
    first: ProblemFile
    second: ProblemFile
    tol: float = 1e-8


class SelfTestRequest(BaseModel):
    samples: int = 200
    seed: int = 0


def trace_to_steps(trace: FlowTrace) -> List[FlowStepOut]:
    return [FlowStepOut(**row) for row in trace.to_rows()]


# ─── Files ───────────────────────────────────────────────────────────

def read_problem(path: Union[str, Path]) -> ProblemFile:
    try:
        raw = Path(path).read_text()
    except OSError as e:
        raise ProblemIOError(f"cannot read {path}: {e.strerror}", path=str(path))
    try:
        return ProblemFile.model_validate(json.loads(raw))
    except json.JSONDecodeError as e:
        raise ProblemIOError(f"{path} is not valid JSON: {e.msg} (line {e.lineno})", path=str(path))
    except ValidationError as e:
        raise ProblemIOError(f"{path} is not a problem file: {e.error_count()} schema errors",
                             path=str(path), errors=[err["msg"] for err in e.errors()])


def dumps(model: BaseModel) -> str:
    """JSON with shortest round-trip floats."""
    return json.dumps(model.model_dump(mode="json", exclude_none=True), indent=2)


def write_json(model: BaseModel, path: Union[str, Path]):
    try:
        Path(path).write_text(dumps(model) + "\n")
    except OSError as e:
        raise ProblemIOError(f"cannot write {path}: {e.strerror}", path=str(path))


TRACE_COLUMNS = ["iter", "max_err", "merit", "flips", "step", "num_edges", "gauss_bonnet"]


def write_trace_csv(trace: FlowTrace, path: Union[str, Path]):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
            writer.writeheader()
            for row in trace.to_rows():
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    except OSError as e:
        raise ProblemIOError(f"cannot write {path}: {e.strerror}", path=str(path))


def finite_or_none(values) -> List[Optional[float]]:
    return [None if math.isnan(v) else float(v) for v in values]


def write_flip_log(flips: List[FlipLogEntry], path: Union[str, Path]):
    try:
        Path(path).write_text(json.dumps([f.model_dump() for f in flips], indent=2) + "\n")
    except OSError as e:
        raise ProblemIOError(f"cannot write {path}: {e.strerror}", path=str(path))

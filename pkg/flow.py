"""
Discrete curvature, its Jacobian and the Ricci flow with Delaunay surgery.

All flows work in log radii u = log r. After every accepted step the
packing is re-Delaunayized, so the triangulation may change along the way
while the inversive distances always describe the same conformal class.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field, fields
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from config import (
    ARMIJO_C,
    CURVATURE_TOL,
    EULER_STEP,
    FLIP_TOL,
    FLOW_METHOD,
    MAX_HALVINGS,
    MAX_ITERS,
)
from delaunay import delaunayize
from errors import (
    LineSearchStalled,
    MaxIterations,
    SingularBeyondKernel,
    TargetInvalid,
    TriangleInequalityViolated,
    ValidationFailed,
)
from mesh import Triangulation
from packing_geometry import Packing, packings_match

logger = logging.getLogger("packflow.flow")

TWO_PI = 2.0 * math.pi
GAUSS_BONNET_TOL = 1e-9


# ─── Curvature ───────────────────────────────────────────────────────

@dataclass
class CurvatureState:
    cone_angles: np.ndarray
    curvatures: np.ndarray
    euler_characteristic: int
    jacobian: Optional[sparse.csr_matrix] = None

    @property
    def gauss_bonnet_residual(self) -> float:
        return float(np.sum(self.curvatures) - TWO_PI * self.euler_characteristic)


def curvature(pk: Packing) -> CurvatureState:
    phi = np.zeros(pk.tri.num_vertices)
    for f in range(pk.tri.num_faces):
        geo = pk.face_geometry(f)
        for v, theta in zip(pk.tri.faces[f], geo.angles):
            phi[v] += theta
    return CurvatureState(cone_angles=phi, curvatures=TWO_PI - phi,
                          euler_characteristic=pk.tri.euler_characteristic)


def curvature_jacobian(pk: Packing) -> sparse.csr_matrix:
    """dK/du assembled from per-face blocks; entry (i, j) of an edge is -h/l summed over its sides."""
    rows, cols, vals = [], [], []
    for f in range(pk.tri.num_faces):
        vi, vj, vk = pk.tri.faces[f]
        geo = pk.face_geometry(f)
        # side opposite each corner: (v_j, v_k), (v_k, v_i), (v_i, v_j)
        for (a, b), h, l in zip(((vj, vk), (vk, vi), (vi, vj)), geo.dual_distances, geo.lengths):
            w = h / l
            rows += [a, b, a, b]
            cols += [b, a, a, b]
            vals += [-w, -w, w, w]
    n = pk.tri.num_vertices
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def curvature_state(pk: Packing) -> CurvatureState:
    state = curvature(pk)
    state.jacobian = curvature_jacobian(pk)
    return state


# ─── Targets ─────────────────────────────────────────────────────────

def uniform_target(tri: Triangulation) -> np.ndarray:
    return np.full(tri.num_vertices, TWO_PI * tri.euler_characteristic / tri.num_vertices)


def validate_target(tri: Triangulation, target) -> np.ndarray:
    K = np.asarray(target, dtype=float)
    if K.shape != (tri.num_vertices,):
        raise TargetInvalid(f"target has {K.size} entries for {tri.num_vertices} vertices")
    if not np.all(np.isfinite(K)):
        raise TargetInvalid("target curvature must be finite")
    if np.any(K >= TWO_PI):
        raise TargetInvalid("target curvature must stay below 2*pi at every vertex",
                            vertices=np.flatnonzero(K >= TWO_PI).tolist())
    residual = float(np.sum(K) - TWO_PI * tri.euler_characteristic)
    if abs(residual) > GAUSS_BONNET_TOL:
        raise TargetInvalid(f"target violates Gauss-Bonnet by {residual:.3e}", residual=residual)
    return K


# ─── Configuration and traces ────────────────────────────────────────

@dataclass
class FlowConfig:
    method: str = FLOW_METHOD
    step: float = EULER_STEP
    tol: float = CURVATURE_TOL
    max_iters: int = MAX_ITERS
    flip_tol: float = FLIP_TOL
    flip_budget: Optional[int] = None
    armijo: float = ARMIJO_C
    max_halvings: int = MAX_HALVINGS

    def __post_init__(self):
        if self.method not in ("euler", "newton"):
            raise ValidationFailed(f"unknown flow method {self.method!r}", method=self.method)
        if self.step <= 0 or self.tol <= 0 or self.flip_tol < 0:
            raise ValidationFailed("step and tolerances must be positive")
        if self.max_iters < 0 or self.max_halvings < 0:
            raise ValidationFailed("iteration caps must be non-negative")

    def override(self, **changes) -> "FlowConfig":
        """Copy with every non-None change applied."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update({k: v for k, v in changes.items() if v is not None and k in values})
        return FlowConfig(**values)


@dataclass
class FlowStep:
    iter: int
    max_err: float
    merit: float
    flips: int
    step: float
    num_edges: int
    gauss_bonnet: float


@dataclass
class FlowTrace:
    method: str
    steps: List[FlowStep] = field(default_factory=list)
    converged: bool = False

    def record(self, it: int, err: np.ndarray, flips: int, step: float, pk: Packing, state: CurvatureState):
        entry = FlowStep(
            iter=it,
            max_err=float(np.max(np.abs(err))),
            merit=_merit(err),
            flips=flips,
            step=step,
            num_edges=pk.tri.num_edges,
            gauss_bonnet=state.gauss_bonnet_residual,
        )
        self.steps.append(entry)
        logger.debug("%s iter %d: max_err=%.3e merit=%.3e flips=%d step=%.3g",
                     self.method, it, entry.max_err, entry.merit, flips, step)

    @property
    def iterations(self) -> int:
        return self.steps[-1].iter if self.steps else 0

    @property
    def total_flips(self) -> int:
        return sum(s.flips for s in self.steps)

    def to_rows(self) -> List[dict]:
        return [dict(s.__dict__) for s in self.steps]


def _merit(err: np.ndarray) -> float:
    return 0.5 * float(err @ err)


# ─── Ricci potential ─────────────────────────────────────────────────

_GAUSS_NODES = (0.5 - math.sqrt(15) / 10, 0.5, 0.5 + math.sqrt(15) / 10)
_GAUSS_WEIGHTS = (5 / 18, 8 / 18, 5 / 18)


def ricci_potential_delta(pk: Packing, u_from, u_to, segments: int = 8,
                          target=None, flip_tol: Optional[float] = None) -> float:
    """Integral of sum (K_i - target_i) du_i along the segment u_from -> u_to.

    Composite three-point Gauss rule; the packing is surgered at every node,
    each node starting from the triangulation of the previous one.
    """
    u0 = np.asarray(u_from, dtype=float)
    du = np.asarray(u_to, dtype=float) - u0
    if not np.any(du):
        return 0.0
    K_bar = uniform_target(pk.tri) if target is None else validate_target(pk.tri, target)

    total = 0.0
    current = pk
    for seg in range(segments):
        for x, w in zip(_GAUSS_NODES, _GAUSS_WEIGHTS):
            t = (seg + x) / segments
            current, _ = delaunayize(current.with_log_radii(u0 + t * du), flip_tol)
            K = curvature(current).curvatures
            total += w * float((K - K_bar) @ du) / segments
    return total


# ─── Flows ───────────────────────────────────────────────────────────

def _advance(pk: Packing, u: np.ndarray, cfg: FlowConfig) -> Tuple[Packing, int, CurvatureState]:
    cand, log = delaunayize(pk.with_log_radii(u), cfg.flip_tol, cfg.flip_budget)
    return cand, len(log), curvature(cand)


def _start(pk: Packing, target, cfg: FlowConfig):
    K_bar = validate_target(pk.tri, target)
    pk, log = delaunayize(pk, cfg.flip_tol, cfg.flip_budget)
    state = curvature(pk)
    trace = FlowTrace(method=cfg.method)
    err = state.curvatures - K_bar
    trace.record(0, err, len(log), 0.0, pk, state)
    return K_bar, pk, state, err, trace


def _line_search(pk: Packing, u: np.ndarray, direction: np.ndarray, t: float, merit: float,
                 K_bar: np.ndarray, cfg: FlowConfig, sufficient) -> Tuple[Packing, int, CurvatureState, float]:
    for _ in range(cfg.max_halvings + 1):
        try:
            cand, flips, state = _advance(pk, u + t * direction, cfg)
        except TriangleInequalityViolated as e:
            logger.debug("step %.3g left the valid region at face %s, halving", t, e.face)
        else:
            if _merit(state.curvatures - K_bar) <= sufficient(t) * merit:
                return cand, flips, state, t
            logger.debug("step %.3g raised the merit, halving", t)
        t *= 0.5
    raise LineSearchStalled(f"no acceptable step after {cfg.max_halvings} halvings")


def flow_euler(pk: Packing, target, cfg: Optional[FlowConfig] = None) -> Tuple[Packing, FlowTrace]:
    """Explicit Euler on du/dt = -(K - target), halving the step when the merit rises."""
    cfg = (cfg or FlowConfig()).override(method="euler")
    K_bar, pk, state, err, trace = _start(pk, target, cfg)

    it = 0
    while np.max(np.abs(err)) >= cfg.tol:
        if it >= cfg.max_iters:
            raise MaxIterations(f"euler flow did not converge in {cfg.max_iters} iterations", trace=trace,
                                max_err=trace.steps[-1].max_err)
        it += 1
        try:
            pk, flips, state, t = _line_search(pk, pk.u, -err, cfg.step, _merit(err), K_bar, cfg,
                                               lambda t: 1.0)
        except LineSearchStalled as e:
            e.trace = trace
            raise
        err = state.curvatures - K_bar
        trace.record(it, err, flips, t, pk, state)

    trace.converged = True
    logger.info("euler flow converged: %d iterations, %d flips, max_err=%.3e",
                it, trace.total_flips, trace.steps[-1].max_err)
    return pk, trace


def newton_direction(J: sparse.spmatrix, err: np.ndarray) -> np.ndarray:
    """Solve J d = -err with sum(d) = 0 through the bordered system [[J, 1], [1^T, 0]]."""
    n = J.shape[0]
    ones = sparse.csr_matrix(np.ones((n, 1)))
    A = sparse.bmat([[J, ones], [ones.T, None]], format="csc")
    rhs = np.append(-err, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            sol = np.atleast_1d(spsolve(A, rhs))
        except MatrixRankWarning:
            raise SingularBeyondKernel("curvature Jacobian has a kernel beyond the scaling direction")
    if not np.all(np.isfinite(sol)):
        raise SingularBeyondKernel("Newton system produced non-finite values")
    if np.linalg.norm(A @ sol - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        raise SingularBeyondKernel("Newton system is not solvable to working precision")
    return sol[:n]


def flow_newton(pk: Packing, target, cfg: Optional[FlowConfig] = None) -> Tuple[Packing, FlowTrace]:
    """Damped Newton on the Ricci potential with Armijo backtracking."""
    cfg = (cfg or FlowConfig()).override(method="newton")
    K_bar, pk, state, err, trace = _start(pk, target, cfg)

    it = 0
    while np.max(np.abs(err)) >= cfg.tol:
        if it >= cfg.max_iters:
            raise MaxIterations(f"newton flow did not converge in {cfg.max_iters} iterations", trace=trace,
                                max_err=trace.steps[-1].max_err)
        it += 1
        try:
            direction = newton_direction(curvature_jacobian(pk), err)
            pk, flips, state, t = _line_search(pk, pk.u, direction, 1.0, _merit(err), K_bar, cfg,
                                               lambda t: 1.0 - 2.0 * cfg.armijo * t)
        except (LineSearchStalled, SingularBeyondKernel) as e:
            e.trace = trace
            raise
        err = state.curvatures - K_bar
        trace.record(it, err, flips, t, pk, state)

    trace.converged = True
    logger.info("newton flow converged: %d iterations, %d flips, max_err=%.3e",
                it, trace.total_flips, trace.steps[-1].max_err)
    return pk, trace


def run_flow(pk: Packing, target, cfg: Optional[FlowConfig] = None) -> Tuple[Packing, FlowTrace]:
    cfg = cfg or FlowConfig()
    if cfg.method == "euler":
        return flow_euler(pk, target, cfg)
    return flow_newton(pk, target, cfg)


# ─── Uniqueness ──────────────────────────────────────────────────────

def verify_uniqueness(pk: Packing, target=None, trials: int = 5, tol: float = 1e-8,
                      perturb: str = "radii", seed: int = 0, spread: float = 0.2,
                      cfg: Optional[FlowConfig] = None) -> bool:
    """Flow several perturbed starts to the same target and compare the normalized results."""
    if perturb not in ("radii", "inv_dist"):
        raise ValidationFailed(f"cannot perturb {perturb!r}", perturb=perturb)
    if trials <= 1:
        return True
    target = uniform_target(pk.tri) if target is None else target
    rng = np.random.default_rng(seed)

    results = []
    for trial in range(trials):
        start = pk
        if trial and perturb == "radii":
            start = pk.with_log_radii(pk.u + rng.uniform(-spread, spread, pk.tri.num_vertices))
        elif trial:
            inv = pk.inv_dist * (1.0 + rng.uniform(0.0, spread, pk.tri.num_edges))
            start = Packing(pk.tri, inv, pk.radii)
        final, _ = flow_newton(start, target, cfg)
        results.append(final.normalized())

    agree = all(packings_match(results[0], other, tol) for other in results[1:])
    logger.info("uniqueness over %d %s perturbations: %s", trials, perturb, "agree" if agree else "differ")
    return agree

"""
Hyperbolic length coordinates and conformal-class comparison.

A Delaunay packing (T, I, r) corresponds to the bordered hyperbolic
surface whose truncated triangulation has edge lengths x = arccosh I.
Both sides share the Delaunay triangulation T, so the correspondence is a
per-edge transform.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from delaunay import delaunayize, hinge_data, is_delaunay, is_local_delaunay, ptolemy_f
from errors import DomainError, NotDelaunay, SurfaceMismatch
from flow import FlowConfig, flow_newton, uniform_target
from mesh import Triangulation, flip as flip_triangulation
from packing_geometry import HingeData, Packing, check_inversive, packings_match

logger = logging.getLogger("packflow.hyperbolic")


@dataclass(frozen=True, eq=False)
class HyperbolicCoords:
    tri: Triangulation
    lengths: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        x = np.array(self.lengths, dtype=float)
        r = np.array(self.radii, dtype=float)
        if x.shape != (self.tri.num_edges,) or r.shape != (self.tri.num_vertices,):
            raise DomainError("hyperbolic lengths or radii do not match the triangulation")
        if not np.all(np.isfinite(x)) or not np.all(x > 0):
            raise DomainError("hyperbolic edge lengths must be positive")
        if not np.all(np.isfinite(r)) or not np.all(r > 0):
            raise DomainError("radii must be positive")
        x.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "lengths", x)
        object.__setattr__(self, "radii", r)


def to_hyperbolic(pk: Packing, tol: Optional[float] = None) -> HyperbolicCoords:
    if not is_delaunay(pk, tol):
        raise NotDelaunay("packing is not weighted Delaunay; delaunayize it first")
    return HyperbolicCoords(pk.tri, np.arccosh(pk.inv_dist), pk.radii)


def from_hyperbolic(hc: HyperbolicCoords, tol: Optional[float] = None) -> Packing:
    pk = Packing(hc.tri, np.cosh(hc.lengths), hc.radii)
    if not is_delaunay(pk, tol):
        raise NotDelaunay("hyperbolic data is not weighted Delaunay")
    return pk


def hyperbolic_is_local_delaunay(x_a: float, x_b: float, x_c: float, x_d: float, x_e: float,
                                 p: float, q: float, r: float, s: float) -> float:
    if min(x_a, x_b, x_c, x_d, x_e) <= 0:
        raise DomainError("hyperbolic lengths must be positive")
    return is_local_delaunay(HingeData(
        a=math.cosh(x_a), b=math.cosh(x_b), c=math.cosh(x_c), d=math.cosh(x_d), e=math.cosh(x_e),
        p=p, q=q, r=r, s=s,
    ))


def hexagon_side(x: float, y: float, z: float) -> float:
    """Side of a right-angled hexagon opposite x, between the sides y and z."""
    if min(x, y, z) <= 0:
        raise DomainError("hexagon sides must be positive", x=x, y=y, z=z)
    return math.acosh((math.cosh(y) * math.cosh(z) + math.cosh(x)) / (math.sinh(y) * math.sinh(z)))


def boundary_arc(a: float, d: float, e: float) -> float:
    """Boundary arc at v_i of the truncated face with sides a, e at v_i and d opposite."""
    for v in (a, d, e):
        check_inversive(v)
    return math.acosh((a * e + d) / (math.sqrt(a * a - 1.0) * math.sqrt(e * e - 1.0)))


def flip_hyperbolic(hc: HyperbolicCoords, edge: int) -> HyperbolicCoords:
    pk = Packing(hc.tri, np.cosh(hc.lengths), hc.radii)
    h = hinge_data(pk, edge)
    x = np.array(hc.lengths)
    x[edge] = math.acosh(ptolemy_f(h.a, h.b, h.c, h.d, h.e))
    return HyperbolicCoords(flip_triangulation(hc.tri, edge), x, hc.radii)


# ─── Canonical representatives ───────────────────────────────────────

@dataclass(frozen=True, eq=False)
class CanonicalForm:
    tri: Triangulation
    inv_dist: np.ndarray
    radii: np.ndarray

    @classmethod
    def from_packing(cls, pk: Packing) -> "CanonicalForm":
        return cls(pk.tri, pk.inv_dist, pk.radii)

    def to_packing(self) -> Packing:
        return Packing(self.tri, self.inv_dist, self.radii)


def canonical_form(pk: Packing, tol: Optional[float] = None, cfg: Optional[FlowConfig] = None) -> CanonicalForm:
    """Delaunayize, flow to uniform curvature, fix the scale with sum(u) = 0, surgery once more."""
    cfg = cfg or FlowConfig()
    if tol is not None:
        cfg = cfg.override(flip_tol=tol)
    pk, _ = delaunayize(pk, cfg.flip_tol, cfg.flip_budget)
    pk, trace = flow_newton(pk, uniform_target(pk.tri), cfg)
    pk, _ = delaunayize(pk.normalized(), cfg.flip_tol, cfg.flip_budget)
    logger.debug("canonical form after %d iterations, %d flips", trace.iterations, trace.total_flips)
    return CanonicalForm.from_packing(pk)


def equivalent(pk1: Packing, pk2: Packing, tol: float = 1e-8, cfg: Optional[FlowConfig] = None) -> bool:
    """Whether two packings on the same labelled surface are discretely conformal."""
    if pk1.tri.num_vertices != pk2.tri.num_vertices or pk1.tri.genus != pk2.tri.genus:
        raise SurfaceMismatch(
            f"surfaces differ: n={pk1.tri.num_vertices}/{pk2.tri.num_vertices}, "
            f"genus={pk1.tri.genus}/{pk2.tri.genus}")
    c1 = canonical_form(pk1, cfg=cfg)
    c2 = canonical_form(pk2, cfg=cfg)
    return packings_match(c1.to_packing(), c2.to_packing(), tol)

"""
Euclidean geometry of inversive distance circle packings.

Lengths are recomputed from (I, r) on demand; nothing here caches state.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from config import BOUNDARY_EPS
from errors import DomainError, NonPositiveInput, TriangleInequalityViolated
from mesh import Triangulation


# ─── Scalar formulas ─────────────────────────────────────────────────

def inversive_distance(l: float, r1: float, r2: float) -> float:
    if l <= 0 or r1 <= 0 or r2 <= 0:
        raise NonPositiveInput("length and radii must be positive", l=l, r1=r1, r2=r2)
    return (l * l - r1 * r1 - r2 * r2) / (2.0 * r1 * r2)


def check_inversive(I: float, boundary_tolerant: bool = False):
    if boundary_tolerant:
        if I < 1.0:
            raise DomainError(f"inversive distance {I!r} is below 1", value=I)
    elif not I > 1.0 + BOUNDARY_EPS:
        raise DomainError(f"inversive distance {I!r} must exceed 1", value=I)


def edge_length(I: float, r1: float, r2: float, boundary_tolerant: bool = False) -> float:
    check_inversive(I, boundary_tolerant)
    if r1 <= 0 or r2 <= 0:
        raise NonPositiveInput("radii must be positive", r1=r1, r2=r2)
    return math.sqrt(r1 * r1 + r2 * r2 + 2.0 * I * r1 * r2)


def discriminant(a: float, b: float, c: float) -> float:
    return a * a + b * b + c * c + 2.0 * a * b * c - 1.0


def discriminant_cosh_form(a: float, b: float, c: float) -> float:
    """The discriminant as a product of four hyperbolic cosines (a, b, c > 1)."""
    x, y, z = math.acosh(a), math.acosh(b), math.acosh(c)
    return 4.0 * (math.cosh((x + y + z) / 2) * math.cosh((y + z - x) / 2)
                  * math.cosh((x + z - y) / 2) * math.cosh((x + y - z) / 2))


def heron_area(l1: float, l2: float, l3: float, face: Optional[int] = None) -> float:
    """Area from side lengths, sorted form that stays accurate for needle triangles."""
    a, b, c = sorted((l1, l2, l3), reverse=True)
    slack = b + c - a
    sq = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    if slack <= 0 or sq <= 0:
        raise TriangleInequalityViolated(
            f"face {face} violates the triangle inequality (slack {slack:.3e})", face=face, slack=slack)
    return 0.25 * math.sqrt(sq)


def power_center(centers: np.ndarray, radii: Sequence[float]) -> Tuple[np.ndarray, float]:
    """Center and radius of the circle orthogonal to three circles."""
    c = np.asarray(centers, dtype=float)
    r = np.asarray(radii, dtype=float)
    power = np.sum(c * c, axis=1) - r * r
    A = 2.0 * np.array([c[1] - c[0], c[2] - c[0]])
    rhs = np.array([power[1] - power[0], power[2] - power[0]])
    O = np.linalg.solve(A, rhs)
    rho_sq = float(np.sum((O - c[0]) ** 2) - r[0] ** 2)
    return O, math.sqrt(max(rho_sq, 0.0))


# ─── Packings ────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Packing:
    tri: Triangulation
    inv_dist: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        inv = np.array(self.inv_dist, dtype=float)
        r = np.array(self.radii, dtype=float)
        if inv.shape != (self.tri.num_edges,):
            raise DomainError(f"expected {self.tri.num_edges} inversive distances, got {inv.size}")
        if r.shape != (self.tri.num_vertices,):
            raise DomainError(f"expected {self.tri.num_vertices} radii, got {r.size}")
        if not np.all(np.isfinite(inv)) or not np.all(inv > 1.0 + BOUNDARY_EPS):
            bad = int(np.argmin(inv)) if np.all(np.isfinite(inv)) else int(np.argmax(~np.isfinite(inv)))
            raise DomainError(f"inversive distance of edge {bad} must exceed 1", edge=bad)
        if not np.all(np.isfinite(r)) or not np.all(r > 0):
            raise NonPositiveInput("radii must be positive and finite")
        inv.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "inv_dist", inv)
        object.__setattr__(self, "radii", r)

    @property
    def u(self) -> np.ndarray:
        return np.log(self.radii)

    def with_radii(self, radii) -> "Packing":
        return Packing(self.tri, self.inv_dist, np.asarray(radii, dtype=float))

    def with_log_radii(self, u) -> "Packing":
        return self.with_radii(np.exp(np.asarray(u, dtype=float)))

    def normalized(self) -> "Packing":
        u = self.u
        return self.with_log_radii(u - u.mean())

    def lengths(self) -> np.ndarray:
        out = np.empty(self.tri.num_edges)
        for e in range(self.tri.num_edges):
            a, b = self.tri.edge_endpoints(e)
            out[e] = edge_length(self.inv_dist[e], self.radii[a], self.radii[b])
        return out

    def face_data(self, f: int):
        """(vertices, inversive distances (I_jk, I_ki, I_ij), radii) of face f."""
        vi, vj, vk = self.tri.faces[f]
        e_ij, e_jk, e_ki = self.tri.face_edges(f)
        inv = self.inv_dist
        return (vi, vj, vk), (inv[e_jk], inv[e_ki], inv[e_ij]), (self.radii[vi], self.radii[vj], self.radii[vk])

    def face_geometry(self, f: int) -> "TriangleGeometry":
        _, (a, b, c), (ri, rj, rk) = self.face_data(f)
        return triangle_geometry(a, b, c, ri, rj, rk, face=f)


def _oriented_sides(pk: Packing):
    """Per face, the (origin vertex, inversive distance) of each side in cyclic order."""
    tri = pk.tri
    return [tuple((tri.faces[f][c], pk.inv_dist[tri.edge_ids[3 * f + c]]) for c in range(3))
            for f in range(tri.num_faces)]


def _sides_match(s1, s2, tol: float) -> bool:
    return all(v1 == v2 and abs(I1 - I2) <= tol for (v1, I1), (v2, I2) in zip(s1, s2))


def packings_match(pk1: Packing, pk2: Packing, tol: float) -> bool:
    """Compare with labels fixed: oriented faces side by side, then radii.

    Edge ids may differ between the two triangulations, so faces are paired
    through their rotations instead of through edge ids.
    """
    if pk1.tri.num_vertices != pk2.tri.num_vertices or pk1.tri.num_edges != pk2.tri.num_edges:
        return False
    if not np.allclose(pk1.radii, pk2.radii, rtol=0.0, atol=tol):
        return False

    unmatched = _oriented_sides(pk2)
    for sides in _oriented_sides(pk1):
        for k, other in enumerate(unmatched):
            if any(_sides_match(sides, other[c:] + other[:c], tol) for c in range(3)):
                del unmatched[k]
                break
        else:
            return False
    return True


# ─── Triangles ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class TriangleGeometry:
    lengths: Tuple[float, float, float]  # (l_i, l_j, l_k), l_i opposite v_i
    angles: Tuple[float, float, float]
    area: float
    ortho_radius: float
    dual_distances: Tuple[float, float, float]  # (h_jk,i, h_ki,j, h_ij,k)


def dual_distance(rho: float, e: float, a: float, d: float, p: float, q: float, s: float) -> float:
    """Signed distance h_ij,k from the power center to e_ij, hinge-role notation.

    e = I_ij, a = I_ki, d = I_jk, p = r_k, q = r_i, s = r_j.
    """
    qs = math.sqrt(q * q + 2.0 * e * q * s + s * s)
    num = (a * e + d) * p * q + (d * e + a) * p * s - (e * e - 1.0) * q * s
    return rho * num / (p * qs * math.sqrt(discriminant(a, d, e)))


def _corner_angle(opposite: float, s1: float, s2: float, area: float) -> float:
    return math.atan2(4.0 * area, s1 * s1 + s2 * s2 - opposite * opposite)


def triangle_geometry(a_jk: float, b_ki: float, c_ij: float, r_i: float, r_j: float, r_k: float,
                      face: Optional[int] = None) -> TriangleGeometry:
    l_i = edge_length(a_jk, r_j, r_k)
    l_j = edge_length(b_ki, r_k, r_i)
    l_k = edge_length(c_ij, r_i, r_j)
    area = heron_area(l_i, l_j, l_k, face=face)
    angles = (_corner_angle(l_i, l_j, l_k, area),
              _corner_angle(l_j, l_k, l_i, area),
              _corner_angle(l_k, l_i, l_j, area))

    # planar placement: v_i at the origin, v_j on the first axis
    x_k = (l_j * l_j + l_k * l_k - l_i * l_i) / (2.0 * l_k)
    centers = np.array([[0.0, 0.0], [l_k, 0.0], [x_k, 2.0 * area / l_k]])
    _, rho = power_center(centers, (r_i, r_j, r_k))

    h_ij_k = dual_distance(rho, c_ij, b_ki, a_jk, r_k, r_i, r_j)
    h_jk_i = dual_distance(rho, a_jk, c_ij, b_ki, r_i, r_j, r_k)
    h_ki_j = dual_distance(rho, b_ki, a_jk, c_ij, r_j, r_k, r_i)
    return TriangleGeometry(
        lengths=(l_i, l_j, l_k),
        angles=angles,
        area=area,
        ortho_radius=rho,
        dual_distances=(h_jk_i, h_ki_j, h_ij_k),
    )


# ─── Hinges ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class HingeData:
    """Inversive distances of e_ki, e_il, e_lj, e_jk, e_ij and radii at v_k, v_i, v_l, v_j."""
    a: float
    b: float
    c: float
    d: float
    e: float
    p: float
    q: float
    r: float
    s: float

    def __post_init__(self):
        for name in "abcde":
            check_inversive(getattr(self, name))
        for name in "pqrs":
            if not getattr(self, name) > 0:
                raise NonPositiveInput(f"radius {name} must be positive")

    def replace(self, **changes) -> "HingeData":
        values = {k: getattr(self, k) for k in "abcdepqrs"}
        values.update(changes)
        return HingeData(**values)


@dataclass(frozen=True)
class HingeDevelopment:
    v_k: np.ndarray
    v_i: np.ndarray
    v_l: np.ndarray
    v_j: np.ndarray
    z: float  # |v_k v_l|
    F: float  # inversive distance of the developed diagonal v_k v_l
    h_k: float  # signed distance of the power center of f_ijk to e_ij
    h_l: float
    rho_k: float = field(default=0.0)
    rho_l: float = field(default=0.0)


def develop_hinge(h: HingeData) -> HingeDevelopment:
    """Lay the hinge out with v_i at the origin, v_j on the positive axis, v_k above."""
    pq = edge_length(h.a, h.p, h.q)
    qr = edge_length(h.b, h.q, h.r)
    rs = edge_length(h.c, h.r, h.s)
    sp = edge_length(h.d, h.s, h.p)
    y = edge_length(h.e, h.q, h.s)
    area_k = heron_area(pq, sp, y)
    area_l = heron_area(qr, rs, y)

    v_i = np.array([0.0, 0.0])
    v_j = np.array([y, 0.0])
    v_k = np.array([(pq * pq + y * y - sp * sp) / (2.0 * y), 2.0 * area_k / y])
    v_l = np.array([(qr * qr + y * y - rs * rs) / (2.0 * y), -2.0 * area_l / y])
    z = float(np.linalg.norm(v_k - v_l))

    o_k, rho_k = power_center(np.array([v_i, v_j, v_k]), (h.q, h.s, h.p))
    o_l, rho_l = power_center(np.array([v_i, v_j, v_l]), (h.q, h.s, h.r))
    return HingeDevelopment(
        v_k=v_k, v_i=v_i, v_l=v_l, v_j=v_j,
        z=z,
        F=(z * z - h.p * h.p - h.r * h.r) / (2.0 * h.p * h.r),
        h_k=float(o_k[1]),
        h_l=float(-o_l[1]),
        rho_k=rho_k,
        rho_l=rho_l,
    )

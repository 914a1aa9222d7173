"""
Weighted Delaunay predicate, the Ptolemy flip value and the surgery loop.

Hinge roles follow mesh.Hinge: the diagonal e_ij runs i -> j with v_k on
its left and v_l on its right. a..e are the inversive distances of e_ki,
e_il, e_lj, e_jk, e_ij and p, q, r, s the radii at v_k, v_i, v_l, v_j.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config import BOUNDARY_EPS, FLIP_BUDGET_FACTOR, FLIP_TOL
from errors import (
    DegenerateHinge,
    DomainError,
    FlipBudgetExceeded,
    NonPositiveInput,
    NonpositiveDenominator,
)
from mesh import flip as flip_triangulation, hinge_at
from packing_geometry import (
    HingeData,
    Packing,
    check_inversive,
    develop_hinge,
    discriminant,
    heron_area,
)

logger = logging.getLogger("packflow.delaunay")


# ─── Ptolemy relation ────────────────────────────────────────────────

def ptolemy_f(a: float, b: float, c: float, d: float, e: float) -> float:
    """Inversive distance of the diagonal e_kl that replaces e_ij in a flip."""
    for v in (a, b, c, d, e):
        check_inversive(v)
    root = math.sqrt(discriminant(a, d, e)) * math.sqrt(discriminant(b, c, e))
    return (a * b + c * d + a * c * e + b * d * e + root) / (e * e - 1.0)


def ptolemy_residual(a: float, b: float, c: float, d: float, e: float, f: float) -> float:
    return (a * a + b * b + c * c + d * d + e * e + f * f
            + 2.0 * (a * d * e + b * c * e + a * b * f + c * d * f + a * b * c * d + a * c * e * f + b * d * e * f)
            - a * a * c * c - b * b * d * d - e * e * f * f - 1.0)


def delta_propagation(a: float, b: float, c: float, d: float, e: float) -> Tuple[float, float]:
    """(sqrt D_abf, sqrt D_cdf) from the data of the unflipped hinge."""
    for v in (a, b, c, d, e):
        check_inversive(v)
    s_bce = math.sqrt(discriminant(b, c, e))
    s_ade = math.sqrt(discriminant(a, d, e))
    den = e * e - 1.0
    return ((d + a * e) * s_bce + (c + b * e) * s_ade) / den, ((a + d * e) * s_bce + (b + c * e) * s_ade) / den


# ─── Predicate ───────────────────────────────────────────────────────

def _slack_terms(h: HingeData) -> Tuple[float, float, float, float]:
    """The four terms of the Delaunay inequality: two new-side, then two old-side."""
    s_abf, s_cdf = delta_propagation(h.a, h.b, h.c, h.d, h.e)
    return (s_cdf / h.q, s_abf / h.s,
            math.sqrt(discriminant(h.b, h.c, h.e)) / h.p,
            math.sqrt(discriminant(h.a, h.d, h.e)) / h.r)


def is_local_delaunay(h: HingeData) -> float:
    """Signed slack; >= 0 means the hinge is local weighted Delaunay."""
    t1, t2, t3, t4 = _slack_terms(h)
    return t1 + t2 - t3 - t4


def slack_and_scale(h: HingeData) -> Tuple[float, float]:
    terms = _slack_terms(h)
    return terms[0] + terms[1] - terms[2] - terms[3], max(terms)


def delaunay_equality_p0(q: float, r: float, s: float, a: float, b: float, c: float, d: float, e: float) -> float:
    """The radius at v_k that puts the hinge exactly on the Delaunay wall."""
    if min(q, r, s) <= 0:
        raise NonPositiveInput("radii must be positive", q=q, r=r, s=s)
    s_abf, s_cdf = delta_propagation(a, b, c, d, e)
    den = s_cdf / q + s_abf / s - math.sqrt(discriminant(a, d, e)) / r
    if den <= 0:
        raise NonpositiveDenominator(f"Delaunay wall is not reachable by varying p (denominator {den:.3e})",
                                     denominator=den)
    return math.sqrt(discriminant(b, c, e)) / den


def degenerate_p0(q: float, s: float, a: float, d: float, e: float) -> float:
    """The radius at v_k at which the face f_ijk collapses onto e_ij."""
    for v in (a, d, e):
        check_inversive(v)
    if min(q, s) <= 0:
        raise NonPositiveInput("radii must be positive", q=q, s=s)
    qs = math.sqrt(q * q + s * s + 2.0 * e * q * s)
    return (e * e - 1.0) * q * s / (qs * math.sqrt(discriminant(a, d, e)) + (a * e + d) * q + (d * e + a) * s)


def ushijima_signs(a: float, b: float, c: float, d: float, e: float) -> Tuple[float, float, float, float]:
    """Left-minus-right values of the four equal-weight Delaunay inequalities.

    The first, second and fourth share the sign of the hinge's Delaunay
    slack. The third pairs opposite sides of the quadrilateral, a with c
    and b with d. Keep that pairing: the adjacent one, a with d and b
    with c, does not vanish on the wall. The opposite pairing is symmetric
    under swapping e and f, so it never changes sign and only vanishes on
    the wall.
    """
    f = ptolemy_f(a, b, c, d, e)
    s_abf, s_cdf = delta_propagation(a, b, c, d, e)
    s_ade = math.sqrt(discriminant(a, d, e))
    s_bce = math.sqrt(discriminant(b, c, e))
    return (
        (1 + a + d - e) * math.sqrt((1 + b) * (1 + c)) + (1 + b + c - e) * math.sqrt((1 + a) * (1 + d)),
        (1 + a + d - e) * s_bce + (1 + b + c - e) * s_ade,
        math.sqrt((1 + a) * (1 + c)) + math.sqrt((1 + b) * (1 + d)) - math.sqrt((1 + e) * (1 + f)),
        s_abf + s_cdf - s_ade - s_bce,
    )


# ─── Packings ────────────────────────────────────────────────────────

def hinge_data(pk: Packing, edge: int) -> HingeData:
    hg = hinge_at(pk.tri, edge)
    inv, rad = pk.inv_dist, pk.radii
    return HingeData(
        a=inv[hg.e_ki], b=inv[hg.e_il], c=inv[hg.e_lj], d=inv[hg.e_jk], e=inv[edge],
        p=rad[hg.k], q=rad[hg.i], r=rad[hg.l], s=rad[hg.j],
    )


def edge_slacks(pk: Packing) -> np.ndarray:
    """Per-edge slack; NaN where the edge is folded inside one face."""
    out = np.full(pk.tri.num_edges, np.nan)
    for e in range(pk.tri.num_edges):
        try:
            out[e] = is_local_delaunay(hinge_data(pk, e))
        except DegenerateHinge:
            continue
    return out


def _needs_flip(pk: Packing, edge: int, tol: float) -> Optional[float]:
    try:
        slack, scale = slack_and_scale(hinge_data(pk, edge))
    except DegenerateHinge:
        logger.debug("edge %d is folded, skipped", edge)
        return None
    return slack if slack < -tol * scale else None


def is_delaunay(pk: Packing, tol: Optional[float] = None) -> bool:
    tol = FLIP_TOL if tol is None else tol
    return all(_needs_flip(pk, e, tol) is None for e in range(pk.tri.num_edges))


@dataclass(frozen=True)
class FlipRecord:
    edge: int
    old: float
    new: float
    slack: float

    def to_dict(self) -> dict:
        return {"edge": self.edge, "old": self.old, "new": self.new, "slack": self.slack}


def flip_packing(pk: Packing, edge: int) -> Tuple[Packing, FlipRecord]:
    """One surgery step: flip the edge and give the new diagonal its Ptolemy value."""
    h = hinge_data(pk, edge)
    f = ptolemy_f(h.a, h.b, h.c, h.d, h.e)
    if not f > 1.0 + BOUNDARY_EPS:
        raise DomainError(f"flip of edge {edge} produced inversive distance {f!r}", edge=edge, value=f)
    inv = np.array(pk.inv_dist)
    inv[edge] = f
    new = Packing(flip_triangulation(pk.tri, edge), inv, pk.radii)
    return new, FlipRecord(edge=edge, old=h.e, new=f, slack=is_local_delaunay(h))


def _check_faces(pk: Packing):
    lengths = pk.lengths()
    for f in range(pk.tri.num_faces):
        heron_area(*(lengths[e] for e in pk.tri.face_edges(f)), face=f)


def delaunayize(pk: Packing, tol: Optional[float] = None,
                budget: Optional[int] = None) -> Tuple[Packing, List[FlipRecord]]:
    """Flip non-Delaunay edges, lowest edge id first, until none remain."""
    tol = FLIP_TOL if tol is None else tol
    budget = FLIP_BUDGET_FACTOR * pk.tri.num_edges if budget is None else budget
    log: List[FlipRecord] = []

    while True:
        edge = next((e for e in range(pk.tri.num_edges) if _needs_flip(pk, e, tol) is not None), None)
        if edge is None:
            break
        if len(log) >= budget:
            raise FlipBudgetExceeded(f"more than {budget} flips; suspected numerical cycling",
                                     budget=budget, flips=len(log))
        pk, record = flip_packing(pk, edge)
        log.append(record)
        logger.debug("flip edge %d: %.6g -> %.6g (slack %.3e)", edge, record.old, record.new, record.slack)

    _check_faces(pk)
    if log:
        logger.info("delaunayize: %d flips", len(log))
    return pk, log


# ─── Wall derivative check ───────────────────────────────────────────

_VARS = ("p", "q", "r", "s", "a", "b", "c", "d", "e")


def dF_df_check(q: float, r: float, s: float, a: float, b: float, c: float, d: float, e: float,
                step: float = 1e-5, p: Optional[float] = None) -> float:
    """Max |dF - df| over all nine variables, by central differences.

    F is the inversive distance of the developed diagonal and f its Ptolemy
    value. p defaults to the Delaunay-wall radius, where the two agree to
    first order.
    """
    if p is None:
        p = delaunay_equality_p0(q, r, s, a, b, c, d, e)
    base = HingeData(a=a, b=b, c=c, d=d, e=e, p=p, q=q, r=r, s=s)

    def F(h: HingeData) -> float:
        return develop_hinge(h).F

    def f(h: HingeData) -> float:
        return ptolemy_f(h.a, h.b, h.c, h.d, h.e)

    worst = 0.0
    for name in _VARS:
        x = getattr(base, name)
        plus = base.replace(**{name: x + step})
        minus = base.replace(**{name: x - step})
        dF = (F(plus) - F(minus)) / (2.0 * step)
        df = (f(plus) - f(minus)) / (2.0 * step)
        worst = max(worst, abs(dF - df))
    return worst

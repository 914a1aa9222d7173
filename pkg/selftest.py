"""
Randomized identity suites for the geometry and the flow.

Each suite samples valid inputs, evaluates an identity that must hold
exactly in real arithmetic, and reports the worst residual against a
threshold. The checker keeps running counts across invocations.
"""
import logging
import math
from typing import Any, Callable, Dict, List

import numpy as np

from delaunay import (
    degenerate_p0,
    delaunay_equality_p0,
    delaunayize,
    delta_propagation,
    dF_df_check,
    is_local_delaunay,
    ptolemy_f,
    ptolemy_residual,
    ushijima_signs,
)
from errors import NonpositiveDenominator, TriangleInequalityViolated
from flow import curvature, curvature_jacobian
from mesh import build
from packing_geometry import (
    HingeData,
    Packing,
    develop_hinge,
    discriminant,
    dual_distance,
    triangle_geometry,
)

logger = logging.getLogger("packflow.selftest")

Suite = Callable[[np.random.Generator, int], Dict[str, Any]]

# two-vertex torus used by the Jacobian suite
TORUS2_FACES = [[0, 1, 1], [0, 1, 0], [1, 0, 0], [1, 0, 1]]
TORUS2_TWINS = [4, 11, 3, 2, 0, 7, 10, 5, 9, 8, 6, 1]


def _result(name: str, samples: int, residual: float, threshold: float) -> Dict[str, Any]:
    return {
        "name": name,
        "samples": samples,
        "max_residual": float(residual),
        "threshold": threshold,
        "passed": bool(residual < threshold),
    }


def _random_hinge(rng: np.random.Generator, lo: float = 1.2, hi: float = 3.0) -> HingeData:
    a, b, c, d, e = rng.uniform(lo, hi, 5)
    p, q, r, s = rng.uniform(0.7, 1.4, 4)
    return HingeData(a=a, b=b, c=c, d=d, e=e, p=p, q=q, r=r, s=s)


# ─── Suites ──────────────────────────────────────────────────────────

def ptolemy_suite(rng, samples):
    worst = 0.0
    for _ in range(samples):
        a, b, c, d, e = rng.uniform(1.01, 50.0, 5)
        f = ptolemy_f(a, b, c, d, e)
        scale = max(a, b, c, d, e, f) ** 4
        worst = max(worst, abs(ptolemy_residual(a, b, c, d, e, f)) / scale)
    return _result("ptolemy_residual", samples, worst, 1e-10)


def delta_suite(rng, samples):
    worst = 0.0
    for _ in range(samples):
        a, b, c, d, e = rng.uniform(1.01, 50.0, 5)
        f = ptolemy_f(a, b, c, d, e)
        s_abf, s_cdf = delta_propagation(a, b, c, d, e)
        for got, want in ((s_abf, math.sqrt(discriminant(a, b, f))), (s_cdf, math.sqrt(discriminant(c, d, f)))):
            worst = max(worst, abs(got - want) / want)
    return _result("delta_propagation", samples, worst, 1e-10)


def orthogonal_circle_suite(rng, samples):
    worst, used = 0.0, 0
    for _ in range(samples):
        a, b, c = rng.uniform(1.2, 3.0, 3)
        ri, rj, rk = rng.uniform(0.7, 1.4, 3)
        try:
            geo = triangle_geometry(a, b, c, ri, rj, rk)
        except TriangleInequalityViolated:
            continue
        used += 1
        lhs = ri * rj * rk * math.sqrt(discriminant(a, b, c))
        worst = max(worst, abs(lhs - 2.0 * geo.ortho_radius * geo.area) / lhs)
    return _result("orthogonal_circle", used, worst, 1e-9)


def ushijima_suite(rng, samples):
    disagreements = 0
    for _ in range(samples):
        a, b, c, d, e = rng.uniform(1.2, 10.0, 5)
        u1, u2, _, u4 = ushijima_signs(a, b, c, d, e)
        signs = {int(np.sign(v)) for v in (u1, u2, u4) if abs(v) > 1e-9}
        if len(signs) > 1:
            disagreements += 1
    return _result("ushijima_sign_disagreements", samples, disagreements, 0.5)


def flip_involution_suite(rng, samples):
    worst = 0.0
    for _ in range(samples):
        a, b, c, d, e = rng.uniform(1.5, 5.0, 5)
        f = ptolemy_f(a, b, c, d, e)
        # the flipped hinge sees the old sides rotated by one
        back = ptolemy_f(b, c, d, a, f)
        worst = max(worst, abs(back - e) / e)
    return _result("flip_involution", samples, worst, 1e-9)


def _developed_hinges(rng, samples):
    for _ in range(samples):
        h = _random_hinge(rng)
        try:
            yield h, develop_hinge(h)
        except TriangleInequalityViolated:
            continue


def predicate_suite(rng, samples):
    """Delaunay slack sign against the developed power centers."""
    disagreements, used = 0, 0
    for h, dev in _developed_hinges(rng, samples):
        used += 1
        slack = is_local_delaunay(h)
        if abs(slack) > 1e-9 and np.sign(slack) != np.sign(dev.h_k + dev.h_l):
            disagreements += 1
    return _result("predicate_vs_development", used, disagreements, 0.5)


def dual_distance_suite(rng, samples):
    worst, used = 0.0, 0
    for h, dev in _developed_hinges(rng, samples):
        used += 1
        closed = dual_distance(dev.rho_k, h.e, h.a, h.d, h.p, h.q, h.s)
        worst = max(worst, abs(closed - dev.h_k) / max(dev.rho_k, 1.0))
    return _result("dual_distance_closed_form", used, worst, 1e-8)


def dF_df_suite(rng, samples):
    worst, used = 0.0, 0
    for _ in range(samples):
        a, b, c, d, e = rng.uniform(1.5, 5.0, 5)
        q, r, s = rng.uniform(0.5, 2.0, 3)
        try:
            p0 = delaunay_equality_p0(q, r, s, a, b, c, d, e)
            # finite differences lose accuracy next to a collapsing face
            if p0 < 1.1 * degenerate_p0(q, s, a, d, e):
                continue
            worst = max(worst, dF_df_check(q, r, s, a, b, c, d, e, step=1e-5, p=p0))
        except (NonpositiveDenominator, TriangleInequalityViolated):
            continue
        used += 1
    return _result("dF_equals_df", used, worst, 1e-4)


def jacobian_suite(rng, samples):
    tri = build(2, TORUS2_FACES, TORUS2_TWINS)
    worst, used = 0.0, 0
    step = 1e-6
    for _ in range(min(samples, 50)):
        pk = Packing(tri, rng.uniform(1.2, 3.0, tri.num_edges), rng.uniform(0.7, 1.4, 2))
        try:
            pk, _ = delaunayize(pk)
            J = curvature_jacobian(pk).toarray()
            fd = np.empty_like(J)
            for v in range(tri.num_vertices):
                du = np.zeros(tri.num_vertices)
                du[v] = step
                plus = curvature(pk.with_log_radii(pk.u + du)).curvatures
                minus = curvature(pk.with_log_radii(pk.u - du)).curvatures
                fd[:, v] = (plus - minus) / (2.0 * step)
        except TriangleInequalityViolated:
            continue
        used += 1
        worst = max(worst, np.max(np.abs(J - fd)) / max(np.max(np.abs(J)), 1e-12))
    return _result("jacobian_finite_difference", used, worst, 1e-5)


SUITES: List[Suite] = [
    ptolemy_suite,
    delta_suite,
    orthogonal_circle_suite,
    ushijima_suite,
    flip_involution_suite,
    predicate_suite,
    dual_distance_suite,
    dF_df_suite,
    jacobian_suite,
]


class SelfTester:
    """Runs the identity suites and keeps pass/fail counts."""

    def __init__(self):
        self.checks_run = 0
        self.checks_passed = 0
        self.checks_failed = 0

    def run(self, samples: int = 200, seed: int = 0) -> Dict[str, Any]:
        rng = np.random.default_rng(seed)
        results = []
        for suite in SUITES:
            res = suite(rng, samples)
            self.checks_run += 1
            if res["passed"]:
                self.checks_passed += 1
            else:
                self.checks_failed += 1
                logger.warning("%s failed: %.3e >= %.1e", res["name"], res["max_residual"], res["threshold"])
            results.append(res)
            logger.debug("%s: %d samples, max residual %.3e", res["name"], res["samples"], res["max_residual"])

        passed = all(r["passed"] for r in results)
        logger.info("selftest %s (%d suites, seed %d)", "passed" if passed else "FAILED", len(results), seed)
        return {"seed": seed, "samples": samples, "passed": passed, "suites": results, "stats": self.get_stats()}

    def get_stats(self) -> Dict[str, Any]:
        return {
            "checks_run": self.checks_run,
            "checks_passed": self.checks_passed,
            "checks_failed": self.checks_failed,
            "pass_rate": round(self.checks_passed / max(self.checks_run, 1), 2),
        }


selftester = SelfTester()

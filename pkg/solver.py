"""
Service layer shared by the CLI and the API.

Each command loads a ProblemFile, runs one operation, builds its report
and, when enabled, records the run.
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from config import RECORD_RUNS
from db import digest, init_db, record_run
from delaunay import delaunayize, edge_slacks, is_delaunay
from errors import PackFlowError
from flow import FlowConfig, FlowTrace, curvature, run_flow, uniform_target, validate_target
from hyperbolic import canonical_form, equivalent
from schemas import (
    CanonicalReport,
    CurvatureReport,
    DelaunayReport,
    EquivalenceReport,
    FlipLogEntry,
    FlowReport,
    ProblemFile,
    SelfTestReport,
    TargetIn,
    ValidationReport,
    finite_or_none,
    load_problem,
    packing_to_problem,
    trace_to_steps,
)
from selftest import selftester

logger = logging.getLogger("packflow.solver")


class PackFlowSolver:
    """Runs commands on problem files and keeps per-process counters."""

    def __init__(self, record: bool = RECORD_RUNS):
        self.record = record
        self.runs_total = 0
        self.runs_failed = 0
        self.flips_total = 0
        self._db_ready = False

    # ─── Commands ────────────────────────────────────────────────────

    def validate(self, pf: ProblemFile) -> ValidationReport:
        def op():
            pk = load_problem(pf).packing
            tri = pk.tri
            report = ValidationReport(
                num_vertices=tri.num_vertices,
                num_edges=tri.num_edges,
                num_faces=tri.num_faces,
                euler_characteristic=tri.euler_characteristic,
                genus=tri.genus,
                slacks=finite_or_none(edge_slacks(pk)),
                delaunay=is_delaunay(pk),
            )
            return report, {"num_vertices": tri.num_vertices, "num_edges": tri.num_edges,
                            "euler_characteristic": tri.euler_characteristic}
        return self._run("validate", pf, op)

    def curvature(self, pf: ProblemFile) -> CurvatureReport:
        def op():
            pk = load_problem(pf).packing
            state = curvature(pk)
            report = CurvatureReport(
                curvatures=state.curvatures.tolist(),
                cone_angles=state.cone_angles.tolist(),
                gauss_bonnet_residual=state.gauss_bonnet_residual,
            )
            return report, {"max_error": abs(state.gauss_bonnet_residual)}
        return self._run("curvature", pf, op)

    def delaunayize(self, pf: ProblemFile, tol: Optional[float] = None,
                    flip_budget: Optional[int] = None) -> DelaunayReport:
        def op():
            problem = load_problem(pf)
            pk, log = delaunayize(problem.packing, tol, flip_budget)
            self.flips_total += len(log)
            out = packing_to_problem(pk, problem.coords, pf.target, pf.config)
            report = DelaunayReport(flips=[FlipLogEntry(**r.to_dict()) for r in log], problem=out)
            return report, {"flips": len(log), "num_edges": pk.tri.num_edges}
        return self._run("delaunayize", pf, op)

    def flow(self, pf: ProblemFile, method: Optional[str] = None, tol: Optional[float] = None,
             max_iters: Optional[int] = None, flip_budget: Optional[int] = None,
             target: Optional[Any] = None) -> Tuple[FlowReport, FlowTrace]:
        """Run the Ricci flow; CLI flags override the file's config section."""
        trace_box: Dict[str, FlowTrace] = {}

        def op():
            problem = load_problem(pf)
            pk = problem.packing
            cfg = FlowConfig().override(**problem.overrides).override(
                method=method, tol=tol, max_iters=max_iters, flip_budget=flip_budget)
            K_bar = self._target(pk, problem.target, target)
            final, trace = run_flow(pk, K_bar, cfg)
            trace_box["trace"] = trace
            self.flips_total += trace.total_flips
            explicit = target is not None and not isinstance(target, str)
            target_in = TargetIn(curvature=K_bar.tolist()) if explicit else pf.target
            report = FlowReport(
                method=trace.method,
                converged=trace.converged,
                iterations=trace.iterations,
                total_flips=trace.total_flips,
                max_err=trace.steps[-1].max_err,
                trace=trace_to_steps(trace),
                problem=packing_to_problem(final, problem.coords, target_in, pf.config),
            )
            return report, {"iterations": trace.iterations, "flips": trace.total_flips,
                            "max_error": trace.steps[-1].max_err, "num_edges": final.tri.num_edges,
                            "trace_rows": trace.to_rows()}

        report = self._run("flow", pf, op)
        return report, trace_box["trace"]

    def canonical(self, pf: ProblemFile) -> CanonicalReport:
        def op():
            problem = load_problem(pf)
            cfg = FlowConfig().override(**problem.overrides)
            form = canonical_form(problem.packing, cfg=cfg)
            out = packing_to_problem(form.to_packing(), problem.coords)
            return CanonicalReport(problem=out), {"num_edges": form.tri.num_edges}
        return self._run("canonical", pf, op)

    def equiv(self, first: ProblemFile, second: ProblemFile, tol: float = 1e-8) -> EquivalenceReport:
        def op():
            pk1 = load_problem(first).packing
            pk2 = load_problem(second).packing
            same = equivalent(pk1, pk2, tol)
            return EquivalenceReport(equivalent=same, tol=tol), {"message": "equivalent" if same else "distinct"}
        return self._run("equiv", first, op, extra=second.model_dump_json())

    def selftest(self, samples: int = 200, seed: int = 0) -> SelfTestReport:
        def op():
            result = selftester.run(samples=samples, seed=seed)
            worst = max(s["max_residual"] for s in result["suites"])
            return SelfTestReport(**result), {"max_error": worst,
                                              "message": "passed" if result["passed"] else "failed"}
        return self._run("selftest", None, op, extra=f"{samples}:{seed}")

    # ─── Helpers ─────────────────────────────────────────────────────

    @staticmethod
    def _target(pk, from_file, override) -> np.ndarray:
        if override is not None and not isinstance(override, str):
            return validate_target(pk.tri, override)
        if override == "uniform" or from_file is None:
            return uniform_target(pk.tri)
        return from_file

    def _run(self, command: str, pf: Optional[ProblemFile], op, extra: str = ""):
        self.runs_total += 1
        payload = (pf.model_dump_json() if pf is not None else "") + extra
        try:
            report, fields = op()
        except PackFlowError as e:
            self.runs_failed += 1
            logger.info("%s failed: %s: %s", command, type(e).__name__, e.message)
            self._record(command, type(e).__name__, payload, {"message": e.message})
            raise
        self._record(command, "ok", payload, fields)
        return report

    def _record(self, command: str, status: str, payload: str, fields: Dict[str, Any]):
        if not self.record:
            return
        if not self._db_ready:
            init_db()
            self._db_ready = True
        fields = dict(fields)
        trace_rows = fields.pop("trace_rows", None)
        run_id = record_run(command, status, digest(payload), trace_rows=trace_rows, **fields)
        logger.debug("recorded run %s (%s, %s)", run_id, command, status)

    def get_stats(self) -> Dict[str, Any]:
        return {
            "runs_total": self.runs_total,
            "runs_failed": self.runs_failed,
            "flips_total": self.flips_total,
            "recording": self.record,
        }


solver = PackFlowSolver()

"""End-to-end scenario runs for the log-det method and the MPM baseline."""

from __future__ import annotations

import contextlib
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .array_model import (
    ElementLayout,
    Excitation,
    PatternMetrics,
    PatternSampleGrid,
    dolph_chebyshev_taper,
    evaluate_pattern,
    pattern_metrics,
)
from .completion import LogDetState, run_logdet
from .config import ScenarioConfig
from .errors import PencilError, SynthError
from .pencil import SparseArraySolution, baseline_mpm, reconstruct_pattern, solve_pencil
from .sampling import (
    ConstraintSpec,
    RegionPartition,
    SampleSet,
    build_constraints,
    partition_mainlobe,
    sample_reference,
)
from .solvers import ClarabelSolver, ScsSolver

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    config: ScenarioConfig
    reference: SampleSet
    partition: RegionPartition
    constraints: ConstraintSpec
    grid: PatternSampleGrid
    reference_pattern: np.ndarray
    logdet: SparseArraySolution | None = None
    logdet_state: LogDetState | None = None
    logdet_pattern: np.ndarray | None = None
    mpm: SparseArraySolution | None = None
    mpm_pattern: np.ndarray | None = None
    metrics: dict[str, PatternMetrics] = field(default_factory=dict)
    slack: dict[str, float] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def rank_trace(self) -> list[int]:
        return self.logdet_state.rank_trace if self.logdet_state else []

    @property
    def surrogate_trace(self) -> list[float]:
        return self.logdet_state.surrogate_trace if self.logdet_state else []

    @property
    def final_rank(self) -> int | None:
        return self.logdet_state.rank if self.logdet_state else None


def reference_array(config: ScenarioConfig) -> tuple[ElementLayout, Excitation]:
    layout = ElementLayout.uniform(config.elements, config.spacing_wl)
    if config.taper.type == "chebyshev":
        w = dolph_chebyshev_taper(config.elements, config.taper.sll_db)
    else:
        w = np.ones(config.elements)
    return layout, Excitation(w)


def make_solver(config: ScenarioConfig):
    s = config.solver
    if s.name == "clarabel":
        return ClarabelSolver()
    return ScsSolver(eps=s.eps, max_iters=s.max_iters)


@contextlib.contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except SynthError as exc:
        exc.stage = name
        if not str(exc).startswith(f"[{name}]"):
            exc.args = (f"[{name}] {exc}",) + exc.args[1:]
        raise
    finally:
        timings[name] = time.perf_counter() - t0


def band_levels(grid: PatternSampleGrid, pattern: np.ndarray, notches) -> list[float]:
    """Peak level (dB re. the pattern maximum) inside each notch band."""
    mag = np.abs(pattern)
    out = []
    for n in notches:
        m = n.covers(grid.u)
        out.append(float(20 * np.log10(mag[m].max() / mag.max())) if m.any() else float("nan"))
    return out


def run_scenario(config: ScenarioConfig, callback=None) -> RunReport:
    timings: dict[str, float] = {}
    spec = config.hankel_spec
    with _stage("sample", timings):
        layout, exc = reference_array(config)
        samples = sample_reference(layout, exc, config.N)
    with _stage("partition", timings):
        part = partition_mainlobe(samples, config.sidelobe_db)
    with _stage("constraints", timings):
        cons = build_constraints(
            samples, part, config.match_offsets, config.eps_rel,
            config.notches, config.sidelobe_db,
        )
    grid = PatternSampleGrid.uniform(config.pattern_points)
    ref_pattern = evaluate_pattern(layout, exc, grid)
    report = RunReport(
        config=config, reference=samples, partition=part, constraints=cons,
        grid=grid, reference_pattern=ref_pattern, timings=timings,
    )
    report.metrics["reference"] = pattern_metrics(grid, ref_pattern)

    if config.method in ("logdet", "both"):
        with _stage("logdet", timings):
            state = run_logdet(
                samples, spec, cons, K=config.iterations, delta_rel=config.delta_rel,
                solver=make_solver(config), tau=config.rank_tol,
                early_stop=config.early_stop, callback=callback,
                warm_start=config.solver.warm_start,
            )
        with _stage("pencil", timings):
            if state.rank > min(spec.rows, spec.cols - 1):
                raise PencilError(
                    f"completed Hankel matrix has rank {state.rank}, beyond what a pencil of"
                    f" width {spec.cols - 1} can resolve; use more samples or tighter constraints"
                )
            completed = samples.with_values(state.x_R)
            sol = solve_pencil(completed, spec, state.rank)
        report.logdet, report.logdet_state = sol, state
        report.logdet_pattern = reconstruct_pattern(sol, grid)
        report.metrics["logdet"] = pattern_metrics(grid, report.logdet_pattern)
        report.slack = state.residuals[-1] if state.residuals else {}

    if config.method in ("mpm", "both"):
        with _stage("mpm", timings):
            target = config.target_rank
            if target is None and report.logdet is not None:
                target = report.logdet.R
            report.mpm = baseline_mpm(samples, spec, target, config.mpm_sigma_ratio)
        report.mpm_pattern = reconstruct_pattern(report.mpm, grid)
        report.metrics["mpm"] = pattern_metrics(grid, report.mpm_pattern)
    return report

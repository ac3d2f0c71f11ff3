"""Backend-neutral linear conic programs and the solver backends that run them.

A :class:`ConicProblem` minimises ``c @ x`` subject to

* ``eq_A @ x == eq_b``
* ``soc_A @ x + soc_b`` lying in a product of second-order cones
  ``{(t, v): ||v|| <= t}`` of sizes ``soc_dims``
* the symmetric matrix whose lower triangle (column-major, unscaled) is
  ``psd_A @ x + psd_b`` being positive semidefinite.

Backends translate to their own triangle ordering and scaling.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

STATUSES = ("optimal", "near_optimal", "infeasible", "unbounded", "numerical_failure")


@dataclass(frozen=True)
class ConicProblem:
    c: np.ndarray
    soc_A: sp.csr_matrix
    soc_b: np.ndarray
    soc_dims: tuple[int, ...]
    psd_A: sp.csr_matrix
    psd_b: np.ndarray
    psd_dim: int
    eq_A: sp.csr_matrix | None = None
    eq_b: np.ndarray | None = None

    @property
    def n_vars(self) -> int:
        return self.c.size

    def psd_matrix(self, x: np.ndarray) -> np.ndarray:
        """Assemble the full symmetric PSD-constrained matrix at ``x``."""
        vals = self.psd_A @ x + self.psd_b
        r, c = lower_tri_colmajor(self.psd_dim)
        out = np.zeros((self.psd_dim, self.psd_dim))
        out[r, c] = vals
        out[c, r] = vals
        return out

    def residuals(self, x: np.ndarray) -> dict[str, float]:
        """Largest violation of each constraint family at ``x``."""
        res = {}
        v = self.soc_A @ x + self.soc_b
        worst, start = 0.0, 0
        for d in self.soc_dims:
            blk = v[start:start + d]
            worst = max(worst, np.linalg.norm(blk[1:]) - blk[0])
            start += d
        res["soc"] = float(max(worst, 0.0))
        lam = np.linalg.eigvalsh(self.psd_matrix(x))
        res["psd"] = float(max(-lam[0], 0.0))
        res["psd_min_eig"] = float(lam[0])
        if self.eq_A is not None:
            res["eq"] = float(np.abs(self.eq_A @ x - self.eq_b).max(initial=0.0))
        return res


@dataclass
class ConicSolution:
    x: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    iterations: int = 0
    solve_time: float = 0.0
    warm: Any = field(default=None, repr=False)


class SolverInterface(Protocol):
    name: str

    def solve(self, problem: ConicProblem, warm: Any = None) -> ConicSolution: ...


def lower_tri_colmajor(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the lower triangle, column by column."""
    c, r = np.triu_indices(n)
    order = np.lexsort((r, c))
    return r[order], c[order]


def _svec_scale(r: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.where(r == c, 1.0, np.sqrt(2.0))


class ScsSolver:
    """First-order splitting conic solver (SCS).

    Keeps the factorised problem between calls that share constraint data, so
    a sequence of solves differing only in the objective re-uses the
    factorisation and warm-starts from the previous iterate.
    """

    name = "scs"

    def __init__(self, eps: float = 1e-6, max_iters: int = 100_000, **settings):
        self.settings = dict(eps_abs=eps, eps_rel=eps, max_iters=max_iters, verbose=False)
        self.settings.update(settings)
        self._key = None
        self._solver = None

    def _data(self, problem: ConicProblem):
        r, c = lower_tri_colmajor(problem.psd_dim)
        scale = _svec_scale(r, c)
        blocks, rhs = [], []
        z = 0
        if problem.eq_A is not None:
            blocks.append(problem.eq_A)
            rhs.append(problem.eq_b)
            z = problem.eq_A.shape[0]
        blocks += [-problem.soc_A, -sp.diags(scale) @ problem.psd_A]
        rhs += [problem.soc_b, scale * problem.psd_b]
        A = sp.vstack(blocks).tocsc()
        b = np.concatenate(rhs)
        cone = dict(z=z, q=list(problem.soc_dims), s=[problem.psd_dim])
        return A, b, cone

    def solve(self, problem: ConicProblem, warm: Any = None) -> ConicSolution:
        import scs

        key = (id(problem.soc_A), id(problem.psd_A), id(problem.eq_A),
               problem.soc_b.tobytes(), problem.psd_b.tobytes())
        t0 = time.perf_counter()
        if self._solver is None or key != self._key:
            A, b, cone = self._data(problem)
            self._solver = scs.SCS(dict(A=A, b=b, c=problem.c), cone, **self.settings)
            self._key = key
            self._refs = (problem.soc_A, problem.psd_A, problem.eq_A)
        else:
            self._solver.update(c=problem.c)
        if warm is not None:
            sol = self._solver.solve(warm_start=True, x=warm[0], y=warm[1], s=warm[2])
        else:
            sol = self._solver.solve(warm_start=False)
        info = sol["info"]
        status = {
            "solved": "optimal",
            "solved_inaccurate": "near_optimal",
            "infeasible": "infeasible",
            "infeasible_inaccurate": "infeasible",
            "unbounded": "unbounded",
            "unbounded_inaccurate": "unbounded",
        }.get(info["status"], "numerical_failure")
        return ConicSolution(
            x=np.asarray(sol["x"]),
            status=status,
            primal_residual=float(info["res_pri"]),
            dual_residual=float(info["res_dual"]),
            iterations=int(info["iter"]),
            solve_time=time.perf_counter() - t0,
            warm=(sol["x"], sol["y"], sol["s"]),
        )


class ClarabelSolver:
    """Interior-point conic solver (Clarabel).

    Accurate, but its PSD scaling block is dense in the triangle size, so it
    is only practical for small Hankel matrices (roughly ``psd_dim <= 60``).
    """

    name = "clarabel"

    def __init__(self, **settings):
        self.settings = settings

    def solve(self, problem: ConicProblem, warm: Any = None) -> ConicSolution:
        import clarabel

        n = problem.psd_dim
        r, c = lower_tri_colmajor(n)
        # Clarabel stores the upper triangle column-major, i.e. the lower
        # triangle row-major.
        order = np.lexsort((c, r))
        scale = _svec_scale(r, c)[order]
        psd_A = problem.psd_A[order]
        psd_b = problem.psd_b[order]

        blocks, rhs, cones = [], [], []
        if problem.eq_A is not None and problem.eq_A.shape[0]:
            blocks.append(problem.eq_A)
            rhs.append(problem.eq_b)
            cones.append(clarabel.ZeroConeT(problem.eq_A.shape[0]))
        blocks += [-problem.soc_A, -sp.diags(scale) @ psd_A]
        rhs += [problem.soc_b, scale * psd_b]
        cones += [clarabel.SecondOrderConeT(d) for d in problem.soc_dims]
        cones.append(clarabel.PSDTriangleConeT(n))
        A = sp.vstack(blocks).tocsc()
        b = np.concatenate(rhs)
        P = sp.csc_matrix((problem.n_vars, problem.n_vars))

        settings = clarabel.DefaultSettings()
        settings.verbose = False
        for k, v in self.settings.items():
            setattr(settings, k, v)
        t0 = time.perf_counter()
        sol = clarabel.DefaultSolver(P, problem.c, A, b, cones, settings).solve()
        status = {
            "Solved": "optimal",
            "AlmostSolved": "near_optimal",
            "PrimalInfeasible": "infeasible",
            "AlmostPrimalInfeasible": "infeasible",
            "DualInfeasible": "unbounded",
            "AlmostDualInfeasible": "unbounded",
        }.get(str(sol.status).split(".")[-1], "numerical_failure")
        return ConicSolution(
            x=np.asarray(sol.x),
            status=status,
            primal_residual=float(getattr(sol, "r_prim", np.nan)),
            dual_residual=float(getattr(sol, "r_dual", np.nan)),
            iterations=int(sol.iterations),
            solve_time=time.perf_counter() - t0,
        )


def default_solver(psd_dim: int) -> SolverInterface:
    """Clarabel for small PSD blocks, SCS otherwise."""
    if psd_dim <= 60:
        return ClarabelSolver()
    return ScsSolver()

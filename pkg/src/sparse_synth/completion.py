"""Hankel-structured low-rank completion by the iterative log-det heuristic.

Each iteration solves

    minimise    Tr(W_P P) + Tr(W_Q Q)
    subject to  [[P, Y], [Y^H, Q]] >= 0,   Y = hankelize(x_R, L)
                |x_R(n) - x(n)| <= eps      on the match set
                |x_R(n)| <= rho(n)          on the sidelobe set

with ``W_P = (P_k + delta I)^-1`` and ``W_Q = (Q_k + delta I)^-1`` from the
previous iterate. The complex Hermitian block is handed to the conic solver
through its real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleError, SolverError
from .hankel import DEFAULT_RANK_TOL, HankelSpec, hankel_indices, hankelize, numerical_rank
from .sampling import ConstraintSpec, SampleSet
from .solvers import ConicProblem, ConicSolution, SolverInterface, default_solver, lower_tri_colmajor

logger = logging.getLogger(__name__)

# relative surrogate increase tolerated before a solver step is rejected
STEP_TOL = 1e-9


@dataclass
class LogDetState:
    P: np.ndarray
    Q: np.ndarray
    x_R: np.ndarray
    k: int
    delta: float
    rank_trace: list[int] = field(default_factory=list)
    surrogate_trace: list[float] = field(default_factory=list)
    singular_values: np.ndarray | None = None
    statuses: list[str] = field(default_factory=list)
    residuals: list[dict] = field(default_factory=list)
    accepted: list[bool] = field(default_factory=list)

    @property
    def rank(self) -> int:
        return self.rank_trace[-1]


def hermitian_real_embedding(H: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("embedding needs a square matrix")
    if not np.allclose(H, H.conj().T, atol=atol, rtol=0):
        raise ValueError("matrix is not Hermitian")
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def logdet_surrogate(P: np.ndarray, Q: np.ndarray, delta: float) -> float:
    """log det(diag(P, Q) + delta I)."""
    _, a = np.linalg.slogdet(P + delta * np.eye(P.shape[0]))
    _, b = np.linalg.slogdet(Q + delta * np.eye(Q.shape[0]))
    return float(a + b)


class _Layout:
    """Positions of the real decision variables.

    ``[Re x_R | Im x_R | P params | Q params]`` where an ``n x n`` Hermitian
    block is stored as its upper-triangle real parts followed by its
    strictly-upper imaginary parts (``n**2`` reals).
    """

    def __init__(self, spec: HankelSpec):
        self.spec = spec
        S = spec.length
        self.xr = np.arange(S)
        self.xi = S + np.arange(S)
        self.p_off = 2 * S
        self.q_off = self.p_off + spec.rows ** 2
        self.n = self.q_off + spec.cols ** 2

    @staticmethod
    def herm_index(n: int, off: int):
        """(real index matrix, imag index matrix, imag sign matrix) for an n x n block."""
        iu, ju = np.triu_indices(n)
        re = np.empty((n, n), dtype=int)
        re[iu, ju] = off + np.arange(iu.size)
        re[ju, iu] = re[iu, ju]
        iu1, ju1 = np.triu_indices(n, 1)
        im = np.full((n, n), -1, dtype=int)
        sign = np.zeros((n, n))
        base = off + iu.size
        im[iu1, ju1] = base + np.arange(iu1.size)
        im[ju1, iu1] = im[iu1, ju1]
        sign[iu1, ju1] = 1.0
        sign[ju1, iu1] = -1.0
        return re, im, sign

    def unpack_herm(self, z: np.ndarray, n: int, off: int) -> np.ndarray:
        re, im, sign = self.herm_index(n, off)
        out = z[re] + 1j * sign * np.where(im >= 0, z[np.maximum(im, 0)], 0.0)
        return out

    def pack_weight(self, W: np.ndarray, off: int) -> np.ndarray:
        """Coefficients ``c`` with ``c @ params == Re Tr(W P)``."""
        n = W.shape[0]
        iu, ju = np.triu_indices(n)
        iu1, ju1 = np.triu_indices(n, 1)
        c_re = np.where(iu == ju, 1.0, 2.0) * W.real[iu, ju]
        c_im = 2.0 * W.imag[iu1, ju1]
        return np.concatenate([c_re, c_im])


@dataclass(frozen=True)
class _Structure:
    """Constraint data shared by every iteration of one run (normalised units)."""

    layout: _Layout
    soc_A: sp.csr_matrix
    soc_b: np.ndarray
    soc_dims: tuple[int, ...]
    psd_A: sp.csr_matrix
    psd_b: np.ndarray
    psd_dim: int
    scale: float
    n_match: int


@dataclass(frozen=True)
class ConicSubproblem:
    W_P: np.ndarray
    W_Q: np.ndarray
    problem: ConicProblem
    structure: _Structure = field(repr=False)

    @property
    def block_dim(self) -> int:
        return self.W_P.shape[0] + self.W_Q.shape[0]

    @property
    def n_match(self) -> int:
        return self.structure.n_match

    @property
    def n_bound(self) -> int:
        return len(self.structure.soc_dims) - self.structure.n_match

    def unpack(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(P, Q, x_R) in the caller's units from a solver vector."""
        lay, s = self.structure.layout, self.structure.scale
        spec = lay.spec
        x = s * (z[lay.xr] + 1j * z[lay.xi])
        P = s * lay.unpack_herm(z, spec.rows, lay.p_off)
        Q = s * lay.unpack_herm(z, spec.cols, lay.q_off)
        return 0.5 * (P + P.conj().T), 0.5 * (Q + Q.conj().T), x


def _block_map(lay: _Layout) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse maps from variables to ``vec(Re H)`` and ``vec(Im H)`` (row-major),
    where ``H = [[P, Y], [Y^H, Q]]``."""
    spec = lay.spec
    R, C = spec.rows, spec.cols
    D = R + C
    rows_re, cols_re, vals_re = [], [], []
    rows_im, cols_im, vals_im = [], [], []

    def herm(n, off, at):
        re, im, sign = lay.herm_index(n, off)
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        flat = (ii + at) * D + (jj + at)
        rows_re.append(flat.ravel())
        cols_re.append(re.ravel())
        vals_re.append(np.ones(n * n))
        mask = im >= 0
        rows_im.append(flat[mask])
        cols_im.append(im[mask])
        vals_im.append(sign[mask])

    herm(R, lay.p_off, 0)
    herm(C, lay.q_off, R)
    idx = hankel_indices(spec.length, spec.L)
    p, q = np.meshgrid(np.arange(R), np.arange(C), indexing="ij")
    upper = p * D + (R + q)
    lower = (R + q) * D + p
    for flat, sgn in ((upper, 1.0), (lower, -1.0)):
        rows_re.append(flat.ravel())
        cols_re.append(lay.xr[idx].ravel())
        vals_re.append(np.ones(idx.size))
        rows_im.append(flat.ravel())
        cols_im.append(lay.xi[idx].ravel())
        vals_im.append(np.full(idx.size, sgn))

    def assemble(r, c, v):
        return sp.csr_matrix(
            (np.concatenate(v), (np.concatenate(r), np.concatenate(c))),
            shape=(D * D, lay.n),
        )

    return assemble(rows_re, cols_re, vals_re), assemble(rows_im, cols_im, vals_im)


def _embedding_map(lay: _Layout) -> sp.csr_matrix:
    """Map from variables to the lower triangle of the real embedding of H."""
    D = lay.spec.rows + lay.spec.cols
    Hre, Him = _block_map(lay)
    r, c = lower_tri_colmajor(2 * D)
    top = (r < D) & (c < D)
    bot = (r >= D) & (c >= D)
    mixed = (r >= D) & (c < D)
    sel_re = np.where(top, r * D + c, np.where(bot, (r - D) * D + (c - D), 0))
    sel_im = np.where(mixed, (r - D) * D + c, 0)
    A_re = sp.diags((top | bot).astype(float)) @ Hre[sel_re]
    A_im = sp.diags(mixed.astype(float)) @ Him[sel_im]
    A = (A_re + A_im).tocsr()
    A.eliminate_zeros()
    return A


def _build_structure(
    constraints: ConstraintSpec, samples: SampleSet, spec: HankelSpec
) -> _Structure:
    lay = _Layout(spec)
    scale = samples.peak
    N = samples.N
    rows, cols, vals, b = [], [], [], []
    r0 = 0
    dims = []
    for n, target in zip(constraints.match_n, constraints.match_target):
        i = n + N
        rows += [r0 + 1, r0 + 2]
        cols += [lay.xr[i], lay.xi[i]]
        vals += [1.0, 1.0]
        b += [constraints.eps / scale, -target.real / scale, -target.imag / scale]
        dims.append(3)
        r0 += 3
    for n, rho in zip(constraints.bound_n, constraints.bound_rho):
        i = n + N
        rows += [r0 + 1, r0 + 2]
        cols += [lay.xr[i], lay.xi[i]]
        vals += [1.0, 1.0]
        b += [rho / scale, 0.0, 0.0]
        dims.append(3)
        r0 += 3
    soc_A = sp.csr_matrix((vals, (rows, cols)), shape=(r0, lay.n))
    psd_A = _embedding_map(lay)
    return _Structure(
        layout=lay,
        soc_A=soc_A,
        soc_b=np.array(b, dtype=float),
        soc_dims=tuple(dims),
        psd_A=psd_A,
        psd_b=np.zeros(psd_A.shape[0]),
        psd_dim=2 * (spec.rows + spec.cols),
        scale=scale,
        n_match=len(constraints.match_n),
    )


def init_state(samples: SampleSet, spec: HankelSpec, delta: float = 0.0,
               tau: float = DEFAULT_RANK_TOL) -> LogDetState:
    if samples.N != spec.N:
        raise ValueError("Hankel spec and sample set disagree on N")
    P = np.eye(spec.rows, dtype=complex)
    Q = np.eye(spec.cols, dtype=complex)
    rank, sv = numerical_rank(hankelize(samples.x, spec.L), tau)
    st = LogDetState(P=P, Q=Q, x_R=samples.x.copy(), k=0, delta=delta,
                     rank_trace=[rank], singular_values=sv)
    st.surrogate_trace.append(logdet_surrogate(P, Q, delta) if delta > 0 else float("nan"))
    return st


def _herm_sqrt(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, V = np.linalg.eigh(A)
    lam = np.maximum(lam, 0.0)
    root = np.sqrt(lam)
    return (V * root) @ V.conj().T, (V / root) @ V.conj().T


def optimal_blocks(Y: np.ndarray, W_P: np.ndarray, W_Q: np.ndarray):
    """Exact minimiser of Tr(W_P P) + Tr(W_Q Q) over P, Q with the block PSD.

    With ``A^(1/2) Y B^(1/2) = U S V^H`` the optimum is
    ``P = A^(-1/2) U S U^H A^(-1/2)`` and ``Q = B^(-1/2) V S V^H B^(-1/2)``;
    its value is twice the weighted nuclear norm ``sum(S)``.
    """
    a, a_inv = _herm_sqrt(W_P)
    b, b_inv = _herm_sqrt(W_Q)
    U, S, Vh = np.linalg.svd(a @ Y @ b, full_matrices=False)
    P = a_inv @ (U * S) @ U.conj().T @ a_inv
    Q = b_inv @ (Vh.conj().T * S) @ Vh @ b_inv
    return 0.5 * (P + P.conj().T), 0.5 * (Q + Q.conj().T), 2.0 * float(S.sum())


def _hermitian_inverse(A: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(A)
    resid = np.abs(A @ inv - np.eye(A.shape[0])).max()
    if resid > 1e-6:
        raise SolverError(f"weight inversion residual {resid:.2e}")
    return 0.5 * (inv + inv.conj().T)


def build_subproblem(
    state: LogDetState,
    constraints: ConstraintSpec,
    samples: SampleSet,
    spec: HankelSpec,
    delta: float,
    structure: _Structure | None = None,
) -> ConicSubproblem:
    if delta <= 0:
        raise ValueError("delta must be positive")
    if structure is None:
        structure = _build_structure(constraints, samples, spec)
    W_P = _hermitian_inverse(state.P + delta * np.eye(spec.rows))
    W_Q = _hermitian_inverse(state.Q + delta * np.eye(spec.cols))
    lay = structure.layout
    c = np.zeros(lay.n)
    c[lay.p_off:lay.q_off] = lay.pack_weight(W_P, lay.p_off)
    c[lay.q_off:] = lay.pack_weight(W_Q, lay.q_off)
    # keep the objective O(1) for the solver; argmin is unaffected
    c *= structure.scale / max(np.abs(c).max(), 1e-300)
    problem = ConicProblem(
        c=c,
        soc_A=structure.soc_A,
        soc_b=structure.soc_b,
        soc_dims=structure.soc_dims,
        psd_A=structure.psd_A,
        psd_b=structure.psd_b,
        psd_dim=structure.psd_dim,
    )
    return ConicSubproblem(W_P=W_P, W_Q=W_Q, problem=problem, structure=structure)


def constraint_slack(x_R: np.ndarray, constraints: ConstraintSpec, N: int) -> dict[str, float]:
    """Worst violation (positive) or margin (negative) of each constraint family."""
    out = {}
    if constraints.match_n.size:
        dev = np.abs(x_R[constraints.match_n + N] - constraints.match_target)
        out["match"] = float((dev - constraints.eps).max())
    if constraints.bound_n.size:
        mag = np.abs(x_R[constraints.bound_n + N])
        out["bound"] = float((mag - constraints.bound_rho).max())
    return out


def run_logdet(
    samples: SampleSet,
    spec: HankelSpec,
    constraints: ConstraintSpec,
    K: int = 10,
    delta_rel: float = 1e-3,
    solver: SolverInterface | None = None,
    tau: float = DEFAULT_RANK_TOL,
    early_stop: bool = False,
    callback=None,
    warm_start: bool = False,
    polish: bool = True,
) -> LogDetState:
    """Run ``K`` reweighted-trace iterations and return the final state.

    ``delta = delta_rel * sigma_1(Y_0)`` is held fixed unless the solver
    reports a numerical failure, in which case it is raised tenfold once.
    With ``polish`` the solver's P and Q are replaced by the exact optimum
    for the returned ``x_R`` (see :func:`optimal_blocks`), which removes
    solver noise from the next weights and from the surrogate trace. If the
    polished step raises the surrogate, the previous ``x_R`` (re-polished
    under the new weights) is kept instead, so the trace cannot increase.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    sigma1 = np.linalg.norm(hankelize(samples.x, spec.L), 2)
    delta = delta_rel * sigma1
    state = init_state(samples, spec, delta, tau)
    structure = _build_structure(constraints, samples, spec)
    if solver is None:
        solver = default_solver(structure.psd_dim)
    warm = None
    retried = False
    while state.k < K:
        sub = build_subproblem(state, constraints, samples, spec, state.delta, structure)
        sol: ConicSolution = solver.solve(sub.problem, warm=warm)
        if sol.status == "numerical_failure" and not retried:
            retried = True
            logger.warning("iteration %d: numerical failure, retrying with delta x10", state.k)
            state = replace(state, delta=10 * state.delta)
            warm = None
            continue
        if sol.status in ("infeasible", "unbounded"):
            raise InfeasibleError(
                f"iteration {state.k}: subproblem {sol.status}; eps/rho may be too tight",
                iteration=state.k,
                residuals=constraint_slack(state.x_R, constraints, samples.N),
            )
        if sol.status == "numerical_failure":
            raise SolverError(f"iteration {state.k}: solver numerical failure")
        if sol.status == "near_optimal":
            logger.warning("iteration %d: solver returned an inaccurate solution", state.k)
        P, Q, x_R = sub.unpack(sol.x)
        accepted = True
        if polish:
            P, Q, _ = optimal_blocks(hankelize(x_R, spec.L), sub.W_P, sub.W_Q)
            if state.k > 0:
                # an inexact solve can land above the current surrogate; the
                # polished previous x_R is a majorisation step and never does
                f_prev = state.surrogate_trace[-1]
                if logdet_surrogate(P, Q, state.delta) > f_prev + STEP_TOL * abs(f_prev):
                    P0, Q0, _ = optimal_blocks(hankelize(state.x_R, spec.L), sub.W_P, sub.W_Q)
                    if logdet_surrogate(P0, Q0, state.delta) < logdet_surrogate(P, Q, state.delta):
                        P, Q, x_R, accepted = P0, Q0, state.x_R, False
                        logger.info("iteration %d: solver step raised the surrogate,"
                                    " kept previous x_R", state.k + 1)
        rank, sv = numerical_rank(hankelize(x_R, spec.L), tau)
        state.P, state.Q, state.x_R = P, Q, x_R
        state.k += 1
        state.rank_trace.append(rank)
        state.surrogate_trace.append(logdet_surrogate(P, Q, state.delta))
        state.singular_values = sv
        state.statuses.append(sol.status)
        state.accepted.append(accepted)
        state.residuals.append(constraint_slack(x_R, constraints, samples.N))
        warm = sol.warm if warm_start else None
        logger.info("iteration %d: rank %d, surrogate %.6f, %d solver iters",
                    state.k, rank, state.surrogate_trace[-1], sol.iterations)
        if callback is not None:
            callback(state, sol)
        if early_stop and len(state.rank_trace) >= 4 and len(set(state.rank_trace[-4:])) == 1:
            break
    return state

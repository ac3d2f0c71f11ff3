"""Matrix pencil extraction of element positions and least-squares excitations."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .array_model import ElementLayout, Excitation, PatternSampleGrid, evaluate_pattern
from .errors import DomainError, PencilError
from .hankel import HankelSpec, hankelize
from .sampling import SampleSet


class RankWarning(UserWarning):
    """Requested pencil rank exceeds the numerical rank of the data."""


@dataclass(frozen=True)
class SparseArraySolution:
    positions: np.ndarray
    weights: np.ndarray
    eigenvalues: np.ndarray
    radial_deviation: np.ndarray
    ls_residual: float

    @property
    def R(self) -> int:
        return self.positions.size

    @property
    def layout(self) -> ElementLayout:
        return ElementLayout(self.positions)

    @property
    def excitation(self) -> Excitation:
        return Excitation(self.weights)


def pencil_matrices(x_R, spec: HankelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Shifted pencil pair: the Hankel matrix without its last / first column."""
    if spec.L < 1:
        raise DomainError("pencil needs L >= 1")
    x_R = np.asarray(x_R)
    if x_R.size != spec.length:
        raise DomainError(f"expected {spec.length} samples, got {x_R.size}")
    Y = hankelize(x_R, spec.L)
    return Y[:, :-1], Y[:, 1:]


def pencil_eigenvalues(Y1: np.ndarray, Y2: np.ndarray, R: int,
                       rank_tol: float = 1e-8) -> np.ndarray:
    """Eigenvalues ``z_r`` with ``Y2 = Y1`` advanced by one sample.

    Both matrices are projected onto the ``R`` leading left singular vectors
    of the full Hankel matrix, leaving the ``R x R`` problem
    ``G2 G1^+`` whose spectrum is exactly the signal poles.
    """
    if R < 1 or R > min(Y1.shape):
        raise DomainError(f"R={R} outside [1, {min(Y1.shape)}]")
    Y = np.hstack([Y1, Y2[:, -1:]])
    U, sv, _ = np.linalg.svd(Y, full_matrices=False)
    if sv[0] == 0:
        raise PencilError("pencil of an all-zero sequence")
    if sv[R - 1] < rank_tol * sv[0]:
        warnings.warn(
            f"R={R} exceeds the numerical rank (sigma_R/sigma_1 = {sv[R - 1] / sv[0]:.1e})",
            RankWarning,
            stacklevel=2,
        )
    Ur = U[:, :R]
    G1 = Ur.conj().T @ Y1
    G2 = Ur.conj().T @ Y2
    s1 = np.linalg.svd(G1, compute_uv=False)
    if s1[-1] <= 1e-13 * s1[0]:
        raise PencilError("reduced pencil is singular")
    z = np.linalg.eigvals(G2 @ np.linalg.pinv(G1))
    if not np.all(np.isfinite(z)):
        raise PencilError("reduced pencil produced non-finite eigenvalues")
    return z


def positions_from_eigenvalues(z, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Positions ``arg(z) / (2 pi delta)`` in wavelengths and ``|ln|z||``."""
    z = np.asarray(z, dtype=complex)
    if delta <= 0:
        raise DomainError("delta must be positive")
    if np.any(z == 0):
        raise DomainError("zero pencil eigenvalue has no phase")
    return np.angle(z) / (2.0 * np.pi * delta), np.abs(np.log(np.abs(z)))


def vandermonde(z, N: int) -> np.ndarray:
    """Rows ``z_r**n`` for ``n = -N..N``."""
    n = np.arange(-N, N + 1)
    return np.asarray(z, dtype=complex)[None, :] ** n[:, None]


def ls_weights(z, samples: SampleSet) -> tuple[np.ndarray, float]:
    z = np.asarray(z, dtype=complex)
    if z.size > samples.x.size:
        raise DomainError("more poles than samples")
    Z = vandermonde(z, samples.N)
    w, _, rank, sv = np.linalg.lstsq(Z, samples.x, rcond=None)
    if rank < z.size or sv[-1] < 1e-10 * sv[0]:
        gap = np.abs(z[:, None] - z[None, :]) + np.diag(np.full(z.size, np.inf))
        i, j = np.unravel_index(np.argmin(gap), gap.shape)
        raise PencilError(
            f"Vandermonde fit is rank deficient: poles {i} and {j} nearly coincide"
            f" ({z[i]:.6g} vs {z[j]:.6g})"
        )
    resid = np.linalg.norm(Z @ w - samples.x) / max(np.linalg.norm(samples.x), 1e-300)
    return w, float(resid)


def solve_pencil(samples: SampleSet, spec: HankelSpec, R: int,
                 data: np.ndarray | None = None) -> SparseArraySolution:
    """Positions from the pencil of ``data`` (default the samples), weights by LS.

    ``data`` may be a (e.g. rank-truncated) matrix shaped like
    ``hankelize(samples.x, L)``. The LS fit uses unit-modulus poles so that
    the fitted weights reproduce the samples through the array pattern.
    """
    if data is None:
        Y1, Y2 = pencil_matrices(samples.x, spec)
    else:
        Y1, Y2 = data[:, :-1], data[:, 1:]
    z = pencil_eigenvalues(Y1, Y2, R)
    pos, radial = positions_from_eigenvalues(z, samples.delta)
    order = np.argsort(pos, kind="stable")
    pos, radial, z = pos[order], radial[order], z[order]
    w, resid = ls_weights(np.exp(2j * np.pi * pos * samples.delta), samples)
    return SparseArraySolution(
        positions=pos, weights=w, eigenvalues=z, radial_deviation=radial, ls_residual=resid
    )


def reconstruct_pattern(solution: SparseArraySolution, grid: PatternSampleGrid) -> np.ndarray:
    return evaluate_pattern(solution.layout, solution.excitation, grid)


def baseline_mpm(samples: SampleSet, spec: HankelSpec, target_R: int | None = None,
                 sigma_ratio: float = 1e-2) -> SparseArraySolution:
    """Classical MPM: truncate the Hankel SVD to rank R, then extract poles."""
    Y = hankelize(samples.x, spec.L)
    U, sv, Vh = np.linalg.svd(Y, full_matrices=False)
    R = int(target_R) if target_R is not None else int(np.count_nonzero(sv >= sigma_ratio * sv[0]))
    if R < 1:
        raise DomainError("truncation rank must be >= 1")
    Yt = (U[:, :R] * sv[:R]) @ Vh[:R]
    return solve_pencil(samples, spec, R, data=Yt)

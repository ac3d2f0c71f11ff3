"""Hankelization, anti-diagonal bookkeeping and numerical rank."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_RANK_TOL = 1e-3


@dataclass(frozen=True)
class HankelSpec:
    """Shape of ``H_(L){x(-N), ..., x(N)}``: ``(2N-L+1) x (L+1)``."""

    N: int
    L: int

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if not 0 <= self.L <= 2 * self.N:
            raise DomainError(f"pencil parameter L={self.L} outside [0, {2 * self.N}]")

    @property
    def rows(self) -> int:
        return 2 * self.N - self.L + 1

    @property
    def cols(self) -> int:
        return self.L + 1

    @property
    def length(self) -> int:
        return 2 * self.N + 1

    def check_elements(self, M: int) -> None:
        """Raise unless an ``M``-element reference fits: ``2N-L >= M`` and ``L+1 >= M``."""
        if 2 * self.N - self.L < M or self.L + 1 < M:
            raise DomainError(
                f"L={self.L}, N={self.N} cannot represent {M} elements"
                f" (need 2N-L >= M and L+1 >= M)"
            )


def hankel_indices(length: int, S: int) -> np.ndarray:
    """Integer matrix whose (p, q) entry is ``p + q``."""
    if not 0 <= S <= length - 1:
        raise DomainError(f"S={S} outside [0, {length - 1}]")
    return np.arange(length - S)[:, None] + np.arange(S + 1)[None, :]


def hankelize(seq, S: int) -> np.ndarray:
    seq = np.asarray(seq)
    return seq[hankel_indices(seq.size, S)]


def dehankelize(mat: np.ndarray) -> np.ndarray:
    """Read the anti-diagonals (first column then last row) back into a sequence."""
    mat = np.asarray(mat)
    return np.concatenate([mat[:, 0], mat[-1, 1:]])


def antidiagonal_index(n: int, spec: HankelSpec) -> list[tuple[int, int]]:
    if not -spec.N <= n <= spec.N:
        raise DomainError(f"sample index {n} outside [-{spec.N}, {spec.N}]")
    s = n + spec.N
    p_lo = max(0, s - spec.L)
    p_hi = min(spec.rows - 1, s)
    return [(p, s - p) for p in range(p_lo, p_hi + 1)]


def numerical_rank(mat, tau: float = DEFAULT_RANK_TOL) -> tuple[int, np.ndarray]:
    """Number of singular values at or above ``tau * sigma_1``, plus the spectrum."""
    mat = np.asarray(mat)
    if mat.size == 0:
        raise DomainError("empty matrix has no rank")
    if not 0 < tau < 1:
        raise DomainError("tau must lie in (0, 1)")
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] == 0:
        return 0, sv
    return int(np.count_nonzero(sv >= tau * sv[0])), sv

"""Uniform u-grid sampling of a reference pattern and constraint construction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array_model import ElementLayout, Excitation, PatternSampleGrid, evaluate_pattern
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class SampleSet:
    """Samples ``x(n) = F(n*delta)`` for ``n = -N..N`` with ``delta = 1/N``."""

    x: np.ndarray
    N: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex).ravel()
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if x.size != 2 * self.N + 1:
            raise DomainError(f"expected {2 * self.N + 1} samples, got {x.size}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def delta(self) -> float:
        return 1.0 / self.N

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def u(self) -> np.ndarray:
        return self.n / self.N

    def index(self, n: int) -> int:
        """Array offset of sample index ``n``."""
        return n + self.N

    @property
    def peak(self) -> float:
        return float(np.abs(self.x).max())

    def with_values(self, x) -> "SampleSet":
        return SampleSet(x, self.N)


@dataclass(frozen=True)
class RegionPartition:
    n_l: int
    n_r: int
    N: int

    def __post_init__(self):
        if not -self.N <= self.n_l <= self.n_r <= self.N:
            raise DomainError("mainlobe edges must satisfy -N <= n_l <= n_r <= N")

    @property
    def V(self) -> np.ndarray:
        return np.arange(self.n_l, self.n_r + 1)

    @property
    def V_bar(self) -> np.ndarray:
        return np.concatenate(
            [np.arange(-self.N, self.n_l), np.arange(self.n_r + 1, self.N + 1)]
        )


@dataclass(frozen=True)
class Notch:
    u_lo: float
    u_hi: float
    level_db: float

    def __post_init__(self):
        if not -1.0 <= self.u_lo < self.u_hi <= 1.0:
            raise ConfigError(f"notch [{self.u_lo}, {self.u_hi}] must lie inside [-1, 1]")

    def covers(self, u):
        return (u >= self.u_lo - 1e-12) & (u <= self.u_hi + 1e-12)

    def mirrored(self) -> "Notch":
        return Notch(-self.u_hi, -self.u_lo, self.level_db)


@dataclass(frozen=True)
class ConstraintSpec:
    """Match rows ``|x_R(n) - x(n)| <= eps`` and bound rows ``|x_R(n)| <= rho(n)``.

    Indices are sample indices ``n`` in ``-N..N``; magnitudes are absolute
    (same units as the samples).
    """

    match_n: np.ndarray
    match_target: np.ndarray
    eps: float
    bound_n: np.ndarray
    bound_rho: np.ndarray
    free_n: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        if self.eps <= 0:
            raise ConfigError("match tolerance must be positive")
        if np.any(np.asarray(self.bound_rho) < 0):
            raise ConfigError("sidelobe bounds must be non-negative")

    @property
    def sidelobe_bound(self) -> dict[int, float]:
        return {int(n): float(r) for n, r in zip(self.bound_n, self.bound_rho)}


def sample_reference(layout: ElementLayout, exc: Excitation, N: int) -> SampleSet:
    if N < 1:
        raise DomainError("N must be >= 1")
    delta = 1.0 / N
    d_max = float(np.abs(layout.positions).max())
    if d_max > 0 and delta > 1.0 / (2.0 * d_max) + 1e-12:
        raise DomainError(
            f"sampling step {delta:g} too coarse for aperture {d_max:g} wavelengths;"
            f" maximum admissible |position| is {1.0 / (2.0 * delta):g} wavelengths"
        )
    grid = PatternSampleGrid(np.arange(-N, N + 1) / N)
    return SampleSet(evaluate_pattern(layout, exc, grid), N)


def partition_mainlobe(samples: SampleSet, rho_db: float) -> RegionPartition:
    mag = np.abs(samples.x)
    thr = 10.0 ** (rho_db / 20.0) * mag.max()
    c = int(np.argmax(mag))
    if not mag[c] > thr:
        raise DomainError(f"no sample exceeds the {rho_db} dB threshold")
    lo = c
    while lo > 0 and mag[lo - 1] > thr:
        lo -= 1
    hi = c
    while hi < mag.size - 1 and mag[hi + 1] > thr:
        hi += 1
    return RegionPartition(lo - samples.N, hi - samples.N, samples.N)


def build_constraints(
    samples: SampleSet,
    part: RegionPartition,
    match_offsets=(-1, 0, 2),
    eps_rel: float = 0.01,
    masks=(),
    sidelobe_db: float = -30.0,
) -> ConstraintSpec:
    """Match set around the mainlobe peak plus per-sample sidelobe ceilings.

    ``masks`` override ``sidelobe_db`` on the samples they cover; where
    masks overlap the deepest level wins.
    """
    if eps_rel <= 0:
        raise ConfigError("eps_rel must be positive")
    mag = np.abs(samples.x)
    peak = mag.max()
    center = int(np.argmax(mag)) - samples.N
    V = set(part.V.tolist())
    match_n = []
    for off in sorted(set(int(o) for o in match_offsets)):
        n = center + off
        if n not in V:
            raise ConfigError(
                f"match offset {off:+d} (sample {n}) falls outside the mainlobe"
                f" [{part.n_l}, {part.n_r}]"
            )
        match_n.append(n)
    match_n = np.array(match_n, dtype=int)
    free_n = np.array(sorted(V - set(match_n.tolist())), dtype=int)

    bound_n = part.V_bar
    u = bound_n * samples.delta
    level = np.full(u.shape, np.inf)
    for m in masks:
        level = np.where(m.covers(u), np.minimum(level, m.level_db), level)
    level = np.where(np.isinf(level), sidelobe_db, level)
    rho = 10.0 ** (level / 20.0) * peak

    return ConstraintSpec(
        match_n=match_n,
        match_target=samples.x[match_n + samples.N].copy(),
        eps=eps_rel * peak,
        bound_n=bound_n,
        bound_rho=rho,
        free_n=free_n,
    )

"""Linear array geometry, beampatterns and pattern metrics.

Element positions are expressed in wavelengths, so a half-wavelength
spacing is ``0.5`` and the phase of element ``m`` at ``u = sin(theta)`` is
``2*pi*d_m*u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev

from .errors import DomainError

DB_FLOOR = -300.0


@dataclass(frozen=True)
class ElementLayout:
    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).ravel()
        if pos.size < 1:
            raise DomainError("layout needs at least one element")
        if not np.all(np.isfinite(pos)):
            raise DomainError("element positions must be finite")
        if np.any(np.diff(pos) <= 0):
            raise DomainError("element positions must be strictly increasing")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return self.positions.size

    @classmethod
    def uniform(cls, count: int, spacing: float = 0.5) -> "ElementLayout":
        return cls(spacing * np.arange(count))


@dataclass(frozen=True)
class Excitation:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).ravel()
        if not np.any(w != 0):
            raise DomainError("excitation needs at least one nonzero weight")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class PatternSampleGrid:
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).ravel()
        if np.any(np.abs(u) > 1.0):
            raise DomainError("u = sin(theta) must lie in [-1, 1]")
        if np.any(np.diff(u) <= 0):
            raise DomainError("grid must be strictly increasing")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def uniform(cls, points: int = 4001) -> "PatternSampleGrid":
        return cls(np.linspace(-1.0, 1.0, points))


@dataclass(frozen=True)
class PatternMetrics:
    peak_u: float
    peak_level_db: float
    psl_db: float
    mainlobe_null_width_u: float
    degenerate: bool = False


def steering_vector(layout: ElementLayout, u: float) -> np.ndarray:
    if not -1.0 <= u <= 1.0:
        raise DomainError(f"u={u} outside [-1, 1]")
    return np.exp(2j * np.pi * layout.positions * u)


def evaluate_pattern(
    layout: ElementLayout, exc: Excitation, grid: PatternSampleGrid
) -> np.ndarray:
    """F(u) = w^T a(u) on every grid point (no conjugation of the weights)."""
    if exc.weights.size != layout.count:
        raise ValueError(
            f"{exc.weights.size} weights for a {layout.count}-element layout"
        )
    phase = np.exp(2j * np.pi * np.outer(grid.u, layout.positions))
    return phase @ exc.weights


def dolph_chebyshev_taper(M: int, sll_db: float) -> np.ndarray:
    """Dolph-Chebyshev amplitude taper for a uniform half-wavelength array.

    The array factor of the taper is ``T_{M-1}(x0 cos(psi/2))`` with
    ``T_{M-1}(x0) = 10**(-sll_db/20)``. Sampling that trigonometric
    polynomial at ``M`` equispaced ``psi`` values and inverting the
    resulting DFT yields the coefficients exactly. The taper is scaled so its
    largest entry is 1.
    """
    if M < 1:
        raise DomainError("M must be a positive integer")
    if sll_db >= 0:
        raise DomainError("sidelobe level must be negative (dB)")
    if M <= 2:
        return np.ones(M)
    order = M - 1
    ratio = 10.0 ** (-sll_db / 20.0)
    x0 = np.cosh(np.arccosh(ratio) / order)
    psi = 2.0 * np.pi * np.arange(M) / M
    af = chebyshev.chebval(x0 * np.cos(psi / 2.0), [0.0] * order + [1.0])
    offsets = np.arange(M) - order / 2.0
    w = (np.exp(-1j * np.outer(offsets, psi)) @ af).real / M
    w = 0.5 * (w + w[::-1])
    return w / w.max()


def to_db(samples: np.ndarray, floor_db: float = DB_FLOOR) -> np.ndarray:
    """Magnitude in dB relative to the largest sample, clipped at ``floor_db``."""
    mag = np.abs(np.asarray(samples))
    peak = mag.max()
    if peak == 0:
        return np.full(mag.shape, floor_db)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return np.maximum(db, floor_db)


def mainlobe_bounds(mag: np.ndarray) -> tuple[int, int, int]:
    """Peak index and the nearest local minima on either side of it."""
    peak = int(np.argmax(mag))
    lo = peak
    while lo > 0 and mag[lo - 1] < mag[lo]:
        lo -= 1
    hi = peak
    while hi < mag.size - 1 and mag[hi + 1] < mag[hi]:
        hi += 1
    return peak, lo, hi


def pattern_metrics(
    grid: PatternSampleGrid, samples: np.ndarray, floor_db: float = DB_FLOOR
) -> PatternMetrics:
    mag = np.abs(np.asarray(samples)).ravel()
    if mag.size < 5:
        raise DomainError("pattern_metrics needs at least 5 samples")
    if mag.size != grid.u.size:
        raise ValueError("samples and grid differ in length")
    u = grid.u
    peak = mag.max()
    if peak == 0 or np.ptp(mag) <= 1e-12 * peak:
        return PatternMetrics(
            peak_u=float(u[0]),
            peak_level_db=0.0,
            psl_db=floor_db,
            mainlobe_null_width_u=float(u[-1] - u[0]),
            degenerate=True,
        )
    ipk, lo, hi = mainlobe_bounds(mag)
    side = np.concatenate([mag[:lo], mag[hi + 1:]])
    if side.size == 0 or side.max() == 0:
        psl = floor_db
    else:
        psl = max(20.0 * np.log10(side.max() / peak), floor_db)
    return PatternMetrics(
        peak_u=float(u[ipk]),
        peak_level_db=0.0,
        psl_db=float(psl),
        mainlobe_null_width_u=float(u[hi] - u[lo]),
        degenerate=side.size == 0,
    )

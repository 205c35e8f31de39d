"""Complex signals on a uniform grid, and the phase geometry used everywhere else.

The whole toolkit works with finite complex-valued sample vectors living on a
uniform grid with step ``delta = 2 * B / L``.  Grid coordinates are
``x = (index - origin) * delta``; everything outside the modeled horizon is
treated as identically zero.  This module owns the grid bookkeeping plus the
handful of signal-level operations the recovery and verification layers need:
global phase alignment, conjugate reflection about a point, separability
detection, quasi-periodic extension, and seeded random test signals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

#: Relative tolerance for "these two numbers are the same sample value".
EQUALITY_RTOL = 1e-9
#: Absolute tolerance for "this sample is zero".
ZERO_ATOL = 1e-12


class GridMismatchError(ValueError):
    """Two objects that must share a grid do not."""


class OffGridError(ValueError):
    """A coordinate that must be grid-representable is not.

    Attributes
    ----------
    value : float
        The offending coordinate.
    nearest : float
        The nearest representable coordinate, for error messages.
    """

    def __init__(self, message: str, value: float, nearest: float):
        super().__init__(message)
        self.value = value
        self.nearest = nearest


class ReflectionRangeError(ValueError):
    """Conjugate reflection would push support outside the horizon."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform sample grid on which every signal and window lives.

    Parameters
    ----------
    B : float
        Half-width of the window support; sets the step via delta = 2B/L.
    L : int
        Number of grid cells per window length 2B.
    origin : int
        Index of the grid point at coordinate 0.
    horizon : int
        Total number of modeled samples.  Indices run 0 .. horizon-1 and
        everything outside is zero by convention.
    """

    B: float
    L: int
    origin: int
    horizon: int

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError(f"window half-width B must be positive, got {self.B}")
        if self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L}")
        if self.horizon < self.L:
            raise ValueError(
                f"horizon ({self.horizon}) must cover at least one window of L={self.L} cells"
            )

    @property
    def delta(self) -> float:
        return 2.0 * self.B / self.L

    def x(self, index):
        """Coordinate of a grid index (vectorized)."""
        return (np.asarray(index) - self.origin) * self.delta

    def index_of(self, coord: float, tol: float = 1e-9) -> int:
        """Exact grid index of a coordinate, or OffGridError.

        The tolerance is relative to the grid step.
        """
        j = coord / self.delta + self.origin
        ji = int(round(j))
        if abs(j - ji) > tol:
            nearest = (ji - self.origin) * self.delta
            raise OffGridError(
                f"coordinate {coord!r} is not a grid point (nearest is {nearest!r})",
                coord,
                nearest,
            )
        return ji

    def is_multiple(self, t: float, tol: float = 1e-9) -> bool:
        """True when ``t`` is an integer multiple of the grid step."""
        j = t / self.delta
        return abs(j - round(j)) <= tol

    def coords(self) -> np.ndarray:
        """All modeled coordinates, index 0 through horizon-1."""
        return (np.arange(self.horizon) - self.origin) * self.delta


class Signal:
    """Immutable complex sample vector on a grid.

    ``support`` is the minimal index range (first, last) outside which all
    samples are exactly zero, or None for the zero signal.
    """

    __slots__ = ("grid", "samples", "support")

    def __init__(self, grid: GridSpec, samples):
        arr = np.asarray(samples, dtype=np.complex128)
        if arr.shape != (grid.horizon,):
            raise ValueError(
                f"samples must have shape ({grid.horizon},) to match the grid horizon, "
                f"got {arr.shape}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        self.grid = grid
        self.samples = arr
        nz = np.flatnonzero(arr)
        self.support = (int(nz[0]), int(nz[-1])) if nz.size else None

    def __repr__(self):
        return f"Signal(grid={self.grid!r}, support={self.support}, norm={self.norm():.6g})"

    def norm(self) -> float:
        return float(np.linalg.norm(self.samples))

    def is_zero(self) -> bool:
        return self.support is None

    def shifted_phase(self, lam: complex) -> "Signal":
        """The signal multiplied by a global scalar."""
        return Signal(self.grid, lam * self.samples)


def same_grid(a: GridSpec, b: GridSpec) -> bool:
    return (
        a.L == b.L
        and a.origin == b.origin
        and a.horizon == b.horizon
        and abs(a.B - b.B) <= EQUALITY_RTOL * max(a.B, b.B)
    )


def require_same_grid(f: Signal, g: Signal) -> None:
    if not same_grid(f.grid, g.grid):
        raise GridMismatchError(
            f"signals live on different grids: {f.grid} vs {g.grid}"
        )


@dataclass(frozen=True)
class PhaseAlignment:
    """Result of aligning g to f by a unit scalar.

    residual is ||f - lambda*g|| / sqrt(||f||^2 + ||g||^2), which is 0 for an
    exact phase match and 1 for orthogonal inputs of equal size.
    """

    lam: complex
    residual: float


def global_phase_align(f: Signal, g: Signal) -> PhaseAlignment:
    """Best unit scalar aligning g to f, with the relative l2 residual.

    Degenerate cases: if both signals are zero the residual is 0; if exactly
    one is zero no phase helps and lambda defaults to 1.
    """
    require_same_grid(f, g)
    fv = f.samples
    gv = g.samples
    scale = float(np.sqrt(np.linalg.norm(fv) ** 2 + np.linalg.norm(gv) ** 2))
    if scale == 0.0:
        return PhaseAlignment(lam=1.0 + 0.0j, residual=0.0)
    inner = complex(np.vdot(gv, fv))  # sum f * conj(g)
    if inner == 0:
        lam = 1.0 + 0.0j
    else:
        lam = inner / abs(inner)
    residual = float(np.linalg.norm(fv - lam * gv) / scale)
    return PhaseAlignment(lam=lam, residual=residual)


def equivalent_up_to_phase(f: Signal, g: Signal, tol: float = 1e-8) -> bool:
    return global_phase_align(f, g).residual <= tol


def conj_reflect(f: Signal, center: float) -> Signal:
    """Conjugate reflection about ``center``: output(x) = conj(f(2*center - x)).

    ``2 * center`` must land on the grid (centers may sit on half-grid
    points).  Raises ReflectionRangeError when the reflected support would
    leave the horizon, since the result would not be representable; callers
    treat that as "no admissible reflection here".  When the call succeeds the
    operation is an exact involution.
    """
    grid = f.grid
    two_c = 2.0 * center / grid.delta
    m2 = int(round(two_c))
    if abs(two_c - m2) > 1e-9:
        nearest = m2 * grid.delta / 2.0
        raise OffGridError(
            f"reflection center {center!r} is not on the half-grid "
            f"(nearest admissible center is {nearest!r})",
            center,
            nearest,
        )
    out = np.zeros(grid.horizon, dtype=np.complex128)
    if f.support is not None:
        lo, hi = f.support
        # index map: k -> 2*origin + m2 - k
        ref_hi = 2 * grid.origin + m2 - lo
        ref_lo = 2 * grid.origin + m2 - hi
        if ref_lo < 0 or ref_hi >= grid.horizon:
            raise ReflectionRangeError(
                f"reflection about {center!r} maps support [{lo}, {hi}] to "
                f"[{ref_lo}, {ref_hi}], outside the horizon [0, {grid.horizon - 1}]"
            )
        src = np.arange(lo, hi + 1)
        out[2 * grid.origin + m2 - src] = np.conj(f.samples[src])
    return Signal(grid, out)


def is_separable(f: Signal, length: float, tol: float = ZERO_ATOL) -> bool:
    """True when some run of ceil(length/delta) consecutive samples inside the
    horizon all have modulus <= tol.

    This is the discrete stand-in for "f vanishes on an interval of the given
    length"; leading and trailing zeros count, so compactly supported signals
    with wide margins are separable at any length fitting the margin.
    """
    grid = f.grid
    if length <= 0:
        raise ValueError(f"separation length must be positive, got {length}")
    n_win = int(np.ceil(length / grid.delta - 1e-9))
    n_win = max(n_win, 1)
    if n_win > grid.horizon:
        return False
    small = np.abs(f.samples) <= tol
    # longest run of consecutive "small" cells
    run = 0
    best = 0
    for flag in small:
        run = run + 1 if flag else 0
        if run > best:
            best = run
            if best >= n_win:
                return True
    return False


@dataclass(frozen=True)
class PeriodicSpec:
    """Quasi-periodic extension data: f(x + T) = conj(mu) * f(x) scaled so that
    f(x) = mu * f(x + T), with |mu| = 1 and a trigonometric base cell

        p(x) = sum_k coefficients[k] * exp(2i pi k x / T).
    """

    T: float
    mu: complex = 1.0 + 0.0j
    coefficients: Dict[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"period T must be positive, got {self.T}")
        if abs(abs(self.mu) - 1.0) > 1e-12:
            raise ValueError(f"|mu| must be 1, got |{self.mu}| = {abs(self.mu)}")


def make_periodic(spec: PeriodicSpec, grid: GridSpec) -> Signal:
    """Sample the quasi-periodic extension of a trigonometric base cell.

    The period must be an integer number of grid cells so the defining
    relation f(x) = mu * f(x + T) holds exactly at machine precision between
    representable samples.
    """
    k_T = spec.T / grid.delta
    k_Ti = int(round(k_T))
    if abs(k_T - k_Ti) > 1e-9 or k_Ti < 1:
        raise OffGridError(
            f"period T={spec.T!r} is not an integer number of grid cells "
            f"(T/delta = {k_T!r})",
            spec.T,
            round(k_T) * grid.delta,
        )
    # base cell values at offsets r*delta, r = 0..k_T-1
    r = np.arange(k_Ti)
    base = np.zeros(k_Ti, dtype=np.complex128)
    for k, c in spec.coefficients.items():
        base += c * np.exp(2j * np.pi * k * (r * grid.delta) / spec.T)
    j = np.arange(grid.horizon) - grid.origin
    cell = j // k_Ti
    rem = j - cell * k_Ti
    # f((r + m*k_T) * delta) = mu^(-m) * p(r * delta).  Powers of mu are
    # built by integer exponentiation, which keeps sign flips (mu = -1) and
    # quarter turns (mu = +-i) exact instead of routing through exp/log.
    exps = -cell
    e_lo = int(exps.min())
    table = np.empty(int(exps.max()) - e_lo + 1, dtype=np.complex128)
    table[0] = complex(spec.mu) ** e_lo
    for idx in range(1, table.size):
        table[idx] = table[idx - 1] * spec.mu
    return Signal(grid, table[exps - e_lo] * base[rem])


def periodic_eval(spec: PeriodicSpec, x) -> np.ndarray:
    """Evaluate the quasi-periodic extension at arbitrary real points.

    Returns mu^(-m) * p(x - m T) with m = floor(x / T), vectorized over x.
    Needed wherever a quasi-periodic candidate must be read off the grid,
    e.g. when reflecting one about a point that is not a horizon midpoint.
    """
    xv = np.atleast_1d(np.asarray(x, dtype=np.float64))
    # Nudge before flooring so points sitting a rounding error below a
    # period boundary do not pick up a spurious factor of mu.
    m = np.floor(xv / spec.T + 1e-9).astype(np.int64)
    rem = xv - m * spec.T
    vals = np.zeros_like(xv, dtype=np.complex128)
    for k, c in spec.coefficients.items():
        vals += c * np.exp(2j * np.pi * k * rem / spec.T)
    exps = -m
    e_lo = int(exps.min())
    table = np.empty(int(exps.max()) - e_lo + 1, dtype=np.complex128)
    table[0] = complex(spec.mu) ** e_lo
    for idx in range(1, table.size):
        table[idx] = table[idx - 1] * spec.mu
    out = table[exps - e_lo] * vals
    return out if np.ndim(x) else out[0]


def random_nonseparable(
    grid: GridSpec,
    support_len: int,
    gap_bound: float,
    seed: int,
    max_tries: int = 64,
) -> Signal:
    """Seeded random complex signal that is NOT separable at ``gap_bound``.

    Support occupies ``support_len`` cells starting at index 0; complex
    standard normal samples are redrawn until the separability predicate
    fails, which for generic draws happens on the first try.
    """
    if not 1 <= support_len <= grid.horizon:
        raise ValueError(
            f"support_len must lie in [1, horizon={grid.horizon}], got {support_len}"
        )
    if gap_bound >= support_len * grid.delta:
        raise ValueError(
            f"gap_bound={gap_bound!r} is at least the support span "
            f"{support_len * grid.delta!r}; the nonseparability request is unsatisfiable"
        )
    n_gap = max(int(np.ceil(gap_bound / grid.delta - 1e-9)), 1)
    margin = grid.horizon - support_len
    if margin >= n_gap:
        raise ValueError(
            f"horizon leaves {margin} zero cells outside the support, which already "
            f"forms a gap of length >= {gap_bound!r}; enlarge support_len or shrink the horizon"
        )
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        vals = np.zeros(grid.horizon, dtype=np.complex128)
        vals[:support_len] = rng.standard_normal(support_len) + 1j * rng.standard_normal(
            support_len
        )
        f = Signal(grid, vals)
        if not is_separable(f, gap_bound, tol=1e-9):
            return f
    raise RuntimeError(
        f"failed to draw a nonseparable signal in {max_tries} tries; "
        f"gap_bound={gap_bound!r} is too close to the support span"
    )

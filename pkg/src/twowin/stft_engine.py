"""Forward model: windowed Fourier magnitudes on a finite grid.

The transform of a signal f against a window w at time node t and frequency
omega is the left-endpoint quadrature

    V(t, omega) = delta * sum_k f(x_k) * conj(w(x_k - t)) * exp(-2i pi x_k omega)

over the grid points with x_k - t in [-B, B).  That half-open window always
contains exactly L grid points, whether or not t itself is on the grid.  The
quadrature is not an approximation here; the sampled model is the object of
study, and every downstream identity is exact for it.

Magnitude data are collected on the critical frequency grid omega_n = n/(4B).
Measurements are exactly periodic in n with period 2L, so one alias period
n = -N .. N-1 (N = L by default) carries everything there is to know.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .signal_model import GridSpec, OffGridError, Signal
from .window_engine import WindowPair

WINDOW_NAMES = ("phi", "psi")

#: Defect bound for the exact difference identity between the two windows.
DIFFERENCE_IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class FrequencyGrid:
    """Frequency sampling for the measurements.

    mode "critical": omega_n = n / (4B) for n = -N .. N-1, one alias period
    when N equals the window cell count L.  mode "custom": explicit
    frequencies; ``meets_density`` records whether the finite surrogate of the
    sampling-density condition (some n / omega_n reaching 4B) holds.
    """

    mode: str
    B: float
    N: int = 0
    omegas_custom: Tuple[float, ...] = ()

    @classmethod
    def critical(cls, N: int, B: float) -> "FrequencyGrid":
        if N < 1:
            raise ValueError(f"N must be positive, got {N}")
        return cls(mode="critical", B=B, N=N)

    @classmethod
    def custom(cls, omegas: Sequence[float], B: float) -> "FrequencyGrid":
        if len(omegas) == 0:
            raise ValueError("custom frequency grid must be nonempty")
        return cls(mode="custom", B=B, omegas_custom=tuple(float(w) for w in omegas))

    @property
    def ns(self) -> np.ndarray:
        if self.mode != "critical":
            raise ValueError("integer bin indices exist only for the critical grid")
        return np.arange(-self.N, self.N)

    @property
    def omegas(self) -> np.ndarray:
        if self.mode == "critical":
            return self.ns / (4.0 * self.B)
        return np.asarray(self.omegas_custom, dtype=float)

    @property
    def meets_density(self) -> bool:
        """Finite surrogate of the sampling-density requirement."""
        if self.mode == "critical":
            return True
        pos = np.sort([w for w in self.omegas_custom if w > 0])
        if pos.size == 0:
            return False
        ranks = np.arange(1, pos.size + 1)
        return bool(np.max(ranks / pos) >= 4.0 * self.B - 1e-12)

    def __len__(self) -> int:
        return 2 * self.N if self.mode == "critical" else len(self.omegas_custom)


@dataclass(frozen=True)
class TimeNodes:
    """Declared time nodes for a measurement run.

    modes: "lattice" (times m*a), "lattice_plus_anchor" (same plus one
    off-lattice anchor, stored last), "two_lines" (exactly two nodes, used by
    the periodic pipeline).  ``a`` is the lattice step where applicable.
    """

    mode: str
    times: Tuple[float, ...]
    a: Optional[float] = None
    anchor_index: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("lattice", "lattice_plus_anchor", "two_lines"):
            raise ValueError(f"unknown node mode {self.mode!r}")
        if not self.times:
            raise ValueError("node set must be nonempty")
        if self.mode == "two_lines" and len(self.times) != 2:
            raise ValueError("two_lines mode needs exactly two node times")

    @classmethod
    def lattice(cls, a: float, m_range: Sequence[int]) -> "TimeNodes":
        if a <= 0:
            raise ValueError(f"lattice step must be positive, got {a}")
        times = tuple(float(m) * a for m in m_range)
        return cls(mode="lattice", times=times, a=float(a))

    @classmethod
    def lattice_plus_anchor(cls, a: float, m_range: Sequence[int], t0: float) -> "TimeNodes":
        if a <= 0:
            raise ValueError(f"lattice step must be positive, got {a}")
        frac = t0 / a - round(t0 / a)
        if abs(frac) <= 1e-9:
            raise ValueError(
                f"anchor t0={t0!r} coincides with a lattice node; it must sit strictly between nodes"
            )
        times = tuple(float(m) * a for m in m_range) + (float(t0),)
        return cls(
            mode="lattice_plus_anchor", times=times, a=float(a), anchor_index=len(times) - 1
        )

    @classmethod
    def two_lines(cls, t0: float, t1: float) -> "TimeNodes":
        if t0 == t1:
            raise ValueError("the two node lines must be distinct")
        return cls(mode="two_lines", times=(float(t0), float(t1)))

    @classmethod
    def lattice_covering(
        cls, grid: GridSpec, a: float, anchor: Optional[float] = None
    ) -> "TimeNodes":
        """Lattice nodes whose windows jointly cover the whole horizon."""
        x_first = float(grid.x(0))
        x_last = float(grid.x(grid.horizon - 1))
        m_min = math.floor((x_first - grid.B) / a + 1e-9) + 1
        m_max = math.floor((x_last + grid.B) / a + 1e-9)
        m_range = range(m_min, m_max + 1)
        if anchor is None:
            return cls.lattice(a, m_range)
        return cls.lattice_plus_anchor(a, m_range, anchor)

    @property
    def lattice_times(self) -> Tuple[float, ...]:
        if self.anchor_index is None:
            return self.times
        return self.times[: self.anchor_index] + self.times[self.anchor_index + 1 :]

    @property
    def anchor(self) -> Optional[float]:
        return None if self.anchor_index is None else self.times[self.anchor_index]


def default_anchor(a: float, horizon: int) -> float:
    """Deterministic off-lattice anchor, a*(1/2 + 1/(2*horizon)).

    Sits near mid-cell with an offset no lattice refinement inside the horizon
    resolves, the discrete stand-in for an incommensurate anchor.
    """
    return a * (0.5 + 0.5 / horizon)


@dataclass(frozen=True)
class MeasurementSet:
    """Magnitude data |V(t, omega)| for both windows at declared nodes.

    mags has shape (2, n_nodes, n_bins); axis 0 is (phi, psi).
    """

    pair: WindowPair
    nodes: TimeNodes
    freqs: FrequencyGrid
    mags: np.ndarray

    @property
    def grid(self) -> GridSpec:
        return self.pair.grid

    def mags_at(self, which: str, node_index: int) -> np.ndarray:
        w = WINDOW_NAMES.index(which)
        return self.mags[w, node_index]

    def to_rows(self) -> Iterator[Tuple[str, float, int, float, float]]:
        """Deterministic long-format rows (w, t, n, omega, value)."""
        omegas = self.freqs.omegas
        ns = (
            self.freqs.ns
            if self.freqs.mode == "critical"
            else np.arange(len(omegas))
        )
        for wi, wname in enumerate(WINDOW_NAMES):
            for ti, t in enumerate(self.nodes.times):
                for bi in range(len(omegas)):
                    yield (wname, t, int(ns[bi]), float(omegas[bi]), float(self.mags[wi, ti, bi]))


def _segment_start(grid: GridSpec, t: float) -> int:
    """First grid index k with x_k - t >= -B; the window then holds indices
    k .. k+L-1 (boundary snapped to 1e-9 of a cell so grid-aligned t keeps
    the -B endpoint)."""
    v = (t - grid.B) / grid.delta + grid.origin
    return int(math.ceil(v - 1e-9))


def _window_slot_values(pair: WindowPair, which: str, grid_aligned: bool, u: np.ndarray) -> np.ndarray:
    if grid_aligned:
        return pair.slot_values(which)
    if not pair.supports_offgrid:
        raise OffGridError(
            "user-sampled windows require grid-multiple node times", float(u[0]), 0.0
        )
    return pair.values_at(which, u)


def _gather(samples: np.ndarray, k_lo: int, L: int) -> np.ndarray:
    """Signal values on window indices, zero outside the horizon."""
    horizon = samples.shape[-1]
    k = np.arange(k_lo, k_lo + L)
    inside = (k >= 0) & (k < horizon)
    out = np.zeros(samples.shape[:-1] + (L,), dtype=np.complex128)
    out[..., inside] = samples[..., k[inside]]
    return out


def stft_value(f: Signal, pair: WindowPair, which: str, t: float, omega: float) -> complex:
    """Single transform value at an arbitrary node time and frequency."""
    grid = f.grid
    if which not in WINDOW_NAMES:
        raise ValueError(f"window must be one of {WINDOW_NAMES}, got {which!r}")
    k_lo = _segment_start(grid, t)
    k = np.arange(k_lo, k_lo + grid.L)
    x = (k - grid.origin) * grid.delta
    u = x - t
    aligned = grid.is_multiple(t)
    w = _window_slot_values(pair, which, aligned, u)
    fv = _gather(f.samples, k_lo, grid.L)
    val = grid.delta * np.sum(fv * np.conj(w) * np.exp(-2j * np.pi * x * omega))
    return complex(val)


def windowed_segment(f: Signal, pair: WindowPair, t: float, which: str = "phi") -> np.ndarray:
    """The length-L vector h_j = f(t + u_j) * conj(w(u_j)) seen by the node at t."""
    grid = f.grid
    k_lo = _segment_start(grid, t)
    k = np.arange(k_lo, k_lo + grid.L)
    u = (k - grid.origin) * grid.delta - t
    aligned = grid.is_multiple(t)
    w = _window_slot_values(pair, which, aligned, u)
    fv = _gather(f.samples, k_lo, grid.L)
    return fv * np.conj(w)


def _validate_nodes(grid: GridSpec, pair: WindowPair, nodes: TimeNodes) -> None:
    # The lattice step need not be a whole number of grid cells: the analytic
    # window profiles evaluate at any real node time.  Recovery, which does
    # need node windows to fall on shared cells, enforces its own step rule.
    if not pair.supports_offgrid:
        for t in nodes.times:
            if not grid.is_multiple(t):
                raise OffGridError(
                    f"node time {t!r} is off-grid but the window pair is sample-defined",
                    t,
                    round(t / grid.delta) * grid.delta,
                )


def measure(
    f: Signal,
    pair: WindowPair,
    nodes: TimeNodes,
    freqs: Optional[FrequencyGrid] = None,
) -> MeasurementSet:
    """Collect |V_phi| and |V_psi| at every node over the frequency grid.

    Defaults to the critical grid with one full alias period (N = L).
    """
    grid = f.grid
    if pair.grid != grid:
        raise ValueError("window pair and signal live on different grids")
    if freqs is None:
        freqs = FrequencyGrid.critical(grid.L, grid.B)
    if freqs.mode == "critical" and abs(freqs.B - grid.B) > 1e-12 * grid.B:
        raise ValueError("frequency grid was built for a different half-width B")
    _validate_nodes(grid, pair, nodes)
    omegas = freqs.omegas
    mags = np.empty((2, len(nodes.times), len(omegas)), dtype=float)
    for ti, t in enumerate(nodes.times):
        k_lo = _segment_start(grid, t)
        k = np.arange(k_lo, k_lo + grid.L)
        x = (k - grid.origin) * grid.delta
        u = x - t
        aligned = grid.is_multiple(t)
        fv = _gather(f.samples, k_lo, grid.L)
        E = np.exp(-2j * np.pi * np.outer(x, omegas))
        for wi, wname in enumerate(WINDOW_NAMES):
            w = _window_slot_values(pair, wname, aligned, u)
            mags[wi, ti] = np.abs(grid.delta * ((fv * np.conj(w)) @ E))
    mags.setflags(write=False)
    return MeasurementSet(pair=pair, nodes=nodes, freqs=freqs, mags=mags)


def measure_batch(
    samples_matrix: np.ndarray,
    grid: GridSpec,
    pair: WindowPair,
    nodes: TimeNodes,
    freqs: Optional[FrequencyGrid] = None,
) -> np.ndarray:
    """Vectorized magnitudes for many signals sharing one grid.

    samples_matrix has shape (n_signals, horizon); the result has shape
    (n_signals, 2, n_nodes, n_bins).  Used by the brute-force oracles, where
    per-signal measure() calls would dominate the runtime.
    """
    if freqs is None:
        freqs = FrequencyGrid.critical(grid.L, grid.B)
    _validate_nodes(grid, pair, nodes)
    omegas = freqs.omegas
    n_sig = samples_matrix.shape[0]
    mags = np.empty((n_sig, 2, len(nodes.times), len(omegas)), dtype=float)
    for ti, t in enumerate(nodes.times):
        k_lo = _segment_start(grid, t)
        k = np.arange(k_lo, k_lo + grid.L)
        x = (k - grid.origin) * grid.delta
        u = x - t
        aligned = grid.is_multiple(t)
        fv = _gather(samples_matrix, k_lo, grid.L)
        E = np.exp(-2j * np.pi * np.outer(x, omegas))
        for wi, wname in enumerate(WINDOW_NAMES):
            w = _window_slot_values(pair, wname, aligned, u)
            mags[:, wi, ti, :] = np.abs(grid.delta * ((fv * np.conj(w)) @ E))
    return mags


def check_difference_identity(f: Signal, pair: WindowPair, t: float, n: int) -> float:
    """Defect of the exact two-window identity at critical bin n:

        |V_psi(t, omega_n)|  ==  |e^{2 i pi t b} V_phi(t, omega_n + b) - V_phi(t, omega_n)|

    Holds algebraically for every real t, so the defect is pure roundoff.
    """
    B = f.grid.B
    omega = n / (4.0 * B)
    lhs = abs(stft_value(f, pair, "psi", t, omega))
    v1 = stft_value(f, pair, "phi", t, omega + pair.b)
    v0 = stft_value(f, pair, "phi", t, omega)
    rhs = abs(np.exp(2j * np.pi * t * pair.b) * v1 - v0)
    return abs(lhs - rhs)

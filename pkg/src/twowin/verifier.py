"""Brute-force oracles that cross-check recovery against ground truth.

The central tool enumerates a small signal family, groups members by a
quantized measurement fingerprint, and checks every within-group pair for
equivalence.  A pair that shares measurements without being equivalent is a
uniqueness violation; whether "equivalent" admits the conjugate reflection
depends on the node set, since a bare lattice cannot see that ambiguity.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .signal_model import GridSpec, Signal, equivalent_up_to_phase
from .window_engine import WindowPair
from .stft_engine import (
    FrequencyGrid,
    MeasurementSet,
    TimeNodes,
    _gather,
    _segment_start,
    measure,
    measure_batch,
    windowed_segment,
)
from .local_recovery import slot_reflect

#: Fingerprint quantum: coarser than measurement roundoff (~1e-10), finer
#: than the gaps between genuinely different magnitude patterns seen at this
#: scale.  Tunable if a family with pathologically close classes turns up.
FINGERPRINT_QUANTUM = 1e-7

ORACLE_CAP = 1_000_000

#: At most this many violating pairs are materialized as Signals; the count
#: field still reports all of them.
VIOLATION_CAP = 64

EQUIV_TOL = 1e-8


def measurements_equal(
    m1: MeasurementSet, m2: MeasurementSet, tol: float = 1e-10
) -> Tuple[bool, float]:
    """Sup-norm comparison of two measurement sets over identical indices."""
    t1, t2 = m1.nodes.times, m2.nodes.times
    if len(t1) != len(t2) or any(abs(a - b) > 1e-12 for a, b in zip(t1, t2)):
        raise ValueError("measurement sets index different node times")
    if not np.array_equal(m1.freqs.ns, m2.freqs.ns):
        raise ValueError("measurement sets index different frequency bins")
    dev = float(np.max(np.abs(m1.mags - m2.mags))) if m1.mags.size else 0.0
    return dev <= tol, dev


def _phase_residual(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 and nv == 0.0:
        return 0.0
    ip = np.vdot(v, u)
    lam = ip / abs(ip) if abs(ip) > 0 else 1.0
    return float(np.linalg.norm(u - lam * v)) / float(np.hypot(nu, nv))


def _reflection_residual(u: np.ndarray, v: np.ndarray) -> float:
    """Residual of v against the support-aligned conjugate reversal of u."""
    scale = max(float(np.max(np.abs(u))), float(np.max(np.abs(v))))
    if scale == 0.0:
        return 0.0
    su = np.nonzero(np.abs(u) > 1e-12 * scale)[0]
    sv = np.nonzero(np.abs(v) > 1e-12 * scale)[0]
    if su.size == 0 or sv.size == 0:
        return np.inf
    if su[-1] - su[0] != sv[-1] - sv[0]:
        return np.inf
    mirror = su[0] + sv[-1]
    w = np.zeros_like(v)
    idx = np.arange(sv[0], sv[-1] + 1)
    w[idx] = np.conj(u[mirror - idx])
    return _phase_residual(w, v)


def pair_equivalent(
    u: np.ndarray, v: np.ndarray, allow_reflection: bool, tol: float = EQUIV_TOL
) -> bool:
    if _phase_residual(u, v) <= tol:
        return True
    return allow_reflection and _reflection_residual(u, v) <= tol


@dataclass(frozen=True)
class OracleConfig:
    grid: GridSpec
    pair: WindowPair
    nodes: TimeNodes
    freqs: Optional[FrequencyGrid] = None


@dataclass(frozen=True)
class OracleReport:
    description: str
    instance_count: int
    class_count: int
    violations: Tuple[Tuple[Signal, Signal], ...]
    violation_count: int
    elapsed: float

    @property
    def unique(self) -> bool:
        return self.violation_count == 0


def uniqueness_oracle(
    config: OracleConfig,
    samples: np.ndarray,
    description: str = "",
    violation_cap: int = VIOLATION_CAP,
) -> OracleReport:
    """Exhaustive measurement-collision scan over a family of sample rows.

    Equivalence is global phase, plus the support-aligned conjugate reversal
    when the nodes form a bare lattice (no anchor, no second line), matching
    what such measurements can possibly determine.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.ndim != 2 or samples.shape[1] != config.grid.horizon:
        raise ValueError(
            f"family must be (n, {config.grid.horizon}) sample rows, got {samples.shape}"
        )
    n = samples.shape[0]
    if n > ORACLE_CAP:
        raise ValueError(f"family too large: {n} instances exceeds the {ORACLE_CAP} cap")
    start = time.perf_counter()
    mags = measure_batch(samples, config.grid, config.pair, config.nodes, config.freqs)
    keys = np.round(mags.reshape(n, -1) / FINGERPRINT_QUANTUM).astype(np.int64)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(keys[i].tobytes(), []).append(i)
    allow_reflection = config.nodes.mode == "lattice"
    violations: List[Tuple[Signal, Signal]] = []
    violation_count = 0
    for members in groups.values():
        for ai in range(len(members) - 1):
            for bi in range(ai + 1, len(members)):
                i, j = members[ai], members[bi]
                if not pair_equivalent(samples[i], samples[j], allow_reflection):
                    violation_count += 1
                    if len(violations) < violation_cap:
                        violations.append(
                            (Signal(config.grid, samples[i].copy()),
                             Signal(config.grid, samples[j].copy()))
                        )
    return OracleReport(
        description=description,
        instance_count=n,
        class_count=len(groups),
        violations=tuple(violations),
        violation_count=violation_count,
        elapsed=time.perf_counter() - start,
    )


def alphabet_family(
    grid: GridSpec,
    support_cells: Sequence[int],
    alphabet: Sequence[complex] = (0, 1, 1j, -1),
) -> Tuple[np.ndarray, str]:
    """All signals with the given values on the given cells, zero elsewhere."""
    cells = list(support_cells)
    letters = np.asarray(alphabet, dtype=np.complex128)
    n = len(letters) ** len(cells)
    digits = np.stack(
        np.unravel_index(np.arange(n), (len(letters),) * len(cells)), axis=1
    )
    samples = np.zeros((n, grid.horizon), dtype=np.complex128)
    samples[:, cells] = letters[digits]
    desc = f"{len(letters)}-letter alphabet on {len(cells)} cells ({n} signals)"
    return samples, desc


def trig_family(
    grid: GridSpec,
    T: float,
    degree: int,
    alphabet: Sequence[complex] = (0, 1, 1j, -1, -1j),
) -> Tuple[np.ndarray, np.ndarray, str]:
    """All T-periodic exponential sums of the given degree with quantized
    coefficients, sampled on the grid.  Returns (samples, coefficients, desc);
    coefficient columns run k = -degree .. degree.
    """
    ks = np.arange(-degree, degree + 1)
    letters = np.asarray(alphabet, dtype=np.complex128)
    n = len(letters) ** len(ks)
    digits = np.stack(np.unravel_index(np.arange(n), (len(letters),) * len(ks)), axis=1)
    coeffs = letters[digits]
    E = np.exp(2j * np.pi * np.outer(ks, grid.coords()) / T)
    samples = coeffs @ E
    desc = (
        f"trig polynomials of degree {degree}, {len(letters)}-level "
        f"coefficients, period {T} ({n} signals)"
    )
    return samples, coeffs, desc


def is_conjugate_twist_mate(
    cf: np.ndarray, cg: np.ndarray, tol: float = EQUIV_TOL
) -> bool:
    """Whether cg_k = nu * zeta^k * conj(cf_k) for some unimodular nu, zeta.

    This is the coefficient form of a conjugate reflection about some time
    center; every two-line collision of periodic signals must have it.
    Coefficient columns are indexed k = -(len-1)/2 .. +(len-1)/2.
    """
    cf = np.asarray(cf, dtype=np.complex128)
    cg = np.asarray(cg, dtype=np.complex128)
    if cf.shape != cg.shape:
        return False
    scale = max(float(np.max(np.abs(cf))), float(np.max(np.abs(cg))), 1e-300)
    live = np.abs(cf) > tol * scale
    if not np.array_equal(live, np.abs(cg) > tol * scale):
        return False
    ks = np.nonzero(live)[0] - (len(cf) - 1) // 2
    if ks.size == 0:
        return True
    vals_f = np.conj(cf[live])
    vals_g = cg[live]
    if np.max(np.abs(np.abs(vals_f) - np.abs(vals_g))) > tol * scale:
        return False
    ratios = vals_g / vals_f
    if ks.size == 1:
        return True
    d = int(ks[1] - ks[0])
    base = ratios[1] / ratios[0]
    for j in range(d):
        zeta = base ** (1.0 / d) * np.exp(2j * np.pi * j / d)
        nu = ratios[0] / zeta ** ks[0]
        if np.max(np.abs(vals_g - nu * zeta ** ks.astype(float) * vals_f)) <= tol * scale:
            return True
    return False


def per_window_gluing_check(
    f: Signal,
    g: Signal,
    pair: WindowPair,
    nodes: TimeNodes,
    tol: float = EQUIV_TOL,
) -> bool:
    """Whether g looks like f, per node window, up to a free phase and an
    optional slot reflection in each window separately.  Non-overlapping
    windows (step a > B) cannot pin these choices to each other, which is
    exactly how their collisions arise.
    """
    scale = max(
        float(np.max(np.abs(f.samples))), float(np.max(np.abs(g.samples))), 1e-300
    )
    for t in nodes.times:
        hf = windowed_segment(f, pair, t)
        hg = windowed_segment(g, pair, t)
        if max(np.max(np.abs(hf)), np.max(np.abs(hg))) <= 1e-12 * scale:
            continue
        if _phase_residual(hf, hg) <= tol:
            continue
        mate = slot_reflect(hf)
        if mate is not None and _phase_residual(mate, hg) <= tol:
            continue
        return False
    return True


def _raw_segment(f: Signal, t: float) -> np.ndarray:
    k_lo = _segment_start(f.grid, t)
    return _gather(f.samples, k_lo, f.grid.L)


def lemma32_equivalence_check(
    f: Signal, g: Signal, pair: WindowPair, t: float, trials: int = 8
) -> bool:
    """Truth of the single-node biconditional: the two windows' magnitudes at
    t agree exactly when the signals restricted to the node window agree up
    to phase or up to a conjugate reflection about t.

    The check is repeated under random global phase rotations of g, which
    change neither side; all repetitions must agree.
    """
    nodes = TimeNodes(mode="lattice", times=(float(t),))
    mf = measure(f, pair, nodes)
    hf = _raw_segment(f, t)
    rng = np.random.default_rng(0)
    outcomes = []
    for trial in range(trials + 1):
        gs = g if trial == 0 else Signal(
            g.grid, g.samples * np.exp(2j * np.pi * rng.random())
        )
        mg = measure(gs, pair, nodes)
        scale = max(float(np.max(mf.mags)), float(np.max(mg.mags)), 1.0)
        lhs = float(np.max(np.abs(mf.mags - mg.mags))) <= 1e-10 * scale
        hg = _raw_segment(gs, t)
        rhs = _phase_residual(hf, hg) <= EQUIV_TOL
        if not rhs:
            mate = slot_reflect(hg)
            rhs = mate is not None and _phase_residual(hf, mate) <= EQUIV_TOL
        outcomes.append(lhs == rhs)
    return all(outcomes)


@dataclass(frozen=True)
class RefinementReport:
    steps: Tuple[float, ...]
    deviations: Tuple[float, ...]
    forced_at: Optional[int]
    phase_equivalent: bool


def semidiscrete_refinement_check(
    f: Signal,
    g: Signal,
    pair: WindowPair,
    refine_levels: int = 4,
    a0: Optional[float] = None,
    tol: float = 1e-10,
) -> RefinementReport:
    """Stand-in for measurements over all real times: halve the node step
    per level and report the first level whose measurements separate the
    pair (or level 0 if the pair was equivalent to begin with).

    Only nodes whose windows sit fully inside the horizon are used, so the
    finite-span truncation of an unbounded signal cannot masquerade as a
    separation.  forced_at None means the pair survives every scanned
    level, the signature of a genuine all-time counterexample.
    """
    grid = f.grid
    if a0 is None:
        a0 = grid.B
    x_lo = float(grid.x(0))
    x_hi = float(grid.x(grid.horizon - 1)) + grid.delta
    phase_eq = equivalent_up_to_phase(f, g)
    forced = 0 if phase_eq else None
    steps: List[float] = []
    devs: List[float] = []
    for level in range(refine_levels):
        step = a0 / 2 ** level
        m_lo = int(np.ceil((x_lo + grid.B) / step - 1e-9))
        m_hi = int(np.floor((x_hi - grid.B) / step + 1e-9))
        steps.append(step)
        if m_lo > m_hi:
            devs.append(0.0)
            continue
        nodes = TimeNodes.lattice(step, range(m_lo, m_hi + 1))
        mf = measure(f, pair, nodes)
        mg = measure(g, pair, nodes)
        dev = float(np.max(np.abs(mf.mags - mg.mags)))
        devs.append(dev)
        scale = max(float(np.max(mf.mags)), 1.0)
        if forced is None and dev > tol * scale:
            forced = level
    return RefinementReport(
        steps=tuple(steps),
        deviations=tuple(devs),
        forced_at=forced,
        phase_equivalent=phase_eq,
    )

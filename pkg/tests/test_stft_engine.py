import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twowin import (
    FrequencyGrid,
    GridSpec,
    OffGridError,
    Signal,
    TimeNodes,
    build_window,
    check_difference_identity,
    default_anchor,
    measure,
    measure_batch,
    stft_value,
    windowed_segment,
)


GRID = GridSpec(B=1.0, L=4, origin=8, horizon=16)
PAIR = build_window("rectangular", GRID)


def test_critical_frequency_grid():
    fg = FrequencyGrid.critical(4, B=1.0)
    np.testing.assert_array_equal(fg.ns, np.arange(-4, 4))
    np.testing.assert_allclose(fg.omegas, np.arange(-4, 4) / 4.0)
    assert len(fg) == 8
    assert fg.meets_density
    with pytest.raises(ValueError):
        FrequencyGrid.critical(0, B=1.0)


def test_custom_frequency_grid_density():
    dense = FrequencyGrid.custom([k / 4.0 for k in range(1, 9)], B=1.0)
    assert dense.meets_density
    sparse = FrequencyGrid.custom([1.0, 2.0], B=1.0)
    assert not sparse.meets_density
    with pytest.raises(ValueError):
        FrequencyGrid.custom([], B=1.0)
    with pytest.raises(ValueError):
        dense.ns  # integer bins only exist on the critical grid


def test_time_node_modes():
    nodes = TimeNodes.lattice(0.5, range(-2, 3))
    assert nodes.times == (-1.0, -0.5, 0.0, 0.5, 1.0)
    assert nodes.a == 0.5
    with pytest.raises(ValueError):
        TimeNodes.lattice(0.0, range(3))
    with pytest.raises(ValueError):
        TimeNodes.two_lines(1.0, 1.0)
    with pytest.raises(ValueError):
        TimeNodes(mode="grid", times=(0.0,))
    with pytest.raises(ValueError):
        TimeNodes.lattice_plus_anchor(1.0, range(3), t0=2.0)  # anchor on a node


def test_lattice_covering_spans_horizon():
    for a in (1.0, 0.5):
        nodes = TimeNodes.lattice_covering(GRID, a)
        times = np.array(nodes.times)
        assert np.allclose(np.diff(times), a)
        x = GRID.coords()
        # every cell falls inside at least one half-open window
        covered = ((x[None, :] >= times[:, None] - GRID.B)
                   & (x[None, :] < times[:, None] + GRID.B)).any(axis=0)
        assert covered.all()


def test_default_anchor_is_off_lattice():
    t0 = default_anchor(0.5, 16)
    assert t0 == 0.5 * (0.5 + 0.5 / 16)
    nodes = TimeNodes.lattice_covering(GRID, 0.5, anchor=t0)
    assert nodes.mode == "lattice_plus_anchor"
    assert nodes.anchor == t0
    assert nodes.anchor_index == len(nodes.times) - 1
    assert len(nodes.lattice_times) == len(nodes.times) - 1


def test_measure_shapes_and_zero_signal(make_signal):
    nodes = TimeNodes.lattice_covering(GRID, 1.0)
    ms = measure(make_signal(GRID, 0), PAIR, nodes)
    assert ms.mags.shape == (2, len(nodes.times), 2 * GRID.L)
    assert ms.freqs.mode == "critical" and ms.freqs.N == GRID.L
    zero = Signal(GRID, np.zeros(16))
    assert np.all(measure(zero, PAIR, nodes).mags == 0.0)


def test_measure_matches_pointwise_transform(make_signal):
    f = make_signal(GRID, 11)
    nodes = TimeNodes.lattice_covering(GRID, 0.5)
    ms = measure(f, PAIR, nodes)
    for ti, t in enumerate(nodes.times):
        for bi, omega in enumerate(ms.freqs.omegas):
            want = abs(stft_value(f, PAIR, "phi", t, omega))
            assert ms.mags[0, ti, bi] == pytest.approx(want, abs=1e-13)


def test_half_open_window_convention():
    ones = Signal(GRID, np.ones(16))
    seg = windowed_segment(ones, PAIR, 0.0)
    # cells at x = -1, -0.5, 0, 0.5: the +B edge is excluded, the -B edge kept
    np.testing.assert_allclose(seg, np.ones(4))
    val = stft_value(ones, PAIR, "phi", 0.0, 0.0)
    assert val == pytest.approx(GRID.delta * 4)


def test_off_grid_node_analytic_vs_user():
    f = Signal(GRID, np.arange(16) * (0.3 - 0.1j))
    t = 0.3
    # analytic profiles evaluate anywhere; check against the defining sum
    k = np.arange(GRID.horizon)
    x = GRID.x(k)
    inside = (x - t >= -1.0) & (x - t < 1.0)
    omega = 0.25
    want = GRID.delta * np.sum(
        f.samples[inside]
        * np.conj(PAIR.phi_at(x[inside] - t))
        * np.exp(-2j * np.pi * x[inside] * omega)
    )
    assert stft_value(f, PAIR, "phi", t, omega) == pytest.approx(want)
    user = build_window("user", GRID, samples=np.ones(4))
    with pytest.raises(OffGridError):
        stft_value(f, user, "phi", t, omega)


def test_measure_batch_agrees_with_measure(make_signal):
    nodes = TimeNodes.lattice_covering(GRID, 1.0)
    rows = np.stack([make_signal(GRID, s).samples for s in range(5)])
    batch = measure_batch(rows, GRID, PAIR, nodes)
    for i in range(5):
        single = measure(Signal(GRID, rows[i]), PAIR, nodes)
        np.testing.assert_allclose(batch[i], single.mags, atol=1e-13)


def test_measurement_rows_are_deterministic(make_signal):
    nodes = TimeNodes.lattice(1.0, range(-1, 2))
    ms = measure(make_signal(GRID, 2), PAIR, nodes)
    rows = list(ms.to_rows())
    assert len(rows) == 2 * 3 * 8
    assert rows[0][0] == "phi" and rows[-1][0] == "psi"
    assert rows == list(ms.to_rows())


def test_difference_identity_small_defect(make_signal):
    f = make_signal(GRID, 9)
    for t in (-1.0, 0.0, 1.0):
        for n in (-4, -1, 0, 3):
            assert check_difference_identity(f, PAIR, t, n) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 9999), theta=st.floats(0.0, 2 * np.pi))
def test_magnitudes_ignore_global_phase(seed, theta):
    rng = np.random.default_rng(seed)
    f = Signal(GRID, rng.standard_normal(16) + 1j * rng.standard_normal(16))
    g = f.shifted_phase(np.exp(1j * theta))
    nodes = TimeNodes.lattice(1.0, range(-1, 2))
    np.testing.assert_allclose(
        measure(f, PAIR, nodes).mags, measure(g, PAIR, nodes).mags, atol=1e-12
    )

"""Unit and property tests for windows, configurations, and cell measures."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyaflow import (
    CellMeasure,
    PointConfig,
    StepFunction,
    Window,
    cell_counts,
    cell_measure_from_json,
    cell_measure_to_json,
    config_diff,
    config_from_json,
    config_integrate,
    config_leq,
    config_to_json,
    empty_config,
    superpose,
)

W = Window(0.0, 1.0, 4)


def make_config(locs, mults, window=W):
    return PointConfig(
        window,
        np.asarray(locs, dtype=np.float64),
        np.asarray(mults, dtype=np.int64),
    )


@st.composite
def configs(draw, window=W, max_atoms=6, max_mult=4):
    n = draw(st.integers(min_value=0, max_value=max_atoms))
    locs = draw(
        st.lists(
            st.integers(min_value=0, max_value=999),
            min_size=n,
            max_size=n,
            unique=True,
        )
    )
    locs = sorted(x / 1000.0 for x in locs)
    mults = draw(st.lists(st.integers(1, max_mult), min_size=n, max_size=n))
    return make_config(locs, mults, window)


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------


def test_window_validation():
    with pytest.raises(ValueError):
        Window(1.0, 0.0, 4)
    with pytest.raises(ValueError):
        Window(0.0, 1.0, 0)


def test_window_cell_of_maps_midpoints_and_edges():
    w = Window(0.0, 2.0, 4)
    locs = np.array([0.0, 0.25, 0.5, 1.999])
    assert list(w.cell_of(locs)) == [0, 0, 1, 3]
    assert w.width == pytest.approx(0.5)
    assert np.allclose(w.edges(), [0.0, 0.5, 1.0, 1.5, 2.0])


# ---------------------------------------------------------------------------
# configurations
# ---------------------------------------------------------------------------


def test_config_rejects_invalid_input():
    with pytest.raises(ValueError):
        make_config([0.5, 0.2], [1, 1])  # not increasing
    with pytest.raises(ValueError):
        make_config([0.2, 0.2], [1, 1])  # not strict
    with pytest.raises(ValueError):
        make_config([1.5], [1])  # outside the window
    with pytest.raises(ValueError):
        make_config([0.5], [0])  # multiplicity < 1
    with pytest.raises(ValueError):
        make_config([0.1, 0.2], [1])  # length mismatch
    with pytest.raises(ValueError):
        make_config([np.nan], [1])


def test_config_arrays_are_frozen():
    c = make_config([0.25, 0.75], [1, 2])
    with pytest.raises(ValueError):
        c.locations[0] = 0.9
    with pytest.raises(ValueError):
        c.multiplicities[0] = 5


def test_config_totals_and_equality():
    c = make_config([0.25, 0.75], [1, 2])
    assert c.n_atoms == 2
    assert c.total() == 3
    assert c == make_config([0.25, 0.75], [1, 2])
    assert c != make_config([0.25, 0.75], [1, 3])
    assert empty_config(W).total() == 0
    assert empty_config(W).n_atoms == 0


def test_superpose_merges_shared_atoms():
    a = make_config([0.25, 0.75], [1, 2])
    b = make_config([0.25, 0.5], [3, 1])
    s = superpose(a, b)
    assert list(s.locations) == [0.25, 0.5, 0.75]
    assert list(s.multiplicities) == [4, 1, 2]
    assert superpose(a, b) == superpose(b, a)
    with pytest.raises(ValueError):
        superpose(a, make_config([0.25], [1], Window(0.0, 1.0, 2)))


def test_config_diff_inverts_superpose():
    a = make_config([0.25, 0.75], [1, 2])
    b = make_config([0.25, 0.5], [3, 1])
    assert config_diff(superpose(a, b), b) == a
    with pytest.raises(ValueError):
        config_diff(a, b)  # b is not dominated by a


def test_config_leq_is_a_partial_order():
    a = make_config([0.25, 0.75], [1, 2])
    b = make_config([0.25, 0.5, 0.75], [1, 1, 3])
    assert config_leq(a, a)
    assert config_leq(a, b) and not config_leq(b, a)
    assert config_leq(empty_config(W), a)
    # locations must match exactly, not just cells
    c = make_config([0.26, 0.75], [1, 2])
    assert not config_leq(c, b)


@given(configs(), configs())
@settings(max_examples=200, deadline=None)
def test_superpose_dominates_both_parts(a, b):
    s = superpose(a, b)
    assert s.total() == a.total() + b.total()
    assert config_leq(a, s) and config_leq(b, s)
    assert config_diff(s, b) == a


@given(configs(), configs(), configs())
@settings(max_examples=100, deadline=None)
def test_config_leq_transitive(a, b, c):
    ab = superpose(a, b)
    abc = superpose(ab, c)
    assert config_leq(a, ab) and config_leq(ab, abc) and config_leq(a, abc)


@given(configs())
@settings(max_examples=200, deadline=None)
def test_cell_counts_and_json_round_trip(c):
    counts = cell_counts(c)
    assert counts.shape == (W.cells,)
    assert counts.sum() == c.total()
    assert config_from_json(W, config_to_json(c)) == c


@given(configs(), configs())
@settings(max_examples=100, deadline=None)
def test_cell_counts_additive(a, b):
    assert np.array_equal(
        cell_counts(superpose(a, b)), cell_counts(a) + cell_counts(b)
    )


# ---------------------------------------------------------------------------
# cell measures and step functions
# ---------------------------------------------------------------------------


def test_cell_measure_validation_and_scaling():
    with pytest.raises(ValueError):
        CellMeasure(W, np.array([1.0, -0.5, 0.0, 0.0]))
    with pytest.raises(ValueError):
        CellMeasure(W, np.array([1.0, 2.0]))  # wrong length
    m = CellMeasure(W, np.array([1.0, 0.5, 0.0, 2.0]))
    assert m.total() == pytest.approx(3.5)
    assert m.scaled(2.0).masses[3] == pytest.approx(4.0)
    with pytest.raises(ValueError):
        m.masses[0] = 9.0


def test_cell_measure_json_round_trip():
    m = CellMeasure(W, np.array([1.0, 0.5, 0.0, 2.0]))
    assert cell_measure_from_json(cell_measure_to_json(m)) == m


def test_step_function_evaluates_per_cell():
    f = StepFunction(W, np.array([1.0, 2.0, 3.0, 4.0]))
    assert np.allclose(f(np.array([0.1, 0.3, 0.6, 0.9])), [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        StepFunction(W, np.array([1.0, 2.0]))


def test_config_integrate_sums_mass_weighted_values():
    f = StepFunction(W, np.array([1.0, 2.0, 3.0, 4.0]))
    c = make_config([0.1, 0.3, 0.9], [2, 1, 3])
    assert config_integrate(c, f) == pytest.approx(2 * 1.0 + 1 * 2.0 + 3 * 4.0)
    assert config_integrate(empty_config(W), f) == 0.0


@given(configs(), configs())
@settings(max_examples=100, deadline=None)
def test_config_integrate_additive_under_superposition(a, b):
    f = StepFunction(W, np.array([0.5, 1.5, 0.0, 2.0]))
    total = config_integrate(superpose(a, b), f)
    assert total == pytest.approx(config_integrate(a, f) + config_integrate(b, f))

"""Tests for gauges, their measures, and the distinguished sets."""

import math

import numpy as np
import pytest

from displace.gauge import (CumulativeQuadrature, DistinguishedSets, Gauge,
                            GaugeError)


def jump_gauge():
    """Zero density with a single jump of 0.5 at tau = 0.5."""
    return Gauge((0.0, 1.0), lambda t: 0.0, jumps=((0.5, 0.5),),
                 density_source="0")


def mixed_gauge():
    """Density 2t+1 with jumps at 0.25 and 0.75."""
    return Gauge((0.0, 1.0), lambda t: 2.0 * t + 1.0,
                 jumps=((0.25, 0.5), (0.75, 1.0)), density_source="2*t + 1")


def test_identity_gauge_values():
    g = Gauge.identity((0.0, 1.0))
    assert g(0.0) == 0.0
    for t in (0.1, 0.5, 0.75, 1.0):
        assert math.isclose(g(t), t, rel_tol=0.0, abs_tol=1e-12)
    assert math.isclose(g.measure(0.2, 0.7), 0.5, abs_tol=1e-12)


def test_left_continuity_convention_at_jump():
    g = jump_gauge()
    assert g(0.5) == 0.0
    assert g(0.6) == 0.5
    assert g(1.0) == 0.5
    assert g.right_limit(0.5) - g(0.5) == 0.5
    assert g.jump_at(0.5) == 0.5
    assert g.jump_at(0.3) == 0.0


def test_left_limit_approaches_gauge_value_at_jump():
    g = mixed_gauge()
    for h in (1e-4, 1e-6, 1e-8):
        assert abs(g(0.25 - h) - g(0.25)) <= 4.0 * h


def test_singleton_measure_is_exact_atom():
    g = jump_gauge()
    assert g.measure(0.5, kind="{}") == 0.5
    assert g.measure(0.25, kind="{}") == 0.0


def test_interval_kind_formulas():
    g = jump_gauge()
    # the only mass is the atom at 0.5
    assert g.measure(0.2, 0.5, "[)") == 0.0
    assert g.measure(0.2, 0.5, "[]") == 0.5
    assert g.measure(0.5, 0.9, "[)") == 0.5
    assert g.measure(0.5, 0.9, "()") == 0.0
    assert g.measure(0.2, 0.9, "(]") == 0.5
    assert g.measure(0.5, 0.5, "[]") == 0.5


def test_measure_kinds_are_nonnegative_and_consistent():
    g = mixed_gauge()
    rng = np.random.default_rng(7)
    for _ in range(300):
        c, d = sorted(rng.uniform(0.0, 1.0, size=2))
        for kind in ("[)", "()", "[]", "(]"):
            assert g.measure(c, d, kind) >= -1e-15
        closed = g.measure(c, d, "[]")
        half = g.measure(c, d, "[)")
        assert abs(closed - (half + g.measure(d, kind="{}"))) <= 1e-12
        open_ = g.measure(c, d, "()")
        assert abs(half - (open_ + g.measure(c, kind="{}"))) <= 1e-12


def test_finite_additivity_of_half_open_intervals():
    g = mixed_gauge()
    rng = np.random.default_rng(11)
    for _ in range(300):
        c, d, e = sorted(rng.uniform(0.0, 1.0, size=3))
        lhs = g.measure(c, d) + g.measure(d, e)
        assert abs(lhs - g.measure(c, e)) <= 1e-12


def test_measure_monotone_in_the_interval():
    g = mixed_gauge()
    rng = np.random.default_rng(13)
    for _ in range(200):
        c, d = sorted(rng.uniform(0.0, 1.0, size=2))
        pad_lo = rng.uniform(0.0, c)
        pad_hi = rng.uniform(d, 1.0)
        assert g.measure(c, d) <= g.measure(pad_lo, pad_hi) + 1e-12


def test_gauge_evaluation_is_monotone_after_random_insertion_order():
    """Cached values must be jointly monotone no matter the query order."""
    g = Gauge((0.0, 1.0), lambda t: 2.0 + math.sin(100.0 * t),
              density_source="2 + sin(100*t)")
    rng = np.random.default_rng(3)
    ts = rng.uniform(0.0, 1.0, size=1500)
    values = {float(t): g(float(t)) for t in ts}
    ordered = sorted(values)
    for s, t in zip(ordered, ordered[1:]):
        assert values[s] <= values[t]


def test_increments_telescope_exactly():
    g = mixed_gauge()
    ts = [0.1, 0.2, 0.4, 0.6, 0.9]
    total = sum(g(t2) - g(t1) for t1, t2 in zip(ts, ts[1:]))
    assert total == g(ts[-1]) - g(ts[0])


def test_jump_at_right_end_is_allowed_and_half_open_excludes_it():
    g = Gauge((0.0, 1.0), lambda t: 1.0, jumps=((1.0, 2.0),),
              density_source="1")
    assert math.isclose(g(1.0), 1.0, abs_tol=1e-12)
    assert math.isclose(g.right_limit(1.0), 3.0, abs_tol=1e-12)
    assert math.isclose(g.measure(0.0, 1.0, "[)"), 1.0, abs_tol=1e-12)
    assert math.isclose(g.measure(0.0, 1.0, "[]"), 3.0, abs_tol=1e-12)


def test_constructor_rejects_bad_data():
    with pytest.raises(GaugeError):
        Gauge((1.0, 0.0), lambda t: 1.0)
    with pytest.raises(GaugeError):
        Gauge((0.0, 1.0), lambda t: 1.0, jumps=((1.5, 1.0),))
    with pytest.raises(GaugeError):
        Gauge((0.0, 1.0), lambda t: 1.0, jumps=((0.5, 0.0),))
    with pytest.raises(GaugeError):
        Gauge((0.0, 1.0), lambda t: 1.0, jumps=((0.5, 1.0), (0.5, 1.0)))
    with pytest.raises(GaugeError):
        Gauge((0.0, 1.0), lambda t: 1.0, flats=((0.2, 0.1),))
    with pytest.raises(GaugeError):
        Gauge((0.0, 1.0), lambda t: 1.0, flats=((0.1, 0.4), (0.3, 0.6)))
    with pytest.raises(GaugeError):
        Gauge((0.0, 1.0), lambda t: 0.0, jumps=((0.3, 1.0),),
              flats=((0.2, 0.4),))
    with pytest.raises(GaugeError):
        Gauge((0.0, 1.0), lambda t: -1.0)


def test_evaluation_outside_domain_raises():
    g = Gauge.identity((0.0, 1.0))
    with pytest.raises(GaugeError):
        g(1.5)
    with pytest.raises(GaugeError):
        g(-0.1)
    with pytest.raises(GaugeError):
        g.measure(0.5, 0.2)
    with pytest.raises(GaugeError):
        g.measure(0.1, 0.5, "><")


def test_distinguished_sets_trivial_gauge():
    sets = Gauge.identity((0.0, 1.0)).distinguished_sets()
    assert sets.d_set == ()
    assert sets.c_set == ()
    assert sets.n_set == ()


def test_distinguished_sets_jump_only():
    sets = jump_gauge().distinguished_sets()
    assert sets.d_set == (0.5,)
    # zero density everywhere: constancy on both sides of the atom,
    # split at the jump, whose point belongs to d_set rather than n_set
    assert len(sets.c_set) == 2
    (l1, h1), (l2, h2) = sets.c_set
    assert (l1, h1) == (0.0, 0.5) and (l2, h2) == (0.5, 1.0)
    assert 0.5 not in sets.n_set
    assert set(sets.n_set) == {0.0, 1.0}
    assert sets.is_jump(0.5)
    assert not sets.excludes(0.5)
    assert sets.excludes(0.25)


def plateau_density(t):
    return max(0.0, t - 0.4) + max(0.0, 0.2 - t)


def test_declared_flat_is_reported_with_endpoints():
    g = Gauge((0.0, 1.0), plateau_density, flats=((0.2, 0.4),),
              density_source="max(0, t - 0.4) + max(0, 0.2 - t)")
    sets = g.distinguished_sets()
    assert any(lo <= 0.2 and hi >= 0.4 for lo, hi in sets.c_set)
    assert sets.excludes(0.3)
    assert not sets.excludes(0.5)
    # the flat carries no measure, nor do its endpoints
    assert abs(g.measure(0.2, 0.4, "()")) <= 1e-12
    for p in sets.n_set:
        assert g.measure(p, kind="{}") == 0.0


def test_flat_detection_without_declaration():
    g = Gauge((0.0, 1.0), plateau_density,
              density_source="max(0, t - 0.4) + max(0, 0.2 - t)")
    sets = g.distinguished_sets()
    assert len(sets.c_set) == 1
    lo, hi = sets.c_set[0]
    assert abs(lo - 0.2) < 2e-3
    assert abs(hi - 0.4) < 2e-3
    assert sets.excludes(0.3)
    assert not sets.excludes(0.1)


def test_detection_merges_with_declared_flat():
    g = Gauge((0.0, 1.0), plateau_density, flats=((0.2, 0.3),),
              density_source="max(0, t - 0.4) + max(0, 0.2 - t)")
    sets = g.distinguished_sets()
    assert len(sets.c_set) == 1
    lo, hi = sets.c_set[0]
    assert lo <= 0.2 and hi >= 0.4 - 2e-3


def test_exclusion_snap_radius():
    g = Gauge((0.0, 1.0), plateau_density, flats=((0.2, 0.4),),
              density_source="max(0, t - 0.4) + max(0, 0.2 - t)")
    sets = g.distinguished_sets()
    assert sets.excludes(0.2)
    assert sets.excludes(0.4 - 1e-13)
    assert sets.excludes(0.2 + 5e-13, snap=1e-12)


def test_json_round_trip():
    g = Gauge((0.0, 1.0), plateau_density,
              jumps=((0.5, 0.25), (0.8, 1.5)), flats=((0.2, 0.4),),
              density_source="max(0, t - 0.4) + max(0, 0.2 - t)")
    data = g.to_dict()
    assert data["domain"] == [0.0, 1.0]
    assert data["jumps"] == [[0.5, 0.25], [0.8, 1.5]]
    assert data["flats"] == [[0.2, 0.4]]
    back = Gauge.from_dict(data)
    for t in np.linspace(0.0, 1.0, 41):
        assert abs(back(float(t)) - g(float(t))) <= 1e-9
    assert back.jumps == g.jumps
    assert back.flats == g.flats


def test_to_dict_requires_expression_density():
    g = Gauge((0.0, 1.0), lambda t: 1.0)
    with pytest.raises(GaugeError):
        g.to_dict()


def test_from_dict_rejects_malformed_data():
    with pytest.raises(GaugeError):
        Gauge.from_dict({"density": "1"})
    with pytest.raises(GaugeError):
        Gauge.from_dict({"domain": [0.0, 1.0], "density": None})


def test_cumulative_quadrature_signed_integrand():
    """The running integral of a signed function must not be clamped."""
    cq = CumulativeQuadrature(lambda t: math.cos(20.0 * t), 0.0, 1.0,
                              tol=1e-12)
    rng = np.random.default_rng(5)
    ts = rng.uniform(0.0, 1.0, size=200)
    for t in ts:
        t = float(t)
        assert abs(cq.value(t) - math.sin(20.0 * t) / 20.0) <= 1e-9


def test_cumulative_quadrature_rejects_outside_queries():
    cq = CumulativeQuadrature(lambda t: 1.0, 0.0, 1.0)
    with pytest.raises(GaugeError):
        cq.value(2.0)


def test_distinguished_sets_serialization():
    sets = DistinguishedSets(d_set=(0.5,), c_set=((0.1, 0.2),), n_set=(0.1, 0.2))
    data = sets.to_dict()
    assert data == {"d_set": [0.5], "c_set": [[0.1, 0.2]], "n_set": [0.1, 0.2]}
    assert sets.o_set == {"intervals": ((0.1, 0.2),), "points": (0.1, 0.2)}

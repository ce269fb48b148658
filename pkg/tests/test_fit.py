from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle import heisenberg as hz
from ruelle import toral as tz
from ruelle.errors import InsufficientDecades, UsageError, ZeroSeries
from ruelle.fit import (
    CorrelationSeries,
    FitReport,
    default_window,
    estimate_phase,
    fit_rates,
    match_resonances,
)
from ruelle.functions import RealTestFunction, as_combination
from ruelle.resonances import ResonanceSet, heisenberg_resonances, pa_resonances
from ruelle.spectral import spectrum

N = np.arange(26)


def _series(values):
    return CorrelationSeries.from_values(values, exact=True)


def test_two_exponentials():
    rep = fit_rates(_series(2 * 0.8 ** N + 5 * 0.3 ** N), 2, (0, 25))
    assert rep.rates == pytest.approx([0.8, 0.3], abs=1e-6)
    assert [t.coefficient.real for t in rep.terms] == pytest.approx([2, 5], abs=1e-6)
    assert all(t.degree == 0 for t in rep.terms)


def test_polynomial_factor():
    rep = fit_rates(_series((1 + N) * 0.5 ** N), 1, (0, 25))
    assert rep.rates == pytest.approx([0.5], abs=1e-8)
    assert rep.terms[0].degree == 1
    assert [c.real for c in rep.terms[0].coefficients] == pytest.approx([1, 1], abs=1e-6)


def test_gaussian_heisenberg_leading_rate():
    g = as_combination(RealTestFunction.gaussian())
    s = hz.correlation_series(g, g, 2.0, 1.0, 25)
    rep = fit_rates(s, 1)
    assert abs(rep.rates[0] - 2 ** -0.5) / 2 ** -0.5 < 1e-3


def test_complex_phase():
    u = np.exp(0.7j)
    rep = fit_rates(_series((1 - 2j) * (0.6 * u) ** N + 0.5 * (0.15 * u) ** N), 2, (0, 25))
    assert rep.rates == pytest.approx([0.6, 0.15], rel=1e-6)
    assert rep.terms[0].phase == pytest.approx(0.7, abs=1e-8)
    assert abs(rep.terms[0].coefficient - (1 - 2j)) < 1e-6


def test_residuals_decrease_when_peeling():
    rep = fit_rates(_series(0.9 ** N + 3 * N * 0.5 ** N + 0.2 ** N), 3, (0, 25))
    norms = [t.residual_norm for t in rep.terms]
    assert all(b <= a for a, b in zip(norms, norms[1:]))
    assert norms[0] <= rep.initial_norm


@settings(max_examples=15, deadline=None)
@given(r1=st.floats(0.5, 0.95), q1=st.floats(0.1, 0.7), q2=st.floats(0.1, 0.7),
       c=st.lists(st.floats(0.5, 5.0), min_size=3, max_size=3),
       signs=st.lists(st.sampled_from([-1, 1]), min_size=3, max_size=3))
def test_three_term_recovery(r1, q1, q2, c, signs):
    rates = [r1, r1 * q1, r1 * q1 * q2]
    if rates[-1] < 1e-3:
        return
    coefs = [s * a for s, a in zip(signs, c)]
    y = sum(a * r ** N for a, r in zip(coefs, rates))
    rep = fit_rates(_series(y), 3, (0, 25))
    assert len(rep.terms) == 3
    for got, want in zip(rep.rates, rates):
        assert abs(got - want) / want < 1e-4
    for t, want in zip(rep.terms, coefs):
        assert abs(t.coefficient - want) / abs(want) < 1e-3


def test_peeling_residual_not_worse_than_remainder():
    y_main = 2 * 0.8 ** N + 5 * 0.3 ** N
    remainder = 0.01 * 0.05 ** N
    rep = fit_rates(_series(y_main + remainder), 2, (3, 25))
    fitted = sum(t.evaluate(N[3:]) for t in rep.terms)
    assert np.max(np.abs(y_main[3:] + remainder[3:] - fitted)) <= 2 * np.max(np.abs(remainder[3:]))


def test_errors():
    with pytest.raises(ZeroSeries):
        fit_rates(_series(np.zeros(26)), 1)
    with pytest.raises(InsufficientDecades):
        fit_rates(_series(0.8 ** N + 0.78 ** N), 2, (0, 25))
    with pytest.raises(UsageError):
        fit_rates(_series(0.5 ** N), 3, (20, 25))


def test_default_window():
    assert default_window(26) == (6, 25)
    assert default_window(10) == (3, 9)


def test_estimate_phase():
    assert estimate_phase((0.5 * np.exp(1.1j)) ** N) == pytest.approx(1.1, abs=1e-12)


def test_match_heisenberg_fit():
    g = as_combination(RealTestFunction.gaussian())
    rep = fit_rates(hz.correlation_series(g, g, 2.0, 1.0, 25), 2)
    predicted = heisenberg_resonances(2.0, None, 1, 3)
    m = match_resonances(rep, predicted)
    assert not m.unexplained
    assert [x.predicted_modulus for x in m.matches] == pytest.approx([2 ** -0.5, 2 ** -2.5])
    # the lam^(-3/2) entry has a vanishing coefficient for even f and g
    assert any(abs(float(predicted.entries[i].modulus) - 2 ** -1.5) < 1e-12 for i in m.unobserved)


def test_match_torus_zero_series():
    f, g = tz.random_pair(2)
    s = tz.correlate(f, g, tz.ToralAutomorphism.cat(), 40)
    with pytest.raises(ZeroSeries):
        fit_rates(s, 1)
    empty = FitReport((), (0, 40), 0, 0.0)
    m = match_resonances(empty, pa_resonances(spectrum([[2, 1], [1, 1]]), 2))
    assert m.matches == () and m.unobserved == (0,)


def test_unexplained_rate():
    rep = fit_rates(_series(0.6 ** N), 1, (0, 25))
    empty = ResonanceSet("none", "map", ())
    m = match_resonances(rep, empty)
    assert m.unexplained == (0,)
    assert m.to_json()["matches"][0]["status"] == "unexplained"


def test_csv_round_trip():
    s = CorrelationSeries.from_values((0.5 + 0.25j) ** N, meta={"system": "test"})
    back = CorrelationSeries.from_csv(s.to_csv())
    np.testing.assert_array_equal(back.values, s.values)
    assert back.meta == {"system": "test"}
    assert len(s.to_csv().strip().splitlines()) == 1 + 1 + 1 + len(N)  # schema, meta, header, rows
    with pytest.raises(UsageError):
        CorrelationSeries.from_csv("a,b\n1,2\n")


def test_series_validation():
    with pytest.raises(UsageError):
        CorrelationSeries((1, 2), np.zeros(2), np.zeros(2), (True, True))
    with pytest.raises(UsageError):
        CorrelationSeries((0, 1), np.zeros(3), np.zeros(2), (True, True))


def test_summary_table():
    rep = fit_rates(_series(2 * 0.8 ** N + 5 * 0.3 ** N), 2, (0, 25))
    text = rep.summary()
    assert "rate" in text and len(text.splitlines()) == 4
    assert math.isclose(rep.to_json()["terms"][0]["rate"], 0.8, rel_tol=1e-8)

from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle import toral as tz
from ruelle.errors import NonzeroMean, UsageError
from ruelle.resonances import pa_resonances
from ruelle.spectral import spectrum

CAT = tz.ToralAutomorphism.cat()
PHI = (1 + math.sqrt(5)) / 2
MATRICES = [((2, 1), (1, 1)), ((3, 1), (2, 1)), ((1, 1), (1, 2)), ((0, 1), (1, 3)),
            ((-2, 1), (1, -1)), ((5, 2), (2, 1)), ((3, 1), (1, 0))]


def _brute_escape(f, g, A, horizon=60):
    last = -1
    for n in range(horizon):
        if any(A.transpose_power(m, n) in g.coeffs for m in f.coeffs):
            last = n
    return last + 1


def test_constants_correlate_to_one():
    one = tz.TrigPolynomial.monomial((0, 0))
    s = tz.correlate(one, one, CAT, 10)
    assert s.values.tolist() == [1.0] * 11
    assert all(s.exact)


def test_single_orbit_example():
    f = tz.TrigPolynomial.monomial((1, 0))
    g = tz.TrigPolynomial.monomial((2, 1))
    s = tz.correlate(f, g, CAT, 8)
    assert s.values.tolist() == [0, 1, 0, 0, 0, 0, 0, 0, 0]
    assert tz.escape_time(f, g, CAT) == 2


def test_unstable_vector():
    assert CAT.pairing((1, 0)) == pytest.approx(PHI / math.sqrt(PHI ** 2 + 1), abs=1e-15)
    assert CAT.lam == pytest.approx(PHI ** 2, abs=1e-14)
    for M in MATRICES:
        A = tz.ToralAutomorphism(M)
        v = A.v_u
        np.testing.assert_allclose(np.array(M) @ v, A.lam * v, atol=1e-12 * A.lam_abs)
        w = A.v_s
        np.testing.assert_allclose(np.array(M) @ w, w / A.lam * A.det, atol=1e-12)


@pytest.mark.parametrize("M", MATRICES)
def test_diophantine_constant(M):
    A = tz.ToralAutomorphism(M)
    cA = A.diophantine_constant
    assert cA > 0
    for m1 in range(-30, 31):
        for m2 in range(-30, 31):
            if m1 or m2:
                assert abs(A.pairing((m1, m2))) * math.hypot(m1, m2) >= cA * (1 - 1e-12)


def test_rejects_non_hyperbolic():
    with pytest.raises(UsageError):
        tz.ToralAutomorphism(((1, 1), (0, 1)))
    with pytest.raises(UsageError):
        tz.ToralAutomorphism(((2, 1), (2, 1)))


def test_unstable_derivative():
    f = tz.TrigPolynomial.random(4)
    assert tz.unstable_derivative(f, CAT, 0) == f
    assert tz.unstable_derivative(tz.TrigPolynomial.monomial((0, 0)), CAT, 1).coeffs == {}
    Xf = tz.unstable_derivative(f, CAT, 1)
    parseval = math.fsum(abs(c) ** 2 * (2 * math.pi * CAT.pairing(m)) ** 2 for m, c in f.coeffs.items())
    assert Xf.l2_norm() ** 2 == pytest.approx(parseval, rel=1e-13)


def test_unstable_derivative_is_directional_derivative():
    f = tz.TrigPolynomial.random(9, radius=3)
    x = np.array([0.31, 0.77])
    h = 1e-6
    v = CAT.v_u
    fd = (f(x + h * v) - f(x - h * v)) / (2 * h)
    assert abs(tz.unstable_derivative(f, CAT, 1)(x) - fd) < 1e-5 * max(1.0, abs(fd))


def test_coboundary_round_trip():
    e = tz.TrigPolynomial.monomial((1, 0))
    u = tz.solve_coboundary(tz.unstable_derivative(e, CAT, 1), CAT, 1)
    assert set(u.coeffs) == {(1, 0)}
    assert abs(u.coeffs[(1, 0)] - 1) < 1e-14
    with pytest.raises(NonzeroMean):
        tz.solve_coboundary(tz.TrigPolynomial.monomial((0, 0)), CAT)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 3), real=st.booleans())
def test_coboundary_round_trip_property(seed, k, real):
    f = tz.TrigPolynomial.random(seed, radius=4, real_valued=real)
    u = tz.solve_coboundary(f, CAT, k)
    assert math.isfinite(u.l2_norm())
    back = tz.unstable_derivative(u, CAT, k)
    assert set(back.coeffs) == set(f.coeffs)
    for m, c in f.coeffs.items():
        assert abs(back.coeffs[m] - c) <= 1e-12 * abs(c)
    if real:
        assert back.real_valued


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), mi=st.integers(0, len(MATRICES) - 1))
def test_escape_time_matches_brute_force(seed, mi):
    A = tz.ToralAutomorphism(MATRICES[mi])
    f = tz.TrigPolynomial.random(2 * seed, radius=3)
    g = tz.TrigPolynomial.random(2 * seed + 1, radius=3)
    n0 = tz.escape_time(f, g, A)
    assert n0 == _brute_escape(f, g, A)
    s = tz.correlate(f, g, A, n0 + 25)
    assert np.all(s.values[n0:] == 0)


def test_escape_time_for_f_equal_g():
    f = tz.TrigPolynomial.random(11)
    n0 = tz.escape_time(f, f, CAT)
    assert 1 <= n0 < 20
    with pytest.raises(NonzeroMean):
        tz.escape_time(tz.TrigPolynomial.monomial((0, 0)), f, CAT)


def test_correlate_order_independent():
    f, g = tz.random_pair(3)
    s = tz.correlate(f, g, CAT, 12)
    items = list(f.coeffs.items())
    random.Random(0).shuffle(items)
    shuffled = tz.TrigPolynomial(dict(items))
    t = tz.correlate(shuffled, g, CAT, 12)
    np.testing.assert_allclose(s.values, t.values, atol=1e-12)


def test_decay_bound_examples():
    u = tz.TrigPolynomial({(1, 0): 1.0, (0, 1): 1.0})
    g = tz.TrigPolynomial.random(17, radius=5)
    rep = tz.decay_bound_check(u, 1, g, CAT, 20)
    assert rep.bound_holds
    assert rep.max_identity_residual < 1e-12
    rep0 = tz.decay_bound_check(u, 0, g, CAT, 20)
    assert rep0.bound_holds


@pytest.mark.parametrize("seed", range(10))
def test_decay_bound_random(seed):
    f, g = tz.random_pair(seed)
    for k in (1, 2, 3):
        rep = tz.decay_bound_check(f, k, g, CAT, 30)
        assert rep.bound_holds
        assert rep.max_identity_residual < 1e-12


def test_torus_has_trivial_resonances():
    assert pa_resonances(spectrum([[2, 1], [1, 1]]), 4).values() == [1.0]


def test_json_round_trip():
    f = tz.TrigPolynomial.random(5, real_valued=True)
    back = tz.TrigPolynomial.from_json(f.to_json())
    assert back == f
    bare = tz.TrigPolynomial.from_json([{"m": [1, 2], "re": 0.5, "im": -1}])
    assert bare.coeffs == {(1, 2): complex(0.5, -1)}
    with pytest.raises(UsageError):
        tz.TrigPolynomial({(1, 0): 1.0, (-1, 0): 2.0}, real_valued=True)


def test_real_valued_polynomial_is_real():
    f = tz.TrigPolynomial.random(8, real_valued=True)
    xs = np.random.default_rng(0).random((20, 2))
    assert np.max(np.abs(np.imag(f(xs)))) < 1e-12

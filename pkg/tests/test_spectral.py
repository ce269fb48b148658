from __future__ import annotations

import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle.errors import NotHyperbolic, NotSymplectic, UsageError
from ruelle.spectral import (
    IntMatrix,
    SpectrumData,
    charpoly_is_palindromic,
    random_symplectic,
    spectrum,
    standard_form,
)

PHI2 = (3 + math.sqrt(5)) / 2


def test_cat_map_spectrum():
    s = spectrum([[2, 1], [1, 1]])
    assert s.genus == 1
    with mp.workdps(60):
        assert abs(s.lam - (3 + mp.sqrt(5)) / 2) < mp.mpf(10) ** -45
        assert abs(s.mu[1] - 1 / s.lam) < mp.mpf(10) ** -45
    assert s.pairing == (1, 0)


def test_rotation_is_not_hyperbolic():
    with pytest.raises(NotHyperbolic):
        spectrum([[0, 1], [-1, 0]])


def test_block_matrix_spectrum():
    M = [[3, 0, 2, 0], [0, 2, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    s = spectrum(M)
    with mp.workdps(60):
        expect = [2 + mp.sqrt(3), (3 + mp.sqrt(5)) / 2, (3 - mp.sqrt(5)) / 2, 2 - mp.sqrt(3)]
        for got, want in zip(s.mu, expect):
            assert abs(got - want) < mp.mpf(10) ** -45
    assert s.pairing == (3, 2, 1, 0)
    assert float(s.lam) == pytest.approx(3.7320508, abs=1e-7)


def test_not_symplectic():
    with pytest.raises(NotSymplectic):
        spectrum([[1, 2], [3, 4]])
    with pytest.raises(UsageError):  # NotSymplectic is a usage error
        spectrum([[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def test_equal_top_moduli_refused():
    twin = [[2, 0, 1, 0], [0, 2, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    with pytest.raises(NotHyperbolic):
        spectrum(twin)


def test_random_symplectic_examples():
    assert random_symplectic(1, 0, 0).entries == IntMatrix.identity(2).entries
    M = random_symplectic(2, 7, 12)
    assert M.is_symplectic()
    assert random_symplectic(1, 3, 6).det() == 1
    assert random_symplectic(2, 7, 12) == M  # deterministic per seed


@settings(max_examples=40, deadline=None)
@given(g=st.integers(1, 3), seed=st.integers(0, 10_000), n=st.integers(0, 15))
def test_random_symplectic_preserves_form(g, seed, n):
    M = random_symplectic(g, seed, n)
    assert M.is_symplectic()
    assert M.det() == 1
    assert charpoly_is_palindromic(M)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_spectrum_invariants_or_refusal(seed):
    M = random_symplectic(2, seed, 10)
    try:
        s = spectrum(M, precision=40)
    except NotHyperbolic:
        return
    tol = mp.mpf(10) ** (-40 + 2)
    with mp.workdps(50):
        assert abs(mp.fprod(s.mu) - 1) < mp.mpf(10) ** (-40 + 3)
        for i, j in enumerate(s.pairing):
            assert s.pairing[j] == i
            assert abs(s.mu[i] * s.mu[j] - 1) < tol
        coeffs = [mp.mpf(c) for c in M.charpoly()]
        for z in s.mu:
            assert abs(mp.polyval(coeffs, z)) < mp.mpf(10) ** (-40 + 4) * max(1, abs(z)) ** 4
    assert s.lam > abs(s.mu[1])
    assert all(abs(s.mu[k]) >= abs(s.mu[k + 1]) for k in range(3))


def test_spectrum_deterministic():
    M = random_symplectic(2, 7, 12)
    assert spectrum(M).to_json() == spectrum(M).to_json()


def test_json_round_trip():
    s = spectrum([[3, 0, 2, 0], [0, 2, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]])
    back = SpectrumData.from_json(s.to_json())
    with mp.workdps(60):
        for a, b in zip(s.mu, back.mu):
            assert abs(a - b) < mp.mpf(10) ** -45
    obj = s.to_json()
    assert obj["schema"] == "ruelle.spectrum/1"
    assert isinstance(obj["lambda"], str)


def test_from_values_pairs_reciprocals():
    s = SpectrumData.from_values([3, 2, "1/2", "1/3"])
    assert s.pairing == (3, 2, 1, 0)
    assert s.lam == 3


def test_matrix_json_forms():
    a = IntMatrix.from_any({"dim": 2, "entries": [[2, 1], [1, 1]]})
    b = IntMatrix.from_any([[2, 1], [1, 1]])
    assert a == b
    assert standard_form(1) == ((0, 1), (-1, 0))

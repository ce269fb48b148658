from __future__ import annotations

import cmath
import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruelle import resonances as rz
from ruelle.errors import PhaseCountMismatch, UsageError
from ruelle.spectral import SpectrumData, spectrum

SPEC3 = SpectrumData.from_values([3, 2, "1/2", "1/3"])


def _pairs(rs):
    return [(round(e.complex_value.real, 12), e.multiplicity) for e in rs]


def test_pa_example():
    rs = rz.pa_resonances(SPEC3, 2)
    assert _pairs(rs) == [(1.0, 1), (round(2 / 3, 12), 1), (round(2 / 9, 12), 2),
                          (round(1 / 6, 12), 1), (round(1 / 18, 12), 2)]


def test_pa_torus_is_trivial():
    rs = rz.pa_resonances(spectrum([[2, 1], [1, 1]]), 5)
    assert rs.values() == [1.0]


def test_pa_multiplicity_equals_j():
    rs = rz.pa_resonances(SPEC3, 6)
    e = rs.find(2 * 3.0 ** -5)
    assert e.multiplicity == 5
    assert e.provenance == (("pa", 2, 5),)


def test_pa_moduli_below_lambda_and_strictly_sorted():
    spec = spectrum([[3, 0, 2, 0], [0, 2, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]])
    rs = rz.pa_resonances(spec, 6)
    mods = rs.moduli()
    assert mods[0] == 1.0
    assert all(m < float(spec.lam) for m in mods)
    assert all(a > b for a, b in zip(mods, mods[1:]))


def test_collision_merges_with_summed_multiplicity():
    # mu_2 lam^-2 = mu_3 lam^-1 when mu_2 = 2 and mu_3 = 2/3 with lam = 3
    spec = SpectrumData.from_values([3, 2, "1/2", "1/3"])
    rs = rz.pa_resonances(spec, 4)
    values = [e.value for e in rs]
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            assert abs(values[i] - values[j]) > 1e-20


def test_basic_currents():
    spec = SpectrumData.from_values([3, 2, "1/2", "1/3"])
    rs = rz.basic_current_spectrum(spec, 1)
    vals = {round(v.real, 12) for v in rs.values()}
    for want in (3, 2, 2 / 3, 1 / 2, 1 / 6):
        assert round(want, 12) in vals
    assert rs.find(2.0) is not None and rs.find(0.5) is not None  # j = 0 entries are mu_i


def test_basic_current_shift_gives_invariant_distributions():
    bc = rz.basic_current_spectrum(SPEC3, 3)
    inv = rz.invariant_distribution_spectrum(SPEC3, 4)
    shifted = {round((v / 3).real, 12) for v in bc.values()}
    assert shifted == {round(v.real, 12) for v in inv.values()}


def test_invariant_distributions_k1():
    rs = rz.invariant_distribution_spectrum(SPEC3, 1)
    assert sorted(round(v.real, 12) for v in rs.values()) == sorted(
        round(x, 12) for x in (1, 2 / 3, 1 / 6))


def test_invariant_distributions_infinite():
    rs = rz.invariant_distribution_spectrum(SPEC3, rz.INFINITE, j_max=5)
    assert rs.find(2 * 3.0 ** -3).multiplicity == 3
    pa = rz.pa_resonances(SPEC3, 5)
    assert _pairs(rs) == _pairs(pa)
    with pytest.raises(UsageError):
        rz.invariant_distribution_spectrum(SPEC3, rz.INFINITE)


@pytest.mark.parametrize("l", range(0, 11))
def test_multiplicity_oracle_brute_force(l):
    count, basis = rz.multiplicity_oracle(l)
    brute = sum(1 for j in range(l + 2) for k in range(1, l + 2) if j + k == l + 1)
    assert count == brute == l + 1
    assert len(basis) == count
    assert basis[0] == "D"


def test_invariant_distribution_multiplicity_matches_oracle():
    rs = rz.invariant_distribution_spectrum(SPEC3, rz.INFINITE, j_max=10)
    for l in range(1, 11):
        assert rs.find(0.5 * 3.0 ** -l).multiplicity == rz.multiplicity_oracle(l - 1)[0]


LAP = rz.LaplaceSpectrum.from_pairs([(0, 1), ("1/4", 1), (2, 1)])


def test_geodesic_quarter_has_jordan_blocks():
    rs = rz.geodesic_resonances(LAP, 2, 2)
    quarter = [e for e in rs if any(p[1] == "1/4" for p in e.provenance if p[0] == "laplace")]
    assert [e.complex_value.real for e in quarter] == [-0.5, -1.5, -2.5]
    assert all(e.jordan_blocks == (2,) for e in quarter)
    others = [e for e in rs if e not in quarter]
    assert all(e.jordan_blocks == () for e in others)


def test_geodesic_complex_pair():
    rs = rz.geodesic_resonances(LAP, 1, 1)
    s = math.sqrt(7) / 2
    for j in (0, 1):
        for sign in (1, -1):
            assert rs.find(complex(-0.5 - j, sign * s)) is not None


def test_geodesic_zero_mode_and_band_not_merged():
    rs = rz.geodesic_resonances(LAP, 1, 2)
    assert rs.find(0).provenance == (("constant",),)
    minus_one = [e for e in rs if abs(e.complex_value + 1) < 1e-12]
    assert len(minus_one) == 2  # nu_+(0) family and the trivial band stay apart


@settings(max_examples=25, deadline=None)
@given(mu=st.one_of(st.just(Fraction(1, 4)), st.fractions(min_value=0, max_value=20, max_denominator=50).filter(lambda q: q > 0)))
def test_geodesic_jordan_iff_quarter(mu):
    lap = rz.LaplaceSpectrum.from_pairs([(0, 1), (str(mu), 1)])
    rs = rz.geodesic_resonances(lap, 2, 1)
    has_jordan = any(e.jordan_blocks for e in rs)
    assert has_jordan == (mu == Fraction(1, 4))
    if mu > Fraction(1, 4):
        vals = [e.complex_value for e in rs if any(p[0] == "laplace" for p in e.provenance)]
        for v in vals:
            assert any(abs(w - v.conjugate()) < 1e-12 for w in vals)


def test_horocycle_layers():
    k0 = rz.horocycle_invariant_spectrum(LAP, 0, 2)
    k1 = rz.horocycle_invariant_spectrum(LAP, 1, 2)
    s = math.sqrt(7) / 2
    for z in (complex(-0.5, s), complex(-0.5, -s), complex(-1.5, s), complex(-1.5, -s)):
        assert k1.find(z) is not None
    assert k0.find(complex(-1.5, s)) is None
    # every layer-0 entry reappears shifted by -1 in layer 1
    for e in k0:
        if e.complex_value != 0:
            assert k1.find(e.complex_value - 1) is not None


def test_heisenberg_unknown_phases():
    rs = rz.heisenberg_resonances(4, None, 1, 2)
    assert rs.moduli() == [1.0, 0.5, 0.125, 0.03125]
    assert [e.multiplicity for e in rs][1:] == [2, 2, 2]
    assert not any(e.phase_known for e in list(rs)[1:])


def test_heisenberg_multiplicity_counts_all_components():
    rs = rz.heisenberg_resonances(2, None, 3, 0)
    assert rs.entries[1].multiplicity == 2 * (1 + 2 + 3)
    idx = {(p[1], p[2]) for p in rs.entries[1].provenance}
    assert idx == {(z, i) for z in (-3, -2, -1, 1, 2, 3) for i in range(1, abs(z) + 1)}


def test_heisenberg_phases():
    phases = {1: [cmath.exp(0.4j)], -1: [cmath.exp(-0.4j)]}
    rs = rz.heisenberg_resonances(2, phases, 1, 1)
    target = cmath.exp(0.4j) * 2 ** -0.5
    assert rs.find(target) is not None
    for m in rs.moduli():
        assert min(abs(m - a) for a in (1, 2 ** -0.5, 2 ** -1.5)) < 1e-15
    with pytest.raises(PhaseCountMismatch):
        rz.heisenberg_resonances(2, {1: [1.0]}, 1, 0)
    with pytest.raises(PhaseCountMismatch):
        rz.heisenberg_resonances(2, {1: [1.0, 1.0], -1: [1.0]}, 1, 0)
    with pytest.raises(UsageError):
        rz.heisenberg_resonances(2, {1: [2.0], -1: [1.0]}, 1, 0)


def test_transfer_translation_examples():
    rs = rz.transfer_spectrum_translation(rz.KzExponents(2, ("0.3",)), 2)
    assert _pairs(rs) == [(1.0, 1), (-0.7, 1), (-1.3, 1), (-1.7, 2), (-2.3, 2)]
    rs = rz.transfer_spectrum_translation(rz.KzExponents(2, ("1/2",)), 2)
    e = rs.find(-1.5)
    assert e.multiplicity == 3
    assert set(e.provenance) == {("+", 2, 2), ("-", 2, 1)}
    assert rs.entries[0].provenance == (("area",),)


def test_transfer_heisenberg():
    assert rz.transfer_spectrum_heisenberg(0).values() == [1.0, 0.5]
    rs = rz.transfer_spectrum_heisenberg(2)
    assert rs.values() == [1.0, 0.5, -0.5, -1.5]
    assert rs.entries[0].multiplicity == 1
    assert all(e.multiplicity == rz.INFINITE for e in rs.entries[1:])
    assert rs.to_json()["entries"][1]["multiplicity"] == "infinite"


def test_deviation_exponents():
    kz = rz.KzExponents(3, ("0.6", "0.2"))
    assert rz.deviation_exponent(kz, 0) == 1
    assert abs(rz.deviation_exponent(kz, 1) - mp.mpf("0.6")) < 1e-15
    assert rz.deviation_exponent(kz, 3) == 0
    value, caveat = rz.heisenberg_deviation_exponent()
    assert value == 0.5 and "eps" in caveat


def test_input_validation():
    with pytest.raises(UsageError):
        rz.LaplaceSpectrum.from_pairs([(0, 2)])
    with pytest.raises(UsageError):
        rz.LaplaceSpectrum.from_pairs([(0, 1), (2, 1), (1, 1)])
    with pytest.raises(UsageError):
        rz.KzExponents(2, ("1.2",))
    with pytest.raises(UsageError):
        rz.KzExponents(3, ("0.2", "0.5"))


@settings(max_examples=25, deadline=None)
@given(j1=st.integers(1, 6), j2=st.integers(1, 6))
def test_truncation_only_removes_entries(j1, j2):
    lo, hi = sorted((j1, j2))
    small = rz.pa_resonances(SPEC3, lo)
    big = rz.pa_resonances(SPEC3, hi)
    for e in small:
        f = big.find(e.complex_value)
        assert f is not None
        assert {p for p in e.provenance} <= {p for p in f.provenance}


def test_json_round_trip():
    rs = rz.transfer_spectrum_translation(rz.KzExponents(2, ("1/2",)), 3)
    back = rz.ResonanceSet.from_json(rs.to_json())
    assert back.to_json() == rs.to_json()

import functools
import itertools
import operator
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from furst.errors import BudgetExceeded, DeterminantError, EmptyReport
from furst.products import AtomicMeasureG
from furst.semigroup import (
    Mat2Q,
    diophantine_separation,
    entropy_of_masses,
    exact_products,
    freeness_check,
    rw_entropy_profile,
    s_lambda,
    transversality_pair,
)

from oracles import binomial_entropy, binomial_masses

A2 = Mat2Q.diag(2)
A3 = Mat2Q.diag(3)


def word_product(gens, word):
    return functools.reduce(operator.matmul, (gens[i] for i in word), Mat2Q.identity())


def brute_products(gens, n):
    """Every word multiplied out, no dedup until the end."""
    out = {}
    for word in itertools.product(range(len(gens)), repeat=n):
        p = Mat2Q.identity()
        for i in word:
            p = p @ gens[i]
        out[p] = out.get(p, 0) + 1
    return out


class TestMat2Q:
    def test_det_checked(self):
        with pytest.raises(DeterminantError):
            Mat2Q(1, 1, 1, 1)

    def test_canonical(self):
        assert Mat2Q.parse([["2/4", 0], [0, "4/2"]]) == Mat2Q(Fraction(1, 2), 0, 0, 2)
        assert hash(Mat2Q.parse([["2/4", 0], [0, 2]])) == hash(Mat2Q(Fraction(1, 2), 0, 0, 2))

    def test_product_keeps_det(self):
        g = s_lambda(Fraction(3, 7))
        p = g[0] @ g[1] @ g[0]
        assert p.a * p.d - p.b * p.c == 1

    def test_transversality_family(self):
        for lam in (Fraction(1, 2), Fraction(215, 1000), Fraction(1, 3)):
            for m in transversality_pair(lam):
                assert m.a * m.d - m.b * m.c == 1
        assert transversality_pair(Fraction(1, 2))[1] == Mat2Q.parse([[1, "1/2"], [1, "3/2"]])


class TestExactProducts:
    def test_identity(self):
        assert exact_products([Mat2Q.identity()], 7) == {Mat2Q.identity(): 1}

    def test_commuting(self):
        prods = exact_products([A2, A3], 2)
        assert sorted(prods.values()) == [1, 1, 2]
        assert prods[A2 @ A3] == 2

    def test_s1_free_at_10(self):
        assert len(exact_products(s_lambda(1), 10)) == 1024

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 6), st.sampled_from([1, 2, Fraction(1, 2), Fraction(1, 3)]))
    def test_matches_brute_force(self, n, lam):
        gens = s_lambda(lam)
        assert exact_products(gens, n) == brute_products(gens, n)

    def test_weights_attached(self):
        prods = exact_products([A2, A3], 3, weights=[Fraction(1, 3), Fraction(2, 3)])
        assert sum(prods.values()) == 1
        assert prods[A2 @ A2 @ A3] == 3 * Fraction(1, 3) ** 2 * Fraction(2, 3)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            exact_products(s_lambda(2), 12, budget=1000)
        # commuting generators stay small after dedup even though 2^60 words exist
        assert len(exact_products([A2, A3], 60, budget=1000)) == 61


class TestFreeness:
    def test_duplicate_atoms(self):
        rep = freeness_check([A2, A2], 5)
        assert rep.collision is not None and rep.free_up_to == 0

    def test_commuting(self):
        rep = freeness_check([A2, A3], 5)
        assert rep.free_up_to == 1
        w1, w2 = rep.collision
        assert len(w1) == len(w2) == 2 and w1 != w2

    def test_collision_witness_is_real(self):
        gens = s_lambda(Fraction(1, 2))
        rep = freeness_check(gens, 12)
        assert not rep.free
        w1, w2 = rep.collision
        assert w1 != w2 and len(w1) == len(w2) and word_product(gens, w1) == word_product(gens, w2)

    def test_s2_free(self):
        rep = freeness_check(s_lambda(2), 12)
        assert rep.free and rep.free_up_to == 12


class TestEntropy:
    def test_free_is_exact(self):
        prof = rw_entropy_profile(AtomicMeasureG.uniform(s_lambda(2)), 10)
        assert all(h == 1.0 for h in prof.h_n)

    def test_point_mass(self):
        prof = rw_entropy_profile(AtomicMeasureG((A2,)), 6)
        assert all(h == 0 for h in prof.h_n)

    def test_binomial(self):
        prof = rw_entropy_profile(AtomicMeasureG.uniform([A2, A3]), 20)
        for n, h in enumerate(prof.h_n, 1):
            assert h == pytest.approx(binomial_entropy(n) / n, abs=1e-12)
        assert list(prof.h_n) == sorted(prof.h_n, reverse=True)

    def test_binomial_masses_exact(self):
        prods = exact_products([A2, A3], 9, weights=[Fraction(1, 2)] * 2)
        assert sorted(prods.values()) == sorted(binomial_masses(9))

    def test_entropy_of_masses(self):
        assert entropy_of_masses([Fraction(1, 8)] * 8) == 3.0
        assert entropy_of_masses([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]) == 1.5

    def test_bounded_by_h_mu(self):
        for lam in (Fraction(1, 2), Fraction(1, 3), 1, 3):
            prof = rw_entropy_profile(AtomicMeasureG.uniform(s_lambda(lam)), 10)
            assert all(h <= 1.0 + 1e-15 for h in prof.h_n)

    @pytest.mark.parametrize("lam", [Fraction(1, 2), Fraction(1, 3), Fraction(2, 3)])
    def test_subadditive(self, lam):
        prof = rw_entropy_profile(AtomicMeasureG.uniform(s_lambda(lam)), 10)
        H = [0.0] + [n * h for n, h in enumerate(prof.h_n, 1)]
        for n in range(1, 11):
            for m in range(1, 11 - n):
                assert H[n + m] <= H[n] + H[m] + 1e-12

    @pytest.mark.parametrize("lam", [Fraction(1, 2), Fraction(1, 3), 1, 2])
    def test_consistent_with_freeness(self, lam):
        gens = s_lambda(lam)
        rep = freeness_check(gens, 10)
        prof = rw_entropy_profile(AtomicMeasureG.uniform(gens), 10)
        for n, h in enumerate(prof.h_n, 1):
            assert (n <= rep.free_up_to) == (h == 1.0)


class TestDiophantine:
    def test_integer_entries(self):
        for n in range(1, 9):
            rep = diophantine_separation(s_lambda(2), n)
            assert rep.min_separation >= 1 and rep.c_n == 1.0

    def test_commuting_n1(self):
        rep = diophantine_separation([A2, A3], 1)
        assert rep.min_separation == 1

    def test_half_integer_bound(self):
        gens = s_lambda(Fraction(1, 2))
        for n in range(1, 9):
            rep = diophantine_separation(gens, n)
            assert rep.min_separation >= Fraction(1, 2**n)
            assert rep.c_n >= 0.5

    def test_witness(self):
        gens = s_lambda(Fraction(1, 3))
        rep = diophantine_separation(gens, 5)
        w1, w2 = rep.pair_witness
        p, q = word_product(gens, w1), word_product(gens, w2)
        assert p != q
        assert max(abs(x - y) for x, y in zip(p.entries(), q.entries())) == rep.min_separation

    def test_min_is_global(self):
        gens = s_lambda(Fraction(1, 3))
        prods = list(exact_products(gens, 4))
        brute = min(max(abs(x - y) for x, y in zip(p.entries(), q.entries())) for p, q in itertools.combinations(prods, 2))
        assert diophantine_separation(gens, 4).min_separation == brute

    def test_single_generator(self):
        with pytest.raises(EmptyReport):
            diophantine_separation([A2], 3)

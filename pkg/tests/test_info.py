import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macap import (
    ChannelMatrix,
    IpdProduct,
    MacType,
    chain_decomposition,
    conditional_mi,
    index_tuple,
    mutual_information,
    output_distribution,
    score,
    scores,
)
from macap.verify import random_channel, random_ipd

from conftest import make_bsc

LN2 = math.log(2.0)


def direct_output(P: ChannelMatrix, p: IpdProduct) -> np.ndarray:
    """Independent summation oracle with explicit loops."""
    t = P.mac_type
    q = np.zeros(t.m)
    for c in range(t.num_inputs):
        tup = index_tuple(c, t)
        w = 1.0
        for k, i in enumerate(tup):
            w *= p.parts[k][i]
        q += w * P.probs[:, c]
    return q


def direct_mi(P: ChannelMatrix, p: IpdProduct) -> float:
    t = P.mac_type
    q = direct_output(P, p)
    total = 0.0
    for c in range(t.num_inputs):
        tup = index_tuple(c, t)
        w = 1.0
        for k, i in enumerate(tup):
            w *= p.parts[k][i]
        if w == 0.0:
            continue
        for j in range(t.m):
            if P.probs[j, c] > 0.0:
                total += w * P.probs[j, c] * math.log(P.probs[j, c] / q[j])
    return total


class TestOutputDistribution:
    def test_adder_uniform(self, adder):
        q = output_distribution(adder, IpdProduct.uniform(adder.mac_type)).q
        assert np.allclose(q, [0.25, 0.5, 0.25], atol=1e-15)

    def test_vertex_gives_column(self, rng):
        t = MacType((2, 3), 3)
        P = random_channel(t, rng)
        p = IpdProduct.vertex(t, (1, 2))
        q = output_distribution(P, p).q
        assert np.allclose(q, P.probs[:, 5], atol=1e-15)

    def test_against_direct_summation(self, rng):
        t = MacType((2, 3), 3)
        for _ in range(20):
            P = random_channel(t, rng)
            p = random_ipd(t, rng)
            q = output_distribution(P, p).q
            assert np.max(np.abs(q - direct_output(P, p))) < 1e-14


class TestMutualInformation:
    def test_noiseless_bit(self, identity2):
        p = IpdProduct.uniform(identity2.mac_type)
        assert mutual_information(identity2, p) == pytest.approx(LN2, abs=1e-15)

    def test_adder_uniform(self, adder):
        p = IpdProduct.uniform(adder.mac_type)
        assert mutual_information(adder, p) == pytest.approx(1.5 * LN2, abs=1e-14)

    def test_vertex_is_zero(self, rng):
        t = MacType((3, 2), 2)
        P = random_channel(t, rng)
        assert mutual_information(P, IpdProduct.vertex(t, (2, 1))) == pytest.approx(
            0.0, abs=1e-15
        )

    def test_against_direct_summation(self, rng):
        for t in (MacType((2, 2), 2), MacType((2, 3), 4), MacType((2, 2, 2), 3)):
            for _ in range(5):
                P = random_channel(t, rng)
                p = random_ipd(t, rng)
                assert mutual_information(P, p) == pytest.approx(
                    direct_mi(P, p), abs=1e-13
                )

    def test_entropy_bound(self, rng):
        t = MacType((3, 3), 2)
        for _ in range(20):
            P = random_channel(t, rng)
            p = random_ipd(t, rng)
            v = mutual_information(P, p)
            assert -1e-14 <= v <= math.log(t.m) + 1e-12

    def test_single_user_concavity_midpoint(self, rng):
        t = MacType((2, 3), 3)
        for _ in range(20):
            P = random_channel(t, rng)
            a, b = random_ipd(t, rng), random_ipd(t, rng)
            k = int(rng.integers(0, 2))
            parts_b = list(a.parts)
            parts_b[k] = b.parts[k]
            bb = IpdProduct(tuple(parts_b))
            parts_m = list(a.parts)
            parts_m[k] = 0.5 * (a.parts[k] + b.parts[k])
            mid = IpdProduct(tuple(parts_m))
            lhs = mutual_information(P, mid)
            rhs = 0.5 * (mutual_information(P, a) + mutual_information(P, bb))
            assert lhs >= rhs - 1e-12


class TestScore:
    def test_identity_uniform(self, identity2):
        p = IpdProduct.uniform(identity2.mac_type)
        assert score(identity2, p, 0, 0) == pytest.approx(LN2, abs=1e-15)

    def test_weighted_average_identity(self, rng):
        for t in (MacType((2, 2), 3), MacType((2, 2, 2), 2)):
            for _ in range(10):
                P = random_channel(t, rng)
                p = random_ipd(t, rng)
                mi = mutual_information(P, p)
                for k, J in enumerate(scores(P, p)):
                    assert float(p.parts[k] @ J) == pytest.approx(mi, abs=1e-12)

    def test_finite_difference_oracle(self, rng):
        # central difference of I along (e_i - p_k) equals J(p; i) - I(p)
        t = MacType((2, 3), 3)
        step = 1e-5
        for _ in range(5):
            P = random_channel(t, rng)
            p = random_ipd(t, rng)
            mi = mutual_information(P, p)
            for k in range(t.num_users):
                for i in range(t.n[k]):
                    e = np.zeros(t.n[k])
                    e[i] = 1.0
                    d = e - p.parts[k]

                    def at(eps):
                        parts = list(p.parts)
                        parts[k] = p.parts[k] + eps * d
                        return mutual_information(P, IpdProduct(tuple(parts)))

                    diff = (at(step) - at(-step)) / (2 * step)
                    assert score(P, p, k, i) == pytest.approx(mi + diff, abs=1e-6)

    def test_index_validation(self, adder):
        p = IpdProduct.uniform(adder.mac_type)
        with pytest.raises(ValueError):
            score(adder, p, 2, 0)
        with pytest.raises(ValueError):
            score(adder, p, 0, 2)


class TestChainDecomposition:
    def test_single_user_degenerate(self, rng):
        t = MacType((3,), 3)
        P = random_channel(t, rng)
        p = random_ipd(t, rng)
        cd = chain_decomposition(P, p, (0,))
        assert cd.components[0] == pytest.approx(mutual_information(P, p), abs=1e-13)

    def test_adder_uniform_sums(self, adder):
        p = IpdProduct.uniform(adder.mac_type)
        cd = chain_decomposition(adder, p, (0, 1))
        assert cd.total == pytest.approx(1.5 * LN2, abs=1e-12)

    def test_all_orders_telescope(self, rng):
        t = MacType((2, 2), 2)
        for _ in range(10):
            P = random_channel(t, rng)
            p = random_ipd(t, rng)
            mi = mutual_information(P, p)
            for order in itertools.permutations(range(2)):
                cd = chain_decomposition(P, p, order)
                assert cd.total == pytest.approx(mi, abs=1e-12)

    def test_three_user_orders(self, rng):
        t = MacType((2, 2, 2), 3)
        P = random_channel(t, rng)
        p = random_ipd(t, rng)
        mi = mutual_information(P, p)
        for order in itertools.permutations(range(3)):
            cd = chain_decomposition(P, p, order)
            assert all(c >= 0.0 for c in cd.components)
            assert cd.total == pytest.approx(mi, abs=1e-10)

    def test_invalid_permutation(self, adder):
        p = IpdProduct.uniform(adder.mac_type)
        with pytest.raises(ValueError):
            chain_decomposition(adder, p, (0, 0))


class TestConditionalMi:
    def test_full_target_is_mi(self, rng):
        t = MacType((2, 3), 2)
        P = random_channel(t, rng)
        p = random_ipd(t, rng)
        assert conditional_mi(P, p, target={0, 1}) == pytest.approx(
            mutual_information(P, p), abs=1e-13
        )

    def test_empty_target_is_zero(self, rng):
        t = MacType((2, 2), 2)
        P = random_channel(t, rng)
        assert conditional_mi(P, random_ipd(t, rng), target=set()) == 0.0

    def test_three_term_chain(self, rng):
        t = MacType((2, 2, 2), 2)
        P = random_channel(t, rng)
        p = random_ipd(t, rng)
        total = (
            conditional_mi(P, p, {0})
            + conditional_mi(P, p, {1}, {0})
            + conditional_mi(P, p, {2}, {0, 1})
        )
        assert total == pytest.approx(mutual_information(P, p), abs=1e-10)

    def test_nonnegative(self, rng):
        t = MacType((2, 2), 3)
        for _ in range(20):
            P = random_channel(t, rng)
            p = random_ipd(t, rng)
            assert conditional_mi(P, p, {0}, {1}) >= -1e-12

    def test_overlap_rejected(self, rng):
        t = MacType((2, 2), 2)
        P = random_channel(t, rng)
        with pytest.raises(ValueError):
            conditional_mi(P, random_ipd(t, rng), {0}, {0})


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_score_expectation_property(seed):
    rng = np.random.default_rng(seed)
    t = MacType((2, 3), 2)
    P = random_channel(t, rng)
    p = random_ipd(t, rng)
    mi = mutual_information(P, p)
    for k, J in enumerate(scores(P, p)):
        assert abs(float(p.parts[k] @ J) - mi) < 1e-12

import itertools
import math

import numpy as np
import pytest

from macap import (
    FaceProduct,
    IpdProduct,
    MacType,
    degenerate_witness,
    enumerate_master_faces,
    is_elementary,
    master_face_count,
    minimum_face,
    mutual_information,
    output_distribution,
)
from macap.verify import random_channel, random_ipd


class TestIsElementary:
    def test_examples(self):
        assert is_elementary(MacType((2, 2), 3))
        assert not is_elementary(MacType((3, 3), 2))
        for m in (2, 3, 5):
            assert is_elementary(MacType((2, 2, 2), m))


class TestEnumeration:
    def test_elementary_gives_full_domain(self):
        t = MacType((2, 2), 3)
        es = enumerate_master_faces(t)
        assert es.faces == (FaceProduct.full(t),)
        assert not es.truncated

    def test_3_2__2(self):
        es = enumerate_master_faces(MacType((3, 2), 2))
        assert [f.supports for f in es.faces] == [
            ((0, 1), (0, 1)),
            ((0, 2), (0, 1)),
            ((1, 2), (0, 1)),
        ]

    def test_4_3__2_count(self):
        es = enumerate_master_faces(MacType((4, 3), 2))
        assert len(es.faces) == 18
        assert master_face_count(MacType((4, 3), 2)) == 18

    def test_count_formula_exhaustive(self):
        # every type with a product of binomials up to 10^4
        for n1, n2, m in itertools.product((2, 3, 4, 5), (2, 3, 4), (2, 3, 4)):
            t = MacType((n1, n2), m)
            expect = math.comb(n1, min(n1, m)) * math.comb(n2, min(n2, m))
            if expect > 10**4:
                continue
            es = enumerate_master_faces(t)
            assert len(es.faces) == expect == master_face_count(t)
            # support sizes as prescribed, all faces distinct and maximal
            for f in es.faces:
                assert f.sizes == (min(n1, m), min(n2, m))
            assert len(set(es.faces)) == len(es.faces)

    def test_no_strict_containment(self):
        es = enumerate_master_faces(MacType((4, 3), 2))
        for a, b in itertools.permutations(es.faces, 2):
            contains = all(
                set(sa) <= set(sb) for sa, sb in zip(a.supports, b.supports)
            )
            assert not contains

    def test_truncation_cap(self):
        es = enumerate_master_faces(MacType((4, 3), 2), cap=5)
        assert es.truncated and len(es.faces) == 5

    def test_cap_validation(self):
        with pytest.raises(ValueError):
            enumerate_master_faces(MacType((2, 2), 2), cap=0)


class TestDegenerateWitness:
    def test_oversized_alphabet_has_witness(self, rng):
        t = MacType((3, 2), 2)
        for _ in range(10):
            P = random_channel(t, rng)
            p = random_ipd(t, rng)
            w = degenerate_witness(P, p, 0)
            assert w is not None
            assert w.output_gap <= 1e-9

    def test_elementary_has_none(self, adder, rng):
        p = random_ipd(adder.mac_type, rng)
        for k in range(2):
            assert degenerate_witness(adder, p, k) is None

    def test_support_strictly_shrinks(self, rng):
        t = MacType((4, 2), 2)
        for _ in range(10):
            P = random_channel(t, rng)
            p = random_ipd(t, rng)
            w = degenerate_witness(P, p, 0)
            assert w is not None
            old = set(np.flatnonzero(w.original > 1e-12))
            new = set(np.flatnonzero(w.replacement > 1e-12))
            assert new < old

    def test_preserves_output_and_mi(self, rng):
        t = MacType((4, 2), 2)
        for _ in range(10):
            P = random_channel(t, rng)
            p = random_ipd(t, rng)
            w = degenerate_witness(P, p, 0)
            assert w.kernel_dim >= 2
            parts = list(p.parts)
            parts[0] = w.replacement
            p2 = IpdProduct(tuple(parts))
            q1 = output_distribution(P, p).q
            q2 = output_distribution(P, p2).q
            assert np.max(np.abs(q1 - q2)) <= 1e-12
            assert abs(
                mutual_information(P, p) - mutual_information(P, p2)
            ) <= 1e-10

    def test_segment_is_affine(self, rng):
        # I along the replacement segment stays on the chord: the output law
        # is constant there, so I is linear in the moved vector
        t = MacType((4, 2), 2)
        P = random_channel(t, rng)
        p = random_ipd(t, rng)
        w = degenerate_witness(P, p, 0)
        thetas = np.linspace(0.0, 1.0, 11)
        vals = []
        for th in thetas:
            parts = list(p.parts)
            parts[0] = (1.0 - th) * w.original + th * w.replacement
            vals.append(mutual_information(P, IpdProduct(tuple(parts))))
        vals = np.asarray(vals)
        chord = vals[0] + (vals[-1] - vals[0]) * thetas
        assert np.max(np.abs(vals - chord)) <= 1e-10

    def test_deterministic(self, rng):
        t = MacType((4, 2), 2)
        P = random_channel(t, rng)
        p = random_ipd(t, rng)
        w1 = degenerate_witness(P, p, 0)
        w2 = degenerate_witness(P, p, 0)
        assert np.array_equal(w1.replacement, w2.replacement)

    def test_respects_existing_support(self, rng):
        # mass already on a sub-face: the search restricts to that support
        t = MacType((4, 2), 2)
        P = random_channel(t, rng)
        p_full = random_ipd(t, rng)
        v = np.array(p_full.parts[0])
        v[3] = 0.0
        v /= v.sum()
        p = IpdProduct((v, p_full.parts[1]))
        w = degenerate_witness(P, p, 0)
        assert w is not None
        assert w.replacement[3] == 0.0

    def test_small_support_returns_none(self, rng):
        t = MacType((4, 2), 2)
        P = random_channel(t, rng)
        p = IpdProduct((np.array([0.5, 0.5, 0.0, 0.0]), np.array([0.4, 0.6])))
        assert degenerate_witness(P, p, 0) is None

    def test_user_index_validation(self, rng):
        t = MacType((3, 2), 2)
        P = random_channel(t, rng)
        with pytest.raises(ValueError):
            degenerate_witness(P, random_ipd(t, rng), 5)

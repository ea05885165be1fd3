import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fadeadapt import (
    DegenerateChannelError,
    FadeState,
    brute_force_min_distance,
    canonicalize,
    class_distance,
    enumerate_classes,
    enumerate_singular,
    min_distance,
    min_vanishing_class,
    mpsk,
)
from fadeadapt.geometry import (
    canonicalize_arrays,
    class_distances,
    expected_singular_count,
    expected_wedge_count,
    min_distance_grid,
)

SQ2 = math.sqrt(2)


def polar(g, deg):
    return g * np.exp(1j * np.deg2rad(deg))


def random_states(rng, n, gmax=4.0):
    """Fade states spread over the whole gamma >= 1 plane, plus points near the singular set."""
    g = 1.0 + (gmax - 1.0) * rng.random(n)
    return g * np.exp(2j * np.pi * rng.random(n))


class TestCanonicalize:
    def test_already_canonical(self):
        cs = canonicalize(1.0, polar(2, 14), 4)
        assert cs.gamma == pytest.approx(2)
        assert math.degrees(cs.theta_c) == pytest.approx(14)
        assert not cs.transform.swapped and not cs.transform.reflected

    def test_swap_when_ratio_small(self):
        cs = canonicalize(polar(2, 14), 1.0, 4)
        assert cs.transform.swapped
        assert cs.gamma == pytest.approx(2)

    def test_reflection(self):
        cs = canonicalize(1.0, polar(1.5, 80), 4)
        assert cs.transform.reflected
        assert math.degrees(cs.theta_c) == pytest.approx(10)

    def test_zero_gain(self):
        with pytest.raises(DegenerateChannelError):
            canonicalize(0.0, 1.0, 4)
        with pytest.raises(DegenerateChannelError):
            canonicalize_arrays(np.ones(2), np.array([1.0, 0.0]), 4)

    @pytest.mark.parametrize("M", [2, 4, 8, 16])
    def test_roundtrip_and_range(self, M):
        rng = np.random.default_rng(M)
        h1 = rng.standard_normal(500) + 1j * rng.standard_normal(500)
        h2 = rng.standard_normal(500) + 1j * rng.standard_normal(500)
        w, sw = canonicalize_arrays(h1, h2, M)
        for k in range(len(h1)):
            cs = canonicalize(h1[k], h2[k], M)
            assert cs.gamma >= 1.0
            assert 0.0 <= cs.theta_c <= math.pi / M + 1e-15
            assert complex(cs) == pytest.approx(w[k], abs=1e-12)
            assert cs.transform.swapped == sw[k]
            assert cs.original_ratio() == pytest.approx(h2[k] / h1[k], rel=1e-12)


class TestClasses:
    def test_qpsk_counts(self):
        cls = enumerate_classes(mpsk(4))
        assert len(cls) == 20
        assert sum(len(k.members) for k in cls) == 120

    @pytest.mark.parametrize("M", [2, 4, 8])
    def test_partition_of_all_pairs(self, M):
        cls = enumerate_classes(mpsk(M))
        pairs = [p for k in cls for p in k.members]
        n = M * M
        assert len(pairs) == len(set(pairs)) == n * (n - 1) // 2

    def test_sorted_by_representative(self):
        cls = enumerate_classes(mpsk(8))
        keys = [(sum(k.representative), k.representative[0]) for k in cls]
        assert keys == sorted(keys)
        assert [k.index for k in cls] == list(range(1, len(cls) + 1))

    def test_members_share_distance(self):
        c = mpsk(4)
        rng = np.random.default_rng(3)
        for w in random_states(rng, 10):
            pts = np.concatenate([c.points[None, :] + w * c.points[:, None]]).ravel()
            for k in enumerate_classes(c):
                d = [abs(pts[i - 1] - pts[j - 1]) for i, j in k.members]
                np.testing.assert_allclose(d, class_distance(k, w), atol=1e-12)

    def test_fig2_state_brute_force(self):
        c = mpsk(4)
        w = polar(2, 14)
        d, cl = min_distance(c, w)
        bd, pair = brute_force_min_distance(c, w)
        assert d == pytest.approx(bd, abs=1e-12)
        assert pair in cl.members
        np.testing.assert_allclose(
            sorted(class_distances(c, w)),
            sorted(class_distance(k, FadeState(2, math.radians(14))) for k in enumerate_classes(c)),
            atol=1e-12,
        )


class TestSingular:
    def test_qpsk_example(self):
        ss = enumerate_singular(mpsk(4))
        expected = [polar(g, t) for g in (SQ2, 1 / SQ2) for t in (45, 135, 225, 315)]
        expected += [polar(1, t) for t in (0, 90, 180, 270)]
        got = [s.z for s in ss.nonzero]
        assert len(got) == 12
        for z in expected:
            assert min(abs(z - g) for g in got) < 1e-9

    def test_qpsk_wedge(self):
        wedge = enumerate_singular(mpsk(4)).wedge
        assert [(round(s.location.gamma, 9), s.location.theta) for s in wedge] == [(1.0, 0.0), (round(SQ2, 9), math.pi / 4)]
        assert all(s.delta_s2 == pytest.approx(SQ2) for s in wedge)

    def test_8psk_wedge(self):
        wedge = enumerate_singular(mpsk(8)).wedge
        r2 = SQ2
        expected = [
            (1, 0), (r2, 0), (1 + r2, 0),
            (math.sqrt(4 - 2 * r2), math.pi / 8), (math.sqrt(1 + 1 / r2), math.pi / 8),
            (math.sqrt(2 + r2), math.pi / 8), (math.sqrt(4 + 2 * r2), math.pi / 8),
        ]
        assert len(wedge) == 7
        for s, (g, t) in zip(wedge, expected):
            assert abs(s.z - g * np.exp(1j * t)) < 1e-9
        # radii of the 8-PSK violation circles are delta / |ds2|
        ds2 = [math.sqrt(2 - r2), r2, math.sqrt(2 - r2), math.sqrt(2 + r2), r2, math.sqrt(2 - r2), math.sqrt(2 - r2)]
        np.testing.assert_allclose([s.delta_s2 for s in wedge], ds2, atol=1e-12)

    @pytest.mark.parametrize("M", [2, 4, 8, 16])
    def test_counts(self, M):
        ss = enumerate_singular(mpsk(M))
        assert len(ss.nonzero) == expected_singular_count(M)
        assert ss.n_wedge == expected_wedge_count(M)
        assert sum(abs(abs(s.z) - 1) < 1e-9 for s in ss.nonzero) == M

    @pytest.mark.parametrize("M", [4, 8, 16])
    def test_wedge_states_on_boundary_lines(self, M):
        for s in enumerate_singular(mpsk(M)).wedge:
            assert s.location.theta in (0.0, math.pi / M)

    @pytest.mark.parametrize("M", [2, 4, 8])
    def test_effective_points_collapse(self, M):
        c = mpsk(M)
        for s in enumerate_singular(c).nonzero:
            assert brute_force_min_distance(c, s.z)[0] < 1e-9
            assert min_distance(c, s.z)[0] < 1e-7

    def test_inverse_conjugate_symmetry(self):
        zs = [s.z for s in enumerate_singular(mpsk(8)).nonzero]
        for z in zs:
            assert min(abs(1 / np.conj(z) - u) for u in zs) < 1e-9

    def test_zero_state(self):
        ss = enumerate_singular(mpsk(4))
        assert ss.zero.z == 0
        assert ss.full[0] is ss.zero


class TestMinimalClass:
    @pytest.mark.parametrize("M", [4, 8, 16])
    def test_dominance(self, M):
        """The chosen class is no larger than any other vanishing class around the state."""
        rng = np.random.default_rng(M)
        for s in enumerate_singular(mpsk(M)).wedge:
            k = min_vanishing_class(s)
            assert k is s.minimal_class
            pts = s.z + 0.3 * np.sqrt(rng.random(50)) * np.exp(2j * np.pi * rng.random(50))
            for other in s.vanishing_classes:
                for w in pts:
                    assert class_distance(k, w) <= class_distance(other, w) + 1e-12

    def test_vanishing_class_is_linear_in_offset(self):
        for s in enumerate_singular(mpsk(8)).wedge:
            w = s.z + 0.01 * np.exp(0.7j)
            assert class_distance(s.minimal_class, w) == pytest.approx(0.01 * s.delta_s2, rel=1e-9)


class TestMinDistance:
    @pytest.mark.parametrize("M", [2, 4, 8])
    def test_oracle_equivalence(self, M):
        c = mpsk(M)
        rng = np.random.default_rng(1000 + M)
        ws = random_states(rng, 1000)
        # mix in states close to singular ones
        near = np.array([s.z for s in enumerate_singular(c).nonzero])
        ws[:100] = near[rng.integers(len(near), size=100)] + 1e-3 * np.exp(2j * np.pi * rng.random(100))
        dmin, _ = min_distance_grid(c, ws)
        oracle = np.array([brute_force_min_distance(c, w)[0] for w in ws])
        np.testing.assert_allclose(dmin, oracle, atol=1e-9)

    @given(
        g=st.floats(1.0, 20.0),
        t=st.floats(0.0, 2 * math.pi),
        M=st.sampled_from([2, 4, 8, 16]),
    )
    @settings(max_examples=200, deadline=None)
    def test_upper_bound(self, g, t, M):
        c = mpsk(M)
        assert min_distance(c, g * np.exp(1j * t))[0] <= c.d_min + 1e-12

    @given(
        g=st.floats(0.05, 20.0),
        t=st.floats(-10.0, 10.0),
        k=st.integers(-5, 5),
        M=st.sampled_from([2, 4, 8]),
    )
    @settings(max_examples=200, deadline=None)
    def test_periodicity_and_reflection(self, g, t, k, M):
        c = mpsk(M)
        base = min_distance(c, g * np.exp(1j * t))[0]
        shifted = min_distance(c, g * np.exp(1j * (t + 2 * math.pi * k / M)))[0]
        mirrored = min_distance(c, g * np.exp(-1j * t))[0]
        inverted = min_distance(c, np.exp(1j * t) / g)[0] * g
        assert shifted == pytest.approx(base, abs=1e-9)
        assert mirrored == pytest.approx(base, abs=1e-9)
        # swapping the users scales the constellation by 1/gamma
        assert inverted == pytest.approx(base, abs=1e-9)

    def test_canonical_fade_state_accepted(self):
        c = mpsk(4)
        cs = canonicalize(1.0, polar(2, 14), 4)
        assert min_distance(c, cs)[0] == pytest.approx(min_distance(c, polar(2, 14))[0])

    def test_argmin_tie_goes_to_lowest_index(self):
        # at gamma = 1, theta = 0 several classes vanish together
        _, arg = min_distance_grid(mpsk(4), np.array([1.0 + 0j]))
        ss = enumerate_singular(mpsk(4)).wedge[0]
        assert arg[0] == min(k.index for k in ss.vanishing_classes)

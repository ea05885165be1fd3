import csv
import json
import math

import numpy as np
import pytest

from fadeadapt import (
    FeedbackDecodeError,
    FeedbackMessage,
    GridSpec,
    InvalidParameterError,
    build_policy,
    canonicalize,
    classify,
    decode_feedback,
    encode_feedback,
    enumerate_singular,
    feedback_bits,
    min_distance,
    mpsk,
    quantization_map,
    violation_circles,
)
from fadeadapt.geometry import min_distance_grid
from fadeadapt.quantizer import (
    RASTER_HEADER,
    classify_array,
    extend_to_full_plane,
    quantize,
    write_circles_json,
    write_raster_csv,
)


def test_qpsk_circles():
    circles = violation_circles(mpsk(4), 0.2)
    assert [c.index for c in circles] == [1, 2]
    assert circles[0].center == pytest.approx(1.0)
    assert circles[1].center == pytest.approx(math.sqrt(2) * np.exp(1j * math.pi / 4))
    for c in circles:
        assert c.radius == pytest.approx(0.2 / math.sqrt(2))


@pytest.mark.parametrize("delta", [0.0, -0.1, float("nan"), float("inf")])
def test_bad_delta(delta):
    with pytest.raises(InvalidParameterError):
        violation_circles(mpsk(4), delta)


def test_delta_above_bound_warns():
    with pytest.warns(UserWarning):
        circles = violation_circles(mpsk(4), 0.5, bound=build_policy(mpsk(4)).delta_max)
    assert len(circles) == 2


class TestClassify:
    def test_boundary_is_outside(self):
        circles = violation_circles(mpsk(4), 0.2)
        c = circles[0]
        edge = c.center + 1j * c.radius
        assert abs(edge - c.center) == c.radius
        assert classify(edge, circles) is None
        assert classify(c.center + 0.999 * c.radius, circles) == 1

    def test_centre(self):
        circles = violation_circles(mpsk(8), 0.05)
        for c in circles:
            assert classify(c.center, circles) == c.index

    def test_array_matches_scalar(self):
        rng = np.random.default_rng(0)
        circles = violation_circles(mpsk(8), 0.06)
        w = 1 + 2.5 * rng.random(2000) * np.exp(1j * math.pi / 8 * rng.random(2000))
        labels = classify_array(w, circles)
        for x, lab in zip(w, labels):
            assert (classify(x, circles) or 0) == lab

    def test_empty_circle_list(self):
        assert classify(1.0, []) is None
        assert classify_array(np.ones(3), []).tolist() == [0, 0, 0]


@pytest.mark.parametrize(
    "M,delta",
    [(4, 0.1), (4, 0.2), (4, 0.35), (8, 0.05), (8, 0.15)],
)
def test_in_out_dichotomy(M, delta):
    """Inside some circle iff the effective minimum distance is below delta."""
    c = mpsk(M)
    circles = violation_circles(c, delta)
    rng = np.random.default_rng(int(delta * 1000) + M)
    n = 4000
    # half uniform in the wedge, half concentrated around circle boundaries
    g = 1 + 3 * rng.random(n)
    t = math.pi / M * rng.random(n)
    w = g * np.exp(1j * t)
    k = rng.integers(len(circles), size=n // 2)
    ctr = np.array([circles[i].center for i in k])
    rad = np.array([circles[i].radius for i in k])
    w[: n // 2] = ctr + rad * (0.8 + 0.4 * rng.random(n // 2)) * np.exp(2j * np.pi * rng.random(n // 2))
    # keep only canonical states
    w = np.array([complex(canonicalize(1.0, x, M)) for x in w])
    inside = classify_array(w, circles) > 0
    dmin, _ = min_distance_grid(c, w)
    # measure-zero ties at a circle edge are excluded
    edge = np.abs(dmin - delta) < 1e-9
    assert np.array_equal(inside[~edge], (dmin < delta)[~edge])


class TestFeedback:
    def test_bits(self):
        assert feedback_bits(enumerate_singular(mpsk(4)).n_wedge) == 3
        assert feedback_bits(enumerate_singular(mpsk(8)).n_wedge) == 4
        assert feedback_bits(0) == 1
        assert feedback_bits(1) == 2

    @pytest.mark.parametrize("n_wedge", [1, 2, 7, 29])
    def test_roundtrip(self, n_wedge):
        for swapped in (False, True):
            for circle in [None] + list(range(1, n_wedge + 1)):
                msg = FeedbackMessage(swapped, circle)
                bits = encode_feedback(msg, n_wedge)
                assert len(bits) == feedback_bits(n_wedge)
                assert decode_feedback(bits, n_wedge) == msg

    def test_layout(self):
        assert encode_feedback(FeedbackMessage(True, 2), 2) == "110"
        assert encode_feedback(FeedbackMessage(False, None), 2) == "000"

    @pytest.mark.parametrize("bits", ["11", "1111", "1a0", "111"])
    def test_decode_errors(self, bits):
        with pytest.raises(FeedbackDecodeError):
            decode_feedback(bits, 2)

    def test_encode_bad_index(self):
        with pytest.raises(InvalidParameterError):
            encode_feedback(FeedbackMessage(False, 3), 2)

    def test_quantize(self):
        circles = violation_circles(mpsk(4), 0.3)
        cs = canonicalize(1.0 + 0.05j, 1.0, 4)
        assert quantize(cs, circles) == FeedbackMessage(True, 1)


class TestRaster:
    def test_shape_and_cells(self):
        r = quantization_map(mpsk(4), GridSpec(3.0, 30, 20))
        assert r.labels.shape == (30, 20)
        assert r.gammas[0] > 1 and r.gammas[-1] < 3
        assert 0 < r.thetas[0] and r.thetas[-1] < math.pi / 4
        for g, t, lab, d in list(r.rows())[::37]:
            dm, cl = min_distance(mpsk(4), g * np.exp(1j * t))
            assert d == pytest.approx(dm, abs=1e-12)

    def test_argmin_labels_near_singular_states(self):
        """Cells next to a wedge singular state carry its minimal class or a class vanishing there."""
        c = mpsk(8)
        r = quantization_map(c, GridSpec(4.0, 300, 120))
        for s in enumerate_singular(c).wedge:
            a = np.argmin(np.abs(r.gammas - s.location.gamma))
            b = np.argmin(np.abs(r.thetas - s.location.theta))
            assert r.labels[a, b] in {k.index for k in s.vanishing_classes}

    def test_chunking_is_transparent(self, monkeypatch):
        import fadeadapt.quantizer as q

        grid = GridSpec(4.0, 40, 30)
        full = quantization_map(mpsk(8), grid)
        monkeypatch.setattr(q, "_CELL_BUDGET", 500)
        chunked = quantization_map(mpsk(8), grid)
        assert np.array_equal(full.labels, chunked.labels)

    def test_full_plane_matches_direct(self):
        c = mpsk(4)
        r = extend_to_full_plane(quantization_map(c, GridSpec(3.0, 12, 10)))
        assert r.labels.shape == (12, 80)
        for a in range(0, 12, 5):
            for b in range(0, 80, 7):
                w = r.gammas[a] * np.exp(1j * r.thetas[b])
                assert r.d_min[a, b] == pytest.approx(min_distance(c, w)[0], abs=1e-12)

    def test_bad_grid(self):
        with pytest.raises(InvalidParameterError):
            GridSpec(n_gamma=0)
        with pytest.raises(InvalidParameterError):
            GridSpec(gamma_max=1.0)


def test_writers(tmp_path):
    r = quantization_map(mpsk(4), GridSpec(2.0, 3, 4))
    write_raster_csv(r, tmp_path / "r.csv")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert tuple(rows[0]) == RASTER_HEADER
    assert len(rows) == 13
    assert 0 < float(rows[1][1]) < 45
    write_circles_json(violation_circles(mpsk(4), 0.2), tmp_path / "c.json")
    doc = json.loads((tmp_path / "c.json").read_text())
    assert doc["circles"][1]["theta_deg"] == pytest.approx(45)

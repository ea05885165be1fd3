"""Destination-side fade-state quantization and feedback messages."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .constellation import Constellation
from .errors import FeedbackDecodeError, InvalidParameterError
from .geometry import (
    CanonicalFadeState,
    SingularFadeState,
    enumerate_classes,
    enumerate_singular,
    min_distance_grid,
)


@dataclass(frozen=True)
class ViolationCircle:
    """Disk around a wedge singular state where the minimum distance drops below delta."""

    index: int
    state: SingularFadeState
    delta: float

    @property
    def center(self) -> complex:
        return self.state.z

    @property
    def gamma(self) -> float:
        return self.state.location.gamma

    @property
    def theta(self) -> float:
        return self.state.location.theta

    @property
    def delta_s2(self) -> float:
        return self.state.delta_s2

    @property
    def radius(self) -> float:
        return self.delta / self.delta_s2

    def contains(self, fade) -> bool:
        return abs(complex(fade) - self.center) < self.radius

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "gamma": self.gamma,
            "theta_deg": math.degrees(self.theta),
            "radius": self.radius,
            "delta": self.delta,
        }


def violation_circles(c: Constellation, delta: float, *, bound: Optional[float] = None) -> list[ViolationCircle]:
    """One violation circle per wedge singular state, radius ``delta / |ds2|``.

    If ``bound`` (normally the rotation scheme's delta_max) is given and
    ``delta`` exceeds it, a warning is issued; the circles are still built.
    """
    if not (delta > 0.0) or not math.isfinite(delta):
        raise InvalidParameterError(f"delta must be positive, got {delta!r}")
    if bound is not None and delta > bound:
        warnings.warn(f"delta={delta:g} exceeds the guarantee bound {bound:g}", stacklevel=2)
    return [ViolationCircle(i + 1, s, float(delta)) for i, s in enumerate(enumerate_singular(c).wedge)]


def classify(cs, circles: Sequence[ViolationCircle]) -> Optional[int]:
    """Index of the violation circle containing a canonical fade state, or None.

    Points on a circle boundary are outside.  If several circles contain the
    point, the nearest centre wins (lower index on exact ties).
    """
    w = complex(cs)
    best = None
    for circ in circles:
        dist = abs(w - circ.center)
        if dist < circ.radius and (best is None or dist < best[0]):
            best = (dist, circ.index)
    return None if best is None else best[1]


def classify_array(fades: np.ndarray, circles: Sequence[ViolationCircle]) -> np.ndarray:
    """Vectorized :func:`classify`; 0 marks "outside every circle"."""
    w = np.asarray(fades, dtype=complex)
    out = np.zeros(w.shape, dtype=int)
    if not circles:
        return out
    centers = np.array([c.center for c in circles])
    radii = np.array([c.radius for c in circles])
    dist = np.abs(w[..., None] - centers)
    inside = dist < radii
    dist = np.where(inside, dist, np.inf)
    k = np.argmin(dist, axis=-1)
    return np.where(inside.any(axis=-1), k + 1, 0)


def feedback_bits(n_wedge: int) -> int:
    """Length of a feedback message: one swap bit plus the circle index."""
    if n_wedge < 0:
        raise InvalidParameterError("n_wedge must be >= 0")
    return math.ceil(math.log2(n_wedge + 1)) + 1


@dataclass(frozen=True)
class FeedbackMessage:
    swapped: bool
    circle: Optional[int] = None


def encode_feedback(msg: FeedbackMessage, n_wedge: int) -> str:
    """Bit string: swap flag first, then the circle index (0 = none), MSB first."""
    width = feedback_bits(n_wedge) - 1
    idx = 0 if msg.circle is None else msg.circle
    if msg.circle is not None and not 1 <= msg.circle <= n_wedge:
        raise InvalidParameterError(f"circle index must be in [1, {n_wedge}], got {msg.circle}")
    return ("1" if msg.swapped else "0") + (format(idx, f"0{width}b") if width else "")


def decode_feedback(bits: str, n_wedge: int) -> FeedbackMessage:
    n = feedback_bits(n_wedge)
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise FeedbackDecodeError(f"expected {n} bits of 0/1, got {bits!r}")
    idx = int(bits[1:], 2) if n > 1 else 0
    if idx > n_wedge:
        raise FeedbackDecodeError(f"circle index {idx} exceeds {n_wedge}")
    return FeedbackMessage(swapped=bits[0] == "1", circle=idx or None)


def quantize(cs: CanonicalFadeState, circles: Sequence[ViolationCircle]) -> FeedbackMessage:
    """The feedback message the destination sends for a canonical fade state."""
    return FeedbackMessage(cs.transform.swapped, classify(cs, circles))


# cells x classes evaluated per chunk
_CELL_BUDGET = 4_000_000


@dataclass(frozen=True)
class GridSpec:
    """Cell-centred polar grid over ``gamma in [gamma_min, gamma_max]``, ``theta in [0, pi/M]``."""

    gamma_max: float = 4.0
    n_gamma: int = 600
    n_theta: int = 600
    gamma_min: float = 1.0

    def __post_init__(self):
        if self.n_gamma < 1 or self.n_theta < 1:
            raise InvalidParameterError("grid must have at least one cell per axis")
        if not self.gamma_max > self.gamma_min:
            raise InvalidParameterError("gamma_max must exceed gamma_min")

    def gammas(self) -> np.ndarray:
        step = (self.gamma_max - self.gamma_min) / self.n_gamma
        return self.gamma_min + step * (np.arange(self.n_gamma) + 0.5)

    def thetas(self, M: int) -> np.ndarray:
        return (np.pi / M) / self.n_theta * (np.arange(self.n_theta) + 0.5)


@dataclass(frozen=True, eq=False)
class Raster:
    """Argmin class labels on a polar grid (rows: gamma, columns: theta)."""

    M: int
    gammas: np.ndarray
    thetas: np.ndarray
    labels: np.ndarray
    d_min: np.ndarray

    def rows(self):
        for a, g in enumerate(self.gammas):
            for b, t in enumerate(self.thetas):
                yield float(g), float(t), int(self.labels[a, b]), float(self.d_min[a, b])


def quantization_map(c: Constellation, grid: GridSpec = GridSpec()) -> Raster:
    """Label every wedge cell with the class giving the minimum distance there."""
    g, t = grid.gammas(), grid.thetas(c.M)
    phase = np.exp(1j * t)
    dmin = np.empty((len(g), len(t)))
    labels = np.empty((len(g), len(t)), dtype=int)
    n_classes = len(enumerate_classes(c))
    rows = max(1, _CELL_BUDGET // (len(t) * n_classes))
    for a in range(0, len(g), rows):
        dmin[a : a + rows], labels[a : a + rows] = min_distance_grid(c, g[a : a + rows, None] * phase)
    return Raster(c.M, g, t, labels, dmin)


def extend_to_full_plane(r: Raster) -> Raster:
    """Mirror the wedge raster about pi/M and repeat it over all M sectors.

    Column ``j`` of the result sits at angle ``(j + 1/2) pi / (M n)``; it
    carries the label of the canonical cell it folds onto.
    """
    n = len(r.thetas)
    j = np.arange(2 * r.M * n)
    half, pos = divmod(j, n)
    src = np.where(half % 2 == 1, n - 1 - pos, pos)
    thetas = (np.pi / r.M) / n * (j + 0.5)
    return Raster(r.M, r.gammas, thetas, r.labels[:, src], r.d_min[:, src])


RASTER_HEADER = ("gamma", "theta", "argmin_class", "d_min")


def write_raster_csv(r: Raster, path) -> None:
    """One row per cell; theta in degrees."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RASTER_HEADER)
        for g, t, lab, d in r.rows():
            w.writerow([f"{g:.10g}", f"{math.degrees(t):.10g}", lab, f"{d:.12g}"])


def write_circles_json(circles: Sequence[ViolationCircle], path) -> None:
    Path(path).write_text(json.dumps({"circles": [c.to_dict() for c in circles]}, indent=2) + "\n")

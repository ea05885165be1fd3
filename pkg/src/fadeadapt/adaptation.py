"""Rotation policy: optimal rotation per violation circle and the bound on delta.

Rotating User-2's constellation by ``alpha`` turns the fade state ``w`` into
``w * exp(1j * alpha)``.  For each wedge singular state the policy picks the
phase on the arc ``|w| = gamma_i`` that maximizes the minimum distance of the
effective constellation, and stores the rotation that moves the circle centre
there.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from .constellation import Constellation, mpsk
from .errors import InvalidParameterError, ProtocolError
from .geometry import SingularFadeState, enumerate_singular, min_distance, min_distance_grid
from .quantizer import FeedbackMessage

ANTICLOCKWISE = "anticlockwise"
CLOCKWISE = "clockwise"

GRID_POINTS = 2000
REFINE_TOL = 1e-10
TIE_REL_TOL = 1e-9

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a: float, b: float, tol: float = REFINE_TOL) -> float:
    """Maximizer of a unimodal ``f`` on ``[a, b]`` to within ``tol``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class CircleRotation:
    """Optimal rotation for the violation circle around one wedge singular state."""

    index: int
    state: SingularFadeState
    theta_opt: float
    alpha_opt: float
    direction: str
    achieved_dmin: float

    @property
    def signed_alpha(self) -> float:
        """Rotation angle, positive for anticlockwise."""
        return self.alpha_opt if self.direction == ANTICLOCKWISE else -self.alpha_opt

    @property
    def shifted_center(self) -> complex:
        return complex(self.state.location.gamma * np.exp(1j * self.theta_opt))


def _arc_dmin(c: Constellation, gamma: float):
    def f(theta):
        return float(min_distance_grid(c, gamma * np.exp(1j * theta))[0])

    return f


def optimal_rotation(c: Constellation, i: int) -> CircleRotation:
    """Maximize the minimum distance along the arc through wedge singular state ``i``.

    A dense grid locates the best cell, then golden-section search refines
    it on the bracketing interval.
    """
    wedge = enumerate_singular(c).wedge
    if not 1 <= i <= len(wedge):
        raise InvalidParameterError(f"circle index must be in [1, {len(wedge)}], got {i}")
    s = wedge[i - 1]
    gamma, theta_i = s.location.gamma, s.location.theta
    top = np.pi / c.M

    grid = np.linspace(0.0, top, GRID_POINTS)
    vals = min_distance_grid(c, gamma * np.exp(1j * grid))[0]
    k = int(np.argmax(vals))
    f = _arc_dmin(c, gamma)
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, GRID_POINTS - 1)]
    cand = golden_section_max(f, lo, hi)
    theta_opt = max((cand, lo, hi, grid[k]), key=f)

    if theta_i == 0.0:
        direction, alpha = ANTICLOCKWISE, theta_opt
    else:
        direction, alpha = CLOCKWISE, top - theta_opt
    return CircleRotation(i, s, float(theta_opt), float(alpha), direction, f(theta_opt))


@dataclass(frozen=True)
class DeltaBoundTerm:
    """One (shifted circle, singular state) constraint on delta."""

    circle: int
    z: complex
    distance: float
    bound: float


@dataclass(frozen=True)
class DeltaMax:
    value: float
    attaining: tuple[DeltaBoundTerm, ...]
    per_circle: tuple[DeltaBoundTerm, ...]


def delta_max(c: Constellation, rotations) -> DeltaMax:
    """Largest delta for which no shifted circle overlaps any violation circle.

    Shifted circle ``i`` (centre ``gamma_i exp(1j theta_opt)``, radius
    ``delta / |ds2_i|``) must stay clear of the circle around every nonzero
    singular state ``z`` with ``|z| >= 1``; both radii are linear in delta, so
    each pair gives ``delta <= |centre - z| / (1/|ds2_i| + 1/|ds2_z|)``.
    """
    states = enumerate_singular(c).outer()
    zs = np.array([s.z for s in states])
    inv_z = np.array([1.0 / s.delta_s2 for s in states])
    terms = []
    per_circle = []
    for rot in rotations:
        dist = np.abs(rot.shifted_center - zs)
        bounds = dist / (1.0 / rot.state.delta_s2 + inv_z)
        row = [DeltaBoundTerm(rot.index, complex(z), float(d), float(b)) for z, d, b in zip(zs, dist, bounds)]
        per_circle.append(min(row, key=lambda t: t.bound))
        terms.extend(row)
    value = min(t.bound for t in terms)
    attaining = tuple(t for t in terms if t.bound <= value * (1.0 + TIE_REL_TOL))
    return DeltaMax(value, attaining, tuple(per_circle))


@dataclass(frozen=True)
class RotationPolicy:
    M: int
    rotations: tuple[CircleRotation, ...]
    delta_max: float
    bound: DeltaMax

    @property
    def n_wedge(self) -> int:
        return len(self.rotations)

    def rotation(self, circle: int) -> CircleRotation:
        if not 1 <= circle <= len(self.rotations):
            raise ProtocolError(f"circle index {circle} outside policy range 1..{len(self.rotations)}")
        return self.rotations[circle - 1]

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "delta_max": self.delta_max,
            "circles": [
                {
                    "index": r.index,
                    "center": {"gamma": r.state.location.gamma, "theta_deg": r.state.location.theta_deg},
                    "radius_coefficient": 1.0 / r.state.delta_s2,
                    "theta_opt_deg": math.degrees(r.theta_opt),
                    "alpha_opt_deg": math.degrees(r.alpha_opt),
                    "direction": r.direction,
                    "achieved_dmin": r.achieved_dmin,
                }
                for r in self.rotations
            ],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


@lru_cache(maxsize=None)
def _policy(M: int) -> RotationPolicy:
    c = mpsk(M)
    rots = tuple(optimal_rotation(c, i + 1) for i in range(len(enumerate_singular(c).wedge)))
    bound = delta_max(c, rots)
    return RotationPolicy(M, rots, bound.value, bound)


def build_policy(c: Constellation) -> RotationPolicy:
    """Rotation for every violation circle plus the resulting delta_max."""
    return _policy(c.M)


@dataclass(frozen=True)
class RotationInstruction:
    """Unit phase factors each user applies to its constellation."""

    user1: complex = 1.0 + 0j
    user2: complex = 1.0 + 0j
    rotating_user: Optional[int] = None
    angle: float = 0.0


def apply_rotation(msg: FeedbackMessage, policy: RotationPolicy, M: Optional[int] = None) -> RotationInstruction:
    """Turn a decoded feedback message into per-user rotations.

    The user whose gain sits in the numerator of the quantized ratio rotates:
    User-2 normally, User-1 when the destination swapped the ratio.
    """
    if M is not None and M != policy.M:
        raise ProtocolError(f"policy is for M={policy.M}, message for M={M}")
    if msg.circle is None:
        return RotationInstruction()
    angle = policy.rotation(msg.circle).signed_alpha
    phase = complex(np.exp(1j * angle))
    if msg.swapped:
        return RotationInstruction(user1=phase, rotating_user=1, angle=angle)
    return RotationInstruction(user2=phase, rotating_user=2, angle=angle)


def rotated_ratio(h1: complex, h2: complex, instr: RotationInstruction, swapped: bool) -> complex:
    """Fade ratio seen by the destination after rotation, relative to the reference user."""
    a1, a2 = complex(h1) * instr.user1, complex(h2) * instr.user2
    return a1 / a2 if swapped else a2 / a1


def post_rotation_min_distance(c: Constellation, h1: complex, h2: complex, instr: RotationInstruction, swapped: bool) -> float:
    """Minimum distance of the rotated effective constellation (reference gain normalized)."""
    return min_distance(c, rotated_ratio(h1, h2, instr, swapped))[0]

"""Fade-state geometry of the two-user M-PSK effective constellation.

A fade state is the complex ratio ``w = gamma * exp(1j * theta)`` of the two
channel gains.  For a pair of effective points built from input differences
``ds1 = s1 - s1'`` and ``ds2 = s2 - s2'`` the squared distance is::

    d^2(w) = |ds1|^2 + |w|^2 |ds2|^2 + 2 Re(conj(ds1) ds2 w)

so every pair is described by ``(A, B, K) = (|ds1|^2, |ds2|^2, conj(ds1) ds2)``.
Pairs sharing a distance function form a distance class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .constellation import Constellation, effective_constellation, mpsk
from .errors import DegenerateChannelError, FadeAdaptError, InvalidParameterError

#: probe grid used to confirm that grouped pairs share one distance function
PROBE_GAMMAS = (1.0, 1.3, 2.1, 3.7)
FUNC_TOL = 1e-9
CLAMP_TOL = 1e-12
DEDUP_TOL = 1e-9
TIE_TOL = 1e-12


@dataclass(frozen=True)
class FadeState:
    """The fade state ``gamma * exp(1j * theta)``; theta in radians, taken mod 2 pi."""

    gamma: float
    theta: float

    def __post_init__(self):
        if not (self.gamma >= 0.0) or not math.isfinite(self.gamma):
            raise InvalidParameterError(f"gamma must be finite and >= 0, got {self.gamma!r}")
        if not math.isfinite(self.theta):
            raise InvalidParameterError(f"theta must be finite, got {self.theta!r}")

    def __complex__(self) -> complex:
        return complex(self.gamma * np.exp(1j * self.theta))

    @classmethod
    def from_complex(cls, w: complex) -> "FadeState":
        w = complex(w)
        return cls(abs(w), math.atan2(w.imag, w.real) if w != 0 else 0.0)

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)


@dataclass(frozen=True)
class WedgeTransform:
    """How a fade ratio was folded into the wedge ``gamma >= 1, 0 <= theta <= pi/M``.

    ``swapped`` means ``h1/h2`` was used instead of ``h2/h1``; ``wedge_index``
    is the multiple of ``2 pi / M`` removed from the phase; ``reflected`` means
    the residue was mirrored about ``pi / M``.
    """

    swapped: bool
    wedge_index: int
    reflected: bool


@dataclass(frozen=True)
class CanonicalFadeState:
    gamma: float
    theta_c: float
    transform: WedgeTransform
    M: int

    def __complex__(self) -> complex:
        return complex(self.gamma * np.exp(1j * self.theta_c))

    @property
    def fade(self) -> FadeState:
        return FadeState(self.gamma, self.theta_c)

    def used_ratio(self) -> complex:
        """Undo the rotation and reflection: the ratio the destination computed."""
        step = 2.0 * np.pi / self.M
        residue = step - self.theta_c if self.transform.reflected else self.theta_c
        return complex(self.gamma * np.exp(1j * (self.transform.wedge_index * step + residue)))

    def original_ratio(self) -> complex:
        """The ratio ``h2 / h1`` regardless of which one the destination used."""
        r = self.used_ratio()
        return 1.0 / r if self.transform.swapped else r


def _fold_phase(phase, M: int):
    """Reduce phases into [0, pi/M]; returns (theta_c, wedge_index, reflected)."""
    step = 2.0 * np.pi / M
    phase = np.mod(phase, 2.0 * np.pi)
    k = np.floor(phase / step)
    residue = phase - k * step
    # roundoff can leave residue == step
    wrap = residue >= step
    k = np.where(wrap, k + 1, k) % M
    residue = np.where(wrap, residue - step, residue)
    reflected = residue > step / 2.0
    theta_c = np.where(reflected, step - residue, residue)
    return theta_c, k.astype(int), reflected


def canonicalize(h1: complex, h2: complex, M: int) -> CanonicalFadeState:
    """Fold the fade state of a channel pair into the canonical wedge.

    The destination uses ``h2/h1`` unless its magnitude is below one, in
    which case it uses ``h1/h2`` (and the roles of the users swap).
    """
    h1, h2 = complex(h1), complex(h2)
    if h1 == 0 or h2 == 0:
        raise DegenerateChannelError("both channel gains must be nonzero")
    mpsk(M)
    ratio = h2 / h1
    swapped = abs(ratio) < 1.0
    if swapped:
        ratio = h1 / h2
    theta_c, k, reflected = _fold_phase(math.atan2(ratio.imag, ratio.real), M)
    return CanonicalFadeState(
        gamma=abs(ratio),
        theta_c=float(theta_c),
        transform=WedgeTransform(bool(swapped), int(k), bool(reflected)),
        M=M,
    )


def canonicalize_arrays(h1: np.ndarray, h2: np.ndarray, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`canonicalize`: returns (canonical fade states, swapped flags)."""
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    if np.any(h1 == 0) or np.any(h2 == 0):
        raise DegenerateChannelError("both channel gains must be nonzero")
    swapped = np.abs(h2) < np.abs(h1)
    ratio = np.where(swapped, h1 / np.where(swapped, h2, 1.0), h2 / np.where(swapped, 1.0, h1))
    theta_c, _, _ = _fold_phase(np.angle(ratio), M)
    return np.abs(ratio) * np.exp(1j * theta_c), swapped


@dataclass(frozen=True, eq=False)
class DistanceClass:
    """Pairs of effective points whose distance is the same function of the fade state.

    ``A``, ``B`` and ``K`` give ``d^2(w) = A + |w|^2 B + 2 Re(K w)``; in polar
    form ``R = 2 |K|`` and ``psi = arg K``.
    """

    index: int
    members: tuple[tuple[int, int], ...]
    A: float
    B: float
    K: complex

    @property
    def representative(self) -> tuple[int, int]:
        return self.members[0]

    @property
    def R(self) -> float:
        return 2.0 * abs(self.K)

    @property
    def psi(self) -> float:
        return math.atan2(self.K.imag, self.K.real)

    @property
    def delta_s1(self) -> float:
        return math.sqrt(self.A)

    @property
    def delta_s2(self) -> float:
        return math.sqrt(self.B)

    def value_sq(self, fade) -> float:
        w = complex(fade)
        return self.A + abs(w) ** 2 * self.B + 2.0 * (self.K * w).real

    def __repr__(self) -> str:
        return (
            f"DistanceClass(index={self.index}, rep={self.representative}, "
            f"size={len(self.members)}, A={self.A:.6g}, B={self.B:.6g}, K={self.K:.6g})"
        )


def _pair_coefficients(M: int):
    c = mpsk(M)
    q = np.arange(M * M)
    m, n = q % M, q // M
    i, j = np.triu_indices(M * M, k=1)
    ds1 = c.points[m[i]] - c.points[m[j]]
    ds2 = c.points[n[i]] - c.points[n[j]]
    return i + 1, j + 1, np.abs(ds1) ** 2, np.abs(ds2) ** 2, np.conj(ds1) * ds2


def _probe_points(M: int) -> np.ndarray:
    thetas = np.array([0.0, np.pi / (3 * M), np.pi / (2 * M), np.pi / M])
    g = np.array(PROBE_GAMMAS)
    return (g[:, None] * np.exp(1j * thetas[None, :])).ravel()


def _eval_sq(A, B, K, w):
    """Squared class distances; broadcasts classes along the last axis."""
    w = np.asarray(w, dtype=complex)[..., None]
    return A + np.abs(w) ** 2 * B + 2.0 * (K * w).real


@lru_cache(maxsize=None)
def _classes(M: int) -> tuple[DistanceClass, ...]:
    i, j, A, B, K = _pair_coefficients(M)
    key = np.stack([A, B, K.real, K.imag], axis=1)
    key = np.round(key, 9) + 0.0
    _, inverse = np.unique(key, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    probes = _probe_points(M)

    groups = []
    for g in range(inverse.max() + 1):
        idx = np.flatnonzero(inverse == g)
        # representative: minimal i + j, then minimal i
        order = np.lexsort((i[idx], i[idx] + j[idx]))
        idx = idx[order]
        r = idx[0]
        vals = _eval_sq(A[idx], B[idx], K[idx], probes)
        if np.max(np.abs(vals - vals[:, :1])) > FUNC_TOL:
            raise FadeAdaptError(f"pairs grouped with {(i[r], j[r])} disagree at probe points")
        groups.append(
            (
                (int(i[r] + j[r]), int(i[r])),
                tuple((int(a), int(b)) for a, b in zip(i[idx], j[idx])),
                float(A[r]),
                float(B[r]),
                complex(K[r]),
            )
        )
    groups.sort(key=lambda g: g[0])
    return tuple(
        DistanceClass(index=k + 1, members=mem, A=a, B=b, K=kk)
        for k, (_, mem, a, b, kk) in enumerate(groups)
    )


def enumerate_classes(c: Constellation) -> list[DistanceClass]:
    """Partition all effective-point pairs into distance classes.

    Classes are ordered by their representative ``(i + j, i)`` and indexed
    from 1 in that order.
    """
    return list(_classes(c.M))


@lru_cache(maxsize=None)
def class_coefficients(M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arrays ``(A, B, K)`` over classes, in enumeration order."""
    cls = _classes(M)
    return (
        np.array([k.A for k in cls]),
        np.array([k.B for k in cls]),
        np.array([k.K for k in cls]),
    )


def _safe_sqrt(v):
    v = np.asarray(v, dtype=float)
    if np.any(v < -CLAMP_TOL):
        raise FadeAdaptError(f"negative squared distance {v.min():.3g}")
    return np.sqrt(np.clip(v, 0.0, None))


def class_distance(cl: DistanceClass, fs) -> float:
    """Value of the class distance function at a fade state."""
    return float(_safe_sqrt(cl.value_sq(fs)))


def class_distances(c: Constellation, fades) -> np.ndarray:
    """All class distances at one or many fade states; classes on the last axis."""
    A, B, K = class_coefficients(c.M)
    return _safe_sqrt(_eval_sq(A, B, K, fades))


def min_distance_grid(c: Constellation, fades) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`min_distance`: (d_min values, 1-based argmin class indices)."""
    d = class_distances(c, fades)
    dmin = d.min(axis=-1)
    # ties resolve to the lowest class index
    arg = np.argmax(d <= dmin[..., None] + TIE_TOL, axis=-1)
    return dmin, arg + 1


def min_distance(c: Constellation, fs) -> tuple[float, DistanceClass]:
    """Minimum distance of the effective constellation and the class attaining it."""
    dmin, arg = min_distance_grid(c, complex(fs))
    return float(dmin), _classes(c.M)[int(arg) - 1]


def brute_force_min_distance(c: Constellation, fs) -> tuple[float, tuple[int, int]]:
    """Minimum over all pairwise distances of the explicit effective constellation.

    Independent of the class machinery; used as an oracle.
    """
    pts = effective_constellation(c, complex(fs))
    d = np.abs(pts[:, None] - pts[None, :])
    i, j = np.triu_indices(len(pts), k=1)
    vals = d[i, j]
    k = int(np.argmin(vals))
    return float(vals[k]), (int(i[k]) + 1, int(j[k]) + 1)


@dataclass(frozen=True, eq=False)
class SingularFadeState:
    """A fade state where two effective points coincide."""

    location: FadeState
    vanishing_classes: tuple[DistanceClass, ...]
    minimal_class: DistanceClass

    @property
    def z(self) -> complex:
        return complex(self.location)

    @property
    def delta_s2(self) -> float:
        return self.minimal_class.delta_s2

    def __repr__(self) -> str:
        return (
            f"SingularFadeState(gamma={self.location.gamma:.6g}, "
            f"theta_deg={self.location.theta_deg:.6g}, minimal_class={self.minimal_class.index})"
        )


@dataclass(frozen=True)
class SingularSet:
    """Singular fade states of an M-PSK pair.

    ``nonzero`` lists every nonzero singular state in the complex plane;
    ``wedge`` is the subset with ``gamma >= 1`` and ``0 <= theta <= pi/M``,
    ordered by angle (0 before pi/M) and then by magnitude.
    """

    zero: SingularFadeState
    nonzero: tuple[SingularFadeState, ...]
    wedge: tuple[SingularFadeState, ...]

    @property
    def full(self) -> tuple[SingularFadeState, ...]:
        return (self.zero,) + self.nonzero

    @property
    def n_wedge(self) -> int:
        return len(self.wedge)

    def outer(self) -> tuple[SingularFadeState, ...]:
        """Nonzero states with ``gamma >= 1`` over all angles."""
        return tuple(s for s in self.nonzero if s.location.gamma >= 1.0 - DEDUP_TOL)


def min_vanishing_class(s: SingularFadeState) -> DistanceClass:
    """Among the classes vanishing at ``s``, the one that is smallest everywhere else.

    Each vanishing class equals ``|ds2| * |w - z|``, so the smallest ``|ds2|``
    dominates.
    """
    return _smallest_ds2(s.vanishing_classes)


def _smallest_ds2(classes) -> DistanceClass:
    if not classes:
        raise InvalidParameterError("singular state has no vanishing class")
    return min(classes, key=lambda k: (k.B, k.index))


def _make_singular(z: complex, classes, vals) -> SingularFadeState:
    vanishing = tuple(k for k, v in zip(classes, vals) if abs(v) < FUNC_TOL)
    return SingularFadeState(FadeState.from_complex(z), vanishing, _smallest_ds2(vanishing))


def _snap_angle(theta: float, M: int) -> float:
    for target in (0.0, np.pi / M):
        if abs(theta - target) < DEDUP_TOL:
            return target
    return theta


@lru_cache(maxsize=None)
def _singular(M: int) -> SingularSet:
    classes = _classes(M)
    A, B, K = class_coefficients(M)
    i, j, pA, pB, pK = _pair_coefficients(M)
    mask = (pA > FUNC_TOL) & (pB > FUNC_TOL)
    # -ds1/ds2 == -conj(K)/|ds2|^2
    z = -np.conj(pK[mask]) / pB[mask]
    keys = np.round(np.stack([z.real, z.imag], axis=1), 9) + 0.0
    _, first = np.unique(keys, axis=0, return_index=True)
    zs = z[np.sort(first)]
    # drop near-duplicates the rounding split
    uniq: list[complex] = []
    for w in zs:
        if all(abs(w - u) > DEDUP_TOL for u in uniq):
            uniq.append(complex(w))

    vals = _eval_sq(A, B, K, np.array(uniq))
    nonzero = [_make_singular(w, classes, v) for w, v in zip(uniq, vals)]
    nonzero.sort(key=lambda s: (round(s.location.gamma, 9), round(np.mod(s.location.theta, 2 * np.pi), 9)))

    zero = _make_singular(0j, classes, _eval_sq(A, B, K, 0j))

    wedge = []
    for s in nonzero:
        g, th = s.location.gamma, s.location.theta
        if g >= 1.0 - DEDUP_TOL and -DEDUP_TOL <= th <= np.pi / M + DEDUP_TOL:
            loc = FadeState(g, _snap_angle(th, M))
            wedge.append(SingularFadeState(loc, s.vanishing_classes, s.minimal_class))
    wedge.sort(key=lambda s: (s.location.theta, s.location.gamma))
    return SingularSet(zero=zero, nonzero=tuple(nonzero), wedge=tuple(wedge))


def enumerate_singular(c: Constellation) -> SingularSet:
    """All singular fade states, each with its vanishing and minimal classes."""
    return _singular(c.M)


def expected_singular_count(M: int) -> int:
    """Closed-form count of nonzero singular states in the plane."""
    return M**3 // 4 - M**2 // 2 + M


def expected_wedge_count(M: int) -> int:
    """Closed-form count of singular states in the canonical wedge."""
    return (M**2 - 2 * M + 8) // 8

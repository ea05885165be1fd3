"""Symmetric M-PSK signal sets and the indexed effective sum constellation.

Point ``k`` of an M-PSK set (1-based) is ``exp(1j * (k - 1) * 2 * pi / M)``.
A point of the effective constellation ``S + w * S`` built from User-1 point
``m`` and User-2 point ``n`` carries the label ``q = m + M * (n - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError


def _is_power_of_two(m: int) -> bool:
    return m >= 2 and (m & (m - 1)) == 0


@dataclass(frozen=True, eq=False)
class Constellation:
    """An M-PSK signal set with unit-energy points in increasing angular order."""

    M: int
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.points.setflags(write=False)

    @property
    def d_min(self) -> float:
        """Minimum distance of the input set, sqrt(2 (1 - cos(2 pi / M)))."""
        return float(np.sqrt(2.0 * (1.0 - np.cos(2.0 * np.pi / self.M))))

    def point(self, k: int) -> complex:
        """Point ``k`` (1-based)."""
        _check_index(k, self.M, "point index")
        return complex(self.points[k - 1])

    def __len__(self) -> int:
        return self.M

    def __hash__(self) -> int:
        return hash(("mpsk", self.M))

    def __eq__(self, other) -> bool:
        return isinstance(other, Constellation) and other.M == self.M


@lru_cache(maxsize=None)
def mpsk(M: int) -> Constellation:
    """Build the symmetric M-PSK constellation; M must be a power of two >= 2."""
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)) or not _is_power_of_two(int(M)):
        raise InvalidParameterError(f"M must be a power of two >= 2, got {M!r}")
    M = int(M)
    k = np.arange(M)
    return Constellation(M, np.exp(2j * np.pi * k / M))


def _check_index(k: int, upper: int, what: str) -> None:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= upper:
        raise InvalidParameterError(f"{what} must be an integer in [1, {upper}], got {k!r}")


def eff_index(m: int, n: int, M: int) -> int:
    """Label of the effective point combining User-1 point m and User-2 point n."""
    _check_index(m, M, "m")
    _check_index(n, M, "n")
    return int(m + M * (n - 1))


def index_roundtrip(q: int, M: int) -> tuple[int, int]:
    """Split an effective-constellation label ``q`` into ``(m, n)``."""
    _check_index(q, M * M, "q")
    n, m0 = divmod(int(q) - 1, M)
    return m0 + 1, n + 1


def eff_point(c: Constellation, m: int, n: int, fade: complex) -> complex:
    """The point ``s_m + fade * s_n`` of the effective constellation.

    ``fade`` is the complex fade state ``gamma * exp(1j * theta)``; a
    :class:`~fadeadapt.geometry.FadeState` is accepted as well.
    """
    _check_index(m, c.M, "m")
    _check_index(n, c.M, "n")
    w = complex(fade)
    return complex(c.points[m - 1] + w * c.points[n - 1])


def effective_constellation(c: Constellation, fade: complex) -> np.ndarray:
    """All M**2 effective points, ordered by label q (index ``q - 1``)."""
    w = complex(fade)
    # q - 1 = (m - 1) + M (n - 1): User-1 index varies fastest
    return (c.points[None, :] + w * c.points[:, None]).ravel()

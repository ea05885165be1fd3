"""Monte Carlo simulation of the adaptive two-user fading MAC.

Each trial draws ``h1, h2 ~ CN(0, 1)``, quantizes the fade state at the
destination, applies the fed-back rotation at the transmitters, sends one
symbol per user through ``y = h1 x1 + h2 x2 + z`` and detects the pair jointly
by maximum likelihood.  Per-user SNR is ``P / sigma^2`` with ``P = 1``.

Randomness is drawn in fixed-size blocks; block ``b`` of SNR point ``s`` uses
the substream keyed by ``(seed, s, b)``, so results do not depend on how
blocks are spread over workers.
"""

from __future__ import annotations

import csv
import json
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .adaptation import build_policy
from .constellation import mpsk
from .errors import InsufficientRangeError, InvalidParameterError
from .geometry import canonicalize_arrays
from .quantizer import classify_array, violation_circles

JOINT = "joint"
PER_USER = "per_user"
WORKERS_ENV = "FADEADAPT_WORKERS"
DEFAULT_BLOCK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    M: int = 4
    delta: float = 0.35
    snr_db: tuple[float, ...] = tuple(float(s) for s in range(0, 25, 2))
    trials_per_snr: int = 100_000
    seed: int = 0
    error_metric: str = JOINT
    force: bool = False
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        mpsk(self.M)
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if self.trials_per_snr < 1:
            raise InvalidParameterError("trials_per_snr must be >= 1")
        if self.block_size < 1:
            raise InvalidParameterError("block_size must be >= 1")
        if not self.snr_db:
            raise InvalidParameterError("snr_db must not be empty")
        if self.error_metric not in (JOINT, PER_USER):
            raise InvalidParameterError(f"error_metric must be {JOINT!r} or {PER_USER!r}")
        if not (self.delta >= 0.0) or not math.isfinite(self.delta):
            raise InvalidParameterError("delta must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError("seed must be a 64-bit unsigned integer")
        bound = build_policy(mpsk(self.M)).delta_max
        if self.delta > bound and not self.force:
            raise InvalidParameterError(f"delta={self.delta:g} exceeds delta_max={bound:.6g}; set force to override")


@dataclass(frozen=True)
class SerPoint:
    snr_db: float
    ser: float
    errors: int
    trials: int
    decisions: int

    @property
    def ci95(self) -> float:
        p = self.ser
        return 1.96 * math.sqrt(p * (1.0 - p) / self.decisions)


@dataclass(frozen=True)
class SerCurve:
    delta: float
    error_metric: str
    points: tuple[SerPoint, ...]

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def ser(self) -> np.ndarray:
        return np.array([p.ser for p in self.points])


@dataclass(frozen=True)
class SweepResult:
    adaptive: SerCurve
    baseline: SerCurve
    config: SimConfig
    extra: dict = field(default_factory=dict)


def ml_detect(y, a1, a2, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Joint ML decision over all M**2 symbol pairs.

    ``a1`` and ``a2`` are the effective per-user gains (channel times any
    rotation).  Returns 0-based ``(m, n)`` indices; exact ties go to the lowest
    label ``q = m + M n``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    a1 = np.broadcast_to(np.asarray(a1, dtype=complex), y.shape)
    a2 = np.broadcast_to(np.asarray(a2, dtype=complex), y.shape)
    M = len(points)
    # axis 1: User-2 index n, axis 2: User-1 index m -> flat index m + M n
    hyp = a1[:, None, None] * points[None, None, :] + a2[:, None, None] * points[None, :, None]
    metric = np.abs(y[:, None, None] - hyp) ** 2
    q = np.argmin(metric.reshape(len(y), M * M), axis=1)
    return q % M, q // M


def _rotation_table(M: int, delta: float) -> tuple[list, np.ndarray]:
    if delta == 0.0:
        return [], np.ones(1, dtype=complex)
    policy = build_policy(mpsk(M))
    circles = violation_circles(mpsk(M), delta)
    phases = np.array([1.0 + 0j] + [np.exp(1j * r.signed_alpha) for r in policy.rotations])
    return circles, phases


def _channel_draws(rng: np.random.Generator, n: int, M: int, snr_db: float):
    def cn(scale):
        return math.sqrt(scale / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))

    h1 = cn(1.0)
    h2 = cn(1.0)
    x1 = rng.integers(0, M, n)
    x2 = rng.integers(0, M, n)
    z = cn(10.0 ** (-snr_db / 10.0))
    return h1, h2, x1, x2, z


def simulate_block(M: int, deltas: Sequence[float], snr_db: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Error counts for ``n`` trials, one row per delta: (joint, user1, user2).

    All deltas see the same channel, symbol and noise draws.
    """
    pts = mpsk(M).points
    h1, h2, x1, x2, z = _channel_draws(rng, n, M, snr_db)
    w, swapped = canonicalize_arrays(h1, h2, M)
    out = np.zeros((len(deltas), 3), dtype=np.int64)
    for k, delta in enumerate(deltas):
        circles, phases = _rotation_table(M, delta)
        rot = phases[classify_array(w, circles)] if circles else np.ones(n, dtype=complex)
        a1 = h1 * np.where(swapped, rot, 1.0)
        a2 = h2 * np.where(swapped, 1.0, rot)
        y = a1 * pts[x1] + a2 * pts[x2] + z
        m_hat, n_hat = ml_detect(y, a1, a2, pts)
        e1, e2 = m_hat != x1, n_hat != x2
        out[k] = (np.count_nonzero(e1 | e2), np.count_nonzero(e1), np.count_nonzero(e2))
    return out


def substream(seed: int, snr_index: int, block_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(snr_index, block_index))
    return np.random.Generator(np.random.PCG64(ss))


def run_trial(cfg: SimConfig, rng: np.random.Generator, snr_db: Optional[float] = None) -> int:
    """One channel use; returns the error indicator for ``cfg.error_metric``.

    Joint: 1 if either symbol is wrong.  Per user: number of wrong symbols.
    """
    snr = cfg.snr_db[0] if snr_db is None else snr_db
    joint, e1, e2 = simulate_block(cfg.M, [cfg.delta], snr, 1, rng)[0]
    return int(joint) if cfg.error_metric == JOINT else int(e1 + e2)


def _task(args):
    M, deltas, snr_db, n, seed, s, b = args
    return s, simulate_block(M, deltas, snr_db, n, substream(seed, s, b))


def worker_count(requested: Optional[int] = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def count_errors(cfg: SimConfig, deltas: Sequence[float], workers: Optional[int] = None) -> np.ndarray:
    """Error counts with shape (n_snr, n_deltas, 3), identical for any worker count."""
    tasks = []
    for s, snr in enumerate(cfg.snr_db):
        for b, start in enumerate(range(0, cfg.trials_per_snr, cfg.block_size)):
            n = min(cfg.block_size, cfg.trials_per_snr - start)
            tasks.append((cfg.M, tuple(deltas), snr, n, cfg.seed, s, b))
    totals = np.zeros((len(cfg.snr_db), len(deltas), 3), dtype=np.int64)
    nw = min(worker_count(workers), len(tasks))
    if nw <= 1:
        results = map(_task, tasks)
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            results = list(ex.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * nw))))
    for s, counts in results:
        totals[s] += counts
    return totals


def _curve(cfg: SimConfig, delta: float, counts: np.ndarray, metric: str) -> SerCurve:
    pts = []
    for snr, (joint, e1, e2) in zip(cfg.snr_db, counts):
        if metric == JOINT:
            errs, dec = int(joint), cfg.trials_per_snr
        else:
            errs, dec = int(e1 + e2), 2 * cfg.trials_per_snr
        pts.append(SerPoint(snr, errs / dec, errs, cfg.trials_per_snr, dec))
    return SerCurve(delta, metric, tuple(pts))


def curves_for(cfg: SimConfig, deltas: Sequence[float], metric: Optional[str] = None, workers: Optional[int] = None) -> list[SerCurve]:
    """SER curves for several deltas from one shared set of draws."""
    counts = count_errors(cfg, deltas, workers)
    metric = metric or cfg.error_metric
    return [_curve(cfg, d, counts[:, k], metric) for k, d in enumerate(deltas)]


def run_sweep(cfg: SimConfig, workers: Optional[int] = None) -> SweepResult:
    """Adaptive curve at ``cfg.delta`` and the non-adaptive baseline (delta = 0)."""
    adaptive, baseline = curves_for(cfg, [cfg.delta, 0.0], workers=workers)
    return SweepResult(adaptive, baseline, cfg)


def snr_at(curve: SerCurve, target: float) -> float:
    """SNR where the curve first falls to ``target``, by log-linear interpolation.

    A zero-error point is treated as half an error to keep the logarithm finite.
    """
    if not 0.0 < target < 1.0:
        raise InvalidParameterError("target SER must be in (0, 1)")
    pts = sorted(curve.points, key=lambda p: p.snr_db)
    for p0, p1 in zip(pts, pts[1:]):
        if p0.ser > target >= p1.ser:
            hi = math.log10(p0.ser)
            lo = math.log10(max(p1.ser, 0.5 / p1.decisions))
            if lo >= hi:
                return p1.snr_db
            frac = (hi - math.log10(target)) / (hi - lo)
            return p0.snr_db + frac * (p1.snr_db - p0.snr_db)
    raise InsufficientRangeError(f"curve for delta={curve.delta:g} does not cross SER {target:g}")


def interpolate_gain(adaptive: SerCurve, baseline: SerCurve, target_ser: float) -> float:
    """SNR gain in dB of the adaptive curve over the baseline at ``target_ser``."""
    return snr_at(baseline, target_ser) - snr_at(adaptive, target_ser)


CURVE_HEADER = ("snr_db", "ser", "trials", "ci95")


def write_curve_csv(curve: SerCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for p in curve.points:
            w.writerow([f"{p.snr_db:g}", f"{p.ser:.10g}", p.trials, f"{p.ci95:.10g}"])


def manifest(cfg: SimConfig, extra: Optional[dict] = None) -> dict:
    policy = build_policy(mpsk(cfg.M))
    out = {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "snr_definition": "per-user P/sigma^2 with P = 1, in dB",
        "policy_sha256": policy.digest(),
        "delta_max": policy.delta_max,
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }
    if extra:
        out.update(extra)
    return out


def write_manifest(cfg: SimConfig, path, extra: Optional[dict] = None) -> None:
    Path(path).write_text(json.dumps(manifest(cfg, extra), indent=2) + "\n")

"""Trajectory farms with worker-count invariant results.

Every trajectory draws from its own PCG64 stream seeded by mixing the run
seed with the trajectory index, so results depend only on ``(seed, index)``
and never on how indices are distributed over workers.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .entropy import KernelEvaluator, LedgerTable, entropy_ledger, ift_estimate, second_law_check
from .errors import NumericalError
from .model import DemonParams, LindbladModel, build_demon_model
from .unravel import TrajectorySampler, steady_state

__all__ = [
    "trajectory_seed",
    "run_ensemble",
    "SweepPoint",
    "SweepResult",
    "run_sweep",
    "grid_points",
]

_MASK = (1 << 64) - 1
CHUNK = 500


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def trajectory_seed(seed: int, index: int) -> int:
    """64-bit seed of trajectory ``index`` in a run seeded with ``seed``."""
    return _splitmix64(_splitmix64(int(seed) & _MASK) ^ (int(index) & _MASK))


def _make_model(params: DemonParams, all_visible: bool) -> LindbladModel:
    m = build_demon_model(params)
    return m.with_all_visible() if all_visible else m


_WORKER_CACHE: dict = {}


def _worker_tools(params: DemonParams, all_visible: bool, horizon: float):
    key = (params, all_visible, horizon)
    if key not in _WORKER_CACHE:
        m = _make_model(params, all_visible)
        _WORKER_CACHE.clear()
        _WORKER_CACHE[key] = (m, TrajectorySampler(m, horizon), KernelEvaluator(m), steady_state(m))
    return _WORKER_CACHE[key]


def _run_chunk(task) -> LedgerTable:
    params, all_visible, horizon, seed, start, stop = task
    m, sampler, evaluator, probs = _worker_tools(params, all_visible, horizon)
    ledgers = []
    for i in range(start, stop):
        s = trajectory_seed(seed, i)
        try:
            full = sampler.sample(np.random.Generator(np.random.PCG64(s)))
            ledgers.append(entropy_ledger(m, full, index=i, seed=s, evaluator=evaluator,
                                          probabilities=probs))
        except (NumericalError, ValueError) as exc:
            raise type(exc)(f"trajectory {i} (seed {s}): {exc}") from exc
    return LedgerTable.from_ledgers(ledgers)


def _map(tasks: list, workers: int) -> list[LedgerTable]:
    if workers <= 1 or len(tasks) <= 1:
        return [_run_chunk(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chunk, tasks))


def _chunks(n: int, chunk: int):
    return [(a, min(a + chunk, n)) for a in range(0, n, chunk)]


def run_ensemble(params: DemonParams, horizon: float, n: int, seed: int, *,
                 workers: int = 1, all_visible: bool = False, chunk: int = CHUNK) -> LedgerTable:
    """Sample ``n`` steady-state trajectories and return their entropy ledgers.

    Parameters
    ----------
    params : DemonParams
    horizon : float
        Final time ``T``.
    n : int
        Number of trajectories, indexed ``0..n-1``.
    seed : int
        Run seed; trajectory ``i`` uses ``trajectory_seed(seed, i)``.
    workers : int
        Worker processes; 1 runs in-process.
    all_visible : bool
        Treat every jump as visible.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    tasks = [(params, all_visible, float(horizon), int(seed), a, b) for a, b in _chunks(n, chunk)]
    return LedgerTable.concatenate(_map(tasks, workers))


# -- parameter sweeps --------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    gamma_x: float
    gamma_y: float
    n: int
    mean_ds_env: float
    stderr_ds_env: float
    mean_dsigma_y: float
    stderr_dsigma_y: float
    mean_dsigma: float
    stderr_dsigma: float
    mean_env_plus_hidden: float
    stderr_env_plus_hidden: float
    ift_mean: float
    ift_stderr: float


SWEEP_COLUMNS = tuple(f.name for f in fields(SweepPoint))


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(pt, name) for pt in self.points], dtype=float)

    def diagonal(self) -> "SweepResult":
        """Points with ``gamma_x == gamma_y``, ordered by gamma."""
        pts = sorted((pt for pt in self.points if pt.gamma_x == pt.gamma_y), key=lambda pt: pt.gamma_x)
        return SweepResult(tuple(pts))

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        fh = io.StringIO() if own else fh
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for pt in self.points:
            writer.writerow([pt.n if name == "n" else repr(float(getattr(pt, name)))
                             for name in SWEEP_COLUMNS])
        return fh.getvalue() if own else None


def grid_points(gamma_x: Sequence[float], gamma_y: Sequence[float],
                diagonal: bool = False) -> list[tuple[float, float]]:
    """Sweep points, row-major over ``gamma_x``; ``diagonal`` pairs the lists elementwise."""
    gamma_x, gamma_y = list(gamma_x), list(gamma_y)
    if not gamma_x or not gamma_y:
        raise ValueError("sweep grid is empty")
    if diagonal:
        if len(gamma_x) != len(gamma_y):
            raise ValueError("diagonal sweep needs gamma_x and gamma_y of equal length")
        return list(zip(gamma_x, gamma_y))
    return [(gx, gy) for gx in gamma_x for gy in gamma_y]


def _summarise(gx: float, gy: float, table: LedgerTable) -> SweepPoint:
    rep = second_law_check(table)
    ift_m, ift_s = ift_estimate(table)
    return SweepPoint(gx, gy, len(table), rep.mean_ds_env, rep.stderr_ds_env,
                      rep.mean_dsigma_y, rep.stderr_dsigma_y, rep.mean_dsigma, rep.stderr_dsigma,
                      rep.mean_env_plus_hidden, rep.stderr_env_plus_hidden, ift_m, ift_s)


def run_sweep(params: DemonParams, gamma_x: Sequence[float], gamma_y: Sequence[float],
              horizon: float, n: int, seed: int, *, workers: int = 1, diagonal: bool = False,
              all_visible: bool = False, chunk: int = CHUNK) -> SweepResult:
    """Ensemble statistics at every ``(gamma_x, gamma_y)`` point of a grid.

    Point ``j`` of the grid uses the run seed ``trajectory_seed(seed, j)``.
    """
    if n < 2:
        raise ValueError("sweeps need at least two trajectories per point")
    pts = grid_points(gamma_x, gamma_y, diagonal)
    tasks, owner = [], []
    for j, (gx, gy) in enumerate(pts):
        p = replace(params, gamma_x=float(gx), gamma_y=float(gy))
        point_seed = trajectory_seed(seed, j)
        for a, b in _chunks(n, chunk):
            tasks.append((p, all_visible, float(horizon), point_seed, a, b))
            owner.append(j)
    tables = _map(tasks, workers)
    out = []
    for j, (gx, gy) in enumerate(pts):
        table = LedgerTable.concatenate([t for t, o in zip(tables, owner) if o == j])
        out.append(_summarise(float(gx), float(gy), table))
    return SweepResult(tuple(out))

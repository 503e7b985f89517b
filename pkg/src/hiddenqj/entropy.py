"""Entropy accounting for partially visible jump records.

For a visible record ``a; (k_1, t_1) ... (k_M, t_M); b`` the forward kernel is

    <<b| exp(G dt_M) J_{k_M} ... J_{k_1} exp(G dt_0) |a>>

and the backward kernel is the same product with ``G_bar_dag`` in place of
``G``. Their log ratio is the coarse-grained hidden entropy production.
Kernels are accumulated in log space with per-segment renormalisation, so
long records do not underflow.
"""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ImpossibleTrajectoryError, NumericalError, PreconditionError
from .linops import Propagator
from .model import LindbladModel, jump_superoperator, liouville_generators
from .unravel import Trajectory, VisibleTrajectory, as_visible, steady_state

__all__ = [
    "KernelEvaluator",
    "forward_kernel",
    "backward_kernel",
    "hidden_entropy",
    "hidden_transition_probability",
    "hidden_entropy_reconstructed",
    "system_entropy",
    "EntropyLedger",
    "LedgerTable",
    "entropy_ledger",
    "ift_estimate",
    "SecondLawReport",
    "second_law_check",
]

IMAG_TOL = 1e-10
ZERO_TOL = 1e-14


class KernelEvaluator:
    """Forward and backward visible-record kernels of one model."""

    def __init__(self, model: LindbladModel):
        gens = liouville_generators(model)
        self.model = model
        self._forward = Propagator(gens.G)
        self._backward = Propagator(gens.G_bar_dag)
        self._jumps = {k: jump_superoperator(model, k) for k in model.visible_ids}
        self._visible = frozenset(model.visible_ids)

    def log_kernel(self, v: Trajectory, backward: bool = False) -> float:
        prop = self._backward if backward else self._forward
        n = self.model.dim
        vec = np.zeros(n * n, dtype=complex)
        vec[v.initial * (n + 1)] = 1.0
        log_acc = 0.0
        t_prev = 0.0
        for e in v.events:
            if e.jump_id not in self._visible:
                raise PreconditionError(f"jump {e.jump_id} is not visible")
            vec = self._jumps[e.jump_id] @ prop.apply(e.time - t_prev, vec)
            t_prev = e.time
            scale = np.abs(vec).max()
            if not scale > 0 or not np.isfinite(scale):
                raise ImpossibleTrajectoryError(f"kernel vanished at jump {e.jump_id}, t={e.time}")
            vec /= scale
            log_acc += np.log(scale)
        vec = prop.apply(v.horizon - t_prev, vec)
        value = vec[v.final * (n + 1)]
        scale = np.abs(vec).max()
        if abs(value.imag) > IMAG_TOL * max(scale, 1.0):
            raise NumericalError(f"kernel has imaginary residue {value.imag:.3g}")
        if not value.real > ZERO_TOL * scale:
            raise ImpossibleTrajectoryError("visible record has zero probability")
        return float(log_acc + np.log(value.real))

    def hidden_entropy(self, v: Trajectory) -> float:
        return self.log_kernel(v) - self.log_kernel(v, backward=True)


@lru_cache(maxsize=64)
def _evaluator(m: LindbladModel) -> KernelEvaluator:
    return KernelEvaluator(m)


def forward_kernel(m: LindbladModel, v: Trajectory) -> float:
    """Log of the forward kernel of a visible record (``dt**M`` excluded)."""
    return _evaluator(m).log_kernel(as_visible(m, v))


def backward_kernel(m: LindbladModel, v: Trajectory) -> float:
    """Log of the backward kernel, without the ``exp(-ds_env)`` factor."""
    return _evaluator(m).log_kernel(as_visible(m, v), backward=True)


def hidden_entropy(m: LindbladModel, v: Trajectory) -> float:
    """Coarse-grained hidden entropy production of a visible record."""
    return _evaluator(m).hidden_entropy(as_visible(m, v))


# -- the reconstructible regime ------------------------------------------------

def _single_transition(m: LindbladModel, k: int) -> tuple[int, int]:
    """``(from, to)`` basis states of a visible jump that is a single matrix unit."""
    mat = m.jump(k).matrix
    mag = np.abs(mat)
    nz = np.argwhere(mag > 1e-15 * max(mag.max(), 1e-300))
    if len(nz) != 1:
        raise PreconditionError(
            f"visible jump {k} does not connect a unique pair of states "
            "(requires gamma_x = 0)"
        )
    to, frm = nz[0]
    return int(frm), int(to)


def _interval_states(m: LindbladModel, v: VisibleTrajectory) -> list[tuple[int, int]]:
    """``(chi_f of jump j, chi_i of jump j+1)`` for every interval ``j = 0..M``."""
    starts = [v.initial]
    ends = []
    for k in v.jump_ids:
        frm, to = _single_transition(m, k)
        ends.append(frm)
        starts.append(to)
    ends.append(v.final)
    return list(zip(starts, ends))


def _interval_weights(m: LindbladModel, frm: int, to: int) -> dict[int, float]:
    return {k: float(abs(m.jump(k).matrix[to, frm]) ** 2) for k in m.hidden_ids}


def hidden_transition_probability(m: LindbladModel, v: Trajectory, j: int, k: int) -> float:
    """Probability that hidden jump ``k`` bridged interval ``j`` of the record.

    Only defined when every visible jump connects a unique pair of basis
    states. Same-state intervals return 0 for every ``k``.
    """
    v = as_visible(m, v)
    if k not in m.hidden_ids:
        raise ValueError(f"jump {k} is not a hidden channel")
    intervals = _interval_states(m, v)
    if not 0 <= j < len(intervals):
        raise IndexError(f"interval {j} outside 0..{len(intervals) - 1}")
    frm, to = intervals[j]
    if frm == to:
        return 0.0
    weights = _interval_weights(m, frm, to)
    total = sum(weights.values())
    if total == 0.0:
        raise ImpossibleTrajectoryError(
            f"no hidden jump connects {m.basis_labels[frm]} to {m.basis_labels[to]}"
        )
    return weights[k] / total


def hidden_entropy_reconstructed(m: LindbladModel, v: Trajectory) -> float:
    """Hidden entropy from per-interval hidden-jump probabilities.

    ``-sum_j log sum_k p_k^j exp(-ds_k)``, with same-state intervals
    contributing nothing. Valid when visible jumps connect unique states;
    equals the general kernel-ratio result there.
    """
    if m.params is not None and m.params.lam != 0.0:
        raise PreconditionError("reconstruction requires lam = 0")
    v = as_visible(m, v)
    total = 0.0
    for frm, to in _interval_states(m, v):
        if frm == to:
            continue
        weights = _interval_weights(m, frm, to)
        norm = sum(weights.values())
        if norm == 0.0:
            raise ImpossibleTrajectoryError(
                f"no hidden jump connects {m.basis_labels[frm]} to {m.basis_labels[to]}"
            )
        avg = sum(w / norm * np.exp(-m.delta_s(k)) for k, w in weights.items())
        total -= np.log(avg)
    return float(total)


def system_entropy(m: LindbladModel, a: int, b: int, probabilities=None) -> float:
    """Stochastic system entropy change ``-log P(b) + log P(a)``.

    ``P`` is the steady-state population vector unless ``probabilities`` is
    given. This sign makes ``dsigma`` obey the integral fluctuation theorem.
    """
    p = steady_state(m) if probabilities is None else np.asarray(probabilities)
    if p[a] <= 0 or p[b] <= 0:
        raise ValueError("endpoint has zero steady-state probability")
    return float(np.log(p[a]) - np.log(p[b]))


# -- per-trajectory ledgers ------------------------------------------------------

@dataclass(frozen=True)
class EntropyLedger:
    trajectory_index: int
    seed: int
    a: int
    b: int
    n_visible: int
    n_hidden: int
    ds_env_visible: float
    ds_env_hidden_actual: float
    dsigma_y: float
    ds_sys: float
    dsigma: float

    @property
    def ds_tot(self) -> float:
        """Total entropy production of the full (visible and hidden) record."""
        return self.ds_env_visible + self.ds_env_hidden_actual + self.ds_sys


LEDGER_COLUMNS = tuple(f.name for f in fields(EntropyLedger))
_INT_COLUMNS = ("trajectory_index", "seed", "a", "b", "n_visible", "n_hidden")


def entropy_ledger(m: LindbladModel, full: Trajectory, *, index: int = 0, seed: int = 0,
                   evaluator: KernelEvaluator | None = None, probabilities=None) -> EntropyLedger:
    """Entropy bookkeeping of one sampled full trajectory."""
    evaluator = _evaluator(m) if evaluator is None else evaluator
    p = steady_state(m) if probabilities is None else probabilities
    visible = set(m.visible_ids)
    vis_events = tuple(e for e in full.events if e.jump_id in visible)
    v = VisibleTrajectory(full.initial, vis_events, full.final, full.horizon)
    ds_vis = float(sum(m.delta_s(e.jump_id) for e in vis_events))
    ds_hid = float(sum(m.delta_s(e.jump_id) for e in full.events if e.jump_id not in visible))
    dsigma_y = evaluator.hidden_entropy(v) if len(visible) < len(m.jumps) else 0.0
    ds_sys = system_entropy(m, full.initial, full.final, p)
    return EntropyLedger(
        trajectory_index=index, seed=seed, a=full.initial, b=full.final,
        n_visible=len(vis_events), n_hidden=len(full.events) - len(vis_events),
        ds_env_visible=ds_vis, ds_env_hidden_actual=ds_hid, dsigma_y=dsigma_y,
        ds_sys=ds_sys, dsigma=ds_vis + dsigma_y + ds_sys,
    )


class LedgerTable:
    """Column store of many :class:`EntropyLedger` rows, ordered by index."""

    def __init__(self, columns: dict[str, np.ndarray]):
        missing = set(LEDGER_COLUMNS) - set(columns)
        if missing:
            raise ValueError(f"missing ledger columns: {sorted(missing)}")
        self.columns = {name: np.asarray(columns[name]) for name in LEDGER_COLUMNS}

    @classmethod
    def from_ledgers(cls, ledgers: Iterable[EntropyLedger]) -> "LedgerTable":
        rows = [astuple(x) for x in ledgers]
        cols = {}
        for i, name in enumerate(LEDGER_COLUMNS):
            dtype = np.int64 if name in _INT_COLUMNS else float
            if name == "seed":
                dtype = np.uint64
            cols[name] = np.array([r[i] for r in rows], dtype=dtype)
        return cls(cols)

    @classmethod
    def concatenate(cls, tables: Sequence["LedgerTable"]) -> "LedgerTable":
        return cls({name: np.concatenate([t.columns[name] for t in tables])
                    for name in LEDGER_COLUMNS})

    def __len__(self) -> int:
        return int(self.columns["trajectory_index"].size)

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "ds_tot":
            c = self.columns
            return c["ds_env_visible"] + c["ds_env_hidden_actual"] + c["ds_sys"]
        return self.columns[name]

    def row(self, i: int) -> EntropyLedger:
        vals = []
        for name in LEDGER_COLUMNS:
            x = self.columns[name][i]
            vals.append(int(x) if name in _INT_COLUMNS else float(x))
        return EntropyLedger(*vals)

    def __iter__(self):
        return (self.row(i) for i in range(len(self)))

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        fh = io.StringIO() if own else fh
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        cols = [self.columns[name] for name in LEDGER_COLUMNS]
        for i in range(len(self)):
            writer.writerow([int(c[i]) if name in _INT_COLUMNS else repr(float(c[i]))
                             for name, c in zip(LEDGER_COLUMNS, cols)])
        return fh.getvalue() if own else None

    @classmethod
    def from_csv(cls, fh) -> "LedgerTable":
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != LEDGER_COLUMNS:
            raise ValueError(f"unexpected ledger header {header}")
        rows = list(reader)
        cols = {}
        for i, name in enumerate(LEDGER_COLUMNS):
            if name == "seed":
                cols[name] = np.array([int(r[i]) for r in rows], dtype=np.uint64)
            elif name in _INT_COLUMNS:
                cols[name] = np.array([int(r[i]) for r in rows], dtype=np.int64)
            else:
                cols[name] = np.array([float(r[i]) for r in rows])
        return cls(cols)


def _column(ledgers, name: str) -> np.ndarray:
    if isinstance(ledgers, LedgerTable):
        return np.asarray(ledgers[name], dtype=float)
    return np.array([getattr(x, name) for x in ledgers], dtype=float)


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        raise ValueError("need at least two samples")
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def ift_estimate(ledgers, which: str = "dsigma") -> tuple[float, float]:
    """Sample mean of ``exp(-x)`` and its standard error.

    ``which`` is ``"dsigma"`` (visible plus coarse-grained hidden entropy) or
    ``"ds_tot"`` (full-record entropy including the actual hidden jumps).
    """
    if which not in ("dsigma", "ds_tot"):
        raise ValueError("which must be 'dsigma' or 'ds_tot'")
    return _mean_stderr(np.exp(-_column(ledgers, which)))


@dataclass(frozen=True)
class SecondLawReport:
    mean_ds_env: float
    stderr_ds_env: float
    mean_dsigma_y: float
    stderr_dsigma_y: float
    mean_dsigma: float
    stderr_dsigma: float
    mean_env_plus_hidden: float
    stderr_env_plus_hidden: float
    violated: bool


def second_law_check(ledgers) -> SecondLawReport:
    """Ensemble means of the entropy contributions with standard errors.

    ``violated`` is set when ``<dsigma>`` lies more than three standard
    errors below zero.
    """
    env = _column(ledgers, "ds_env_visible")
    hid = _column(ledgers, "dsigma_y")
    tot = _column(ledgers, "dsigma")
    m_env, s_env = _mean_stderr(env)
    m_hid, s_hid = _mean_stderr(hid)
    m_tot, s_tot = _mean_stderr(tot)
    m_eh, s_eh = _mean_stderr(env + hid)
    return SecondLawReport(m_env, s_env, m_hid, s_hid, m_tot, s_tot, m_eh, s_eh,
                           violated=m_tot < -3.0 * s_tot)

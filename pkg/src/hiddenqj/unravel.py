"""Quantum-jump unravelling: steady state, trajectory sampling, observer states.

Trajectories are sampled with the exact waiting-time method: between jumps
the unnormalised state evolves under ``exp(-i H_eff t)``, and the next jump
time solves ``||psi(t)||**2 = r`` for a uniform ``r``.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from .errors import (DegenerateSteadyStateError, ImpossibleTrajectoryError,
                     NumericalError)
from .linops import Propagator, null_vector, partial_trace_X, unvec
from .model import LindbladModel, jump_superoperator, liouville_generators

__all__ = [
    "JumpEvent",
    "Trajectory",
    "VisibleTrajectory",
    "SteadyState",
    "steady_state",
    "steady_state_density",
    "TrajectorySampler",
    "sample_trajectory",
    "visible_filter",
    "hidden_env_entropy",
    "ConditionedSeries",
    "conditioned_state_series",
    "parse_trajectory_spec",
]

STEADY_GAP_MIN = 1e6
NEGATIVITY_TOL = 1e-9


@dataclass(frozen=True)
class JumpEvent:
    jump_id: int
    time: float


@dataclass(frozen=True)
class Trajectory:
    """Measured initial state, time-ordered jumps, measured final state."""

    initial: int
    events: tuple[JumpEvent, ...]
    final: int
    horizon: float

    def __post_init__(self):
        events = tuple(e if isinstance(e, JumpEvent) else JumpEvent(int(e[0]), float(e[1]))
                       for e in self.events)
        object.__setattr__(self, "events", events)
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        last = 0.0
        for e in events:
            if not 0.0 < e.time < self.horizon:
                raise ValueError(f"jump time {e.time} outside (0, {self.horizon})")
            if e.time <= last:
                raise ValueError("jump times must be strictly increasing")
            last = e.time
        if self.initial < 0 or self.final < 0:
            raise ValueError("basis indices must be non-negative")

    @property
    def jump_ids(self) -> tuple[int, ...]:
        return tuple(e.jump_id for e in self.events)

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(e.time for e in self.events)

    def shifted(self, offset: float) -> "Trajectory":
        """Same record with every jump time moved by ``offset``."""
        events = tuple(JumpEvent(e.jump_id, e.time + offset) for e in self.events)
        return type(self)(self.initial, events, self.final, self.horizon)


class VisibleTrajectory(Trajectory):
    """A trajectory whose events are all visible jumps."""


def _check_dim(model: LindbladModel, t: Trajectory):
    if t.initial >= model.dim or t.final >= model.dim:
        raise ValueError("basis index outside the model dimension")


# -- steady state -----------------------------------------------------------

@dataclass(frozen=True)
class SteadyState:
    rho: np.ndarray
    probabilities: np.ndarray
    gap: float
    max_offdiag: float


@lru_cache(maxsize=64)
def steady_state_density(m: LindbladModel, tol: float = 1e-9) -> SteadyState:
    """Trace-one null vector of the full Lindbladian.

    Raises
    ------
    DegenerateSteadyStateError
        If the null space is not one-dimensional (gap below ``1e6``).
    NumericalError
        If the populations are negative beyond ``1e-9``.
    """
    gens = liouville_generators(m)
    v, gap = null_vector(gens.G_full, tol)
    if gap < STEADY_GAP_MIN:
        raise DegenerateSteadyStateError(f"steady state is not unique (gap {gap:.3g})")
    rho = unvec(v, m.dim)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    pops = rho.diagonal().real.copy()
    if pops.min() < -NEGATIVITY_TOL:
        raise NumericalError(f"steady state has negative population {pops.min():.3g}")
    pops = np.clip(pops, 0.0, None)
    pops /= pops.sum()
    offdiag = np.abs(rho - np.diag(rho.diagonal())).max()
    rho.setflags(write=False)
    pops.setflags(write=False)
    return SteadyState(rho=rho, probabilities=pops, gap=gap, max_offdiag=float(offdiag))


def steady_state(m: LindbladModel) -> np.ndarray:
    """Steady-state populations over the basis states."""
    return steady_state_density(m).probabilities


# -- sampling ---------------------------------------------------------------

class TrajectorySampler:
    """Samples full jump trajectories of a model over a fixed horizon.

    The sampler precomputes the no-jump propagator once and is read-only
    afterwards, so one instance can serve many independent RNG streams.

    Parameters
    ----------
    model : LindbladModel
    horizon : float
        Final measurement time ``T``.
    initial_distribution : array_like, optional
        Distribution of the initial basis state. Defaults to the steady-state
        populations.
    """

    def __init__(self, model: LindbladModel, horizon: float, initial_distribution=None):
        if not horizon > 0:
            raise ValueError("horizon must be positive")
        self.model = model
        self.horizon = float(horizon)
        self._xtol = 1e-10 * self.horizon
        self._ids = np.array([j.id for j in model.jumps])
        self._ops = np.stack([j.matrix for j in model.jumps]) if model.jumps else np.zeros((0, model.dim, model.dim))
        self._no_jump = Propagator(-1j * model.effective_hamiltonian())
        self._initial_dist = None
        if initial_distribution is not None:
            dist = np.asarray(initial_distribution, dtype=float)
            self._initial_dist = np.cumsum(dist / dist.sum())

    def _initial_cdf(self):
        if self._initial_dist is None:
            self._initial_dist = np.cumsum(steady_state(self.model))
        return self._initial_dist

    def _survival_fn(self, psi):
        """Return ``t -> log ||exp(-i H_eff t) psi||**2``."""
        prop = self._no_jump
        if prop.eigenbasis:
            w, v, c = prop._w, prop._v, prop._vinv @ psi

            def log_survival(t):
                amp = v @ (np.exp(w * t) * c)
                with np.errstate(divide="ignore"):
                    return np.log(np.vdot(amp, amp).real)
        else:
            def log_survival(t):
                amp = prop.apply(t, psi)
                with np.errstate(divide="ignore"):
                    return np.log(np.vdot(amp, amp).real)
        return log_survival

    def waiting_time(self, rng: np.random.Generator, psi: np.ndarray, limit: float) -> float:
        """Time to the next jump from normalised ``psi``, or ``inf`` if beyond ``limit``.

        Inverts the survival probability ``||exp(-i H_eff t) psi||**2 = u``
        for uniform ``u`` by bracketed root finding.
        """
        log_r = np.log(rng.random())
        log_survival = self._survival_fn(psi)
        end_value = log_survival(limit)
        if not np.isfinite(end_value) and end_value != -np.inf:
            raise NumericalError("non-finite state norm during no-jump evolution")
        if end_value > log_r:
            return np.inf
        try:
            tau = brentq(lambda s: log_survival(s) - log_r, 0.0, limit, xtol=self._xtol)
        except (ValueError, RuntimeError) as exc:
            raise NumericalError(f"waiting-time root solve failed: {exc}") from exc
        # a root on the interval boundary carries zero probability mass
        return tau if 0.0 < tau < limit else np.inf

    def choose_channel(self, rng: np.random.Generator, psi: np.ndarray) -> tuple[int, np.ndarray]:
        """Jump id drawn with weight ``||L_k psi||**2`` and the normalised post-jump state."""
        outs = self._ops @ psi
        weights = np.einsum("ki,ki->k", outs.conj(), outs).real
        cdf = np.cumsum(weights)
        if not cdf[-1] > 0:
            raise NumericalError("no jump channel has positive weight")
        choice = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        choice = min(choice, len(cdf) - 1)
        return int(self._ids[choice]), outs[choice] / np.sqrt(weights[choice])

    def sample(self, rng: np.random.Generator, initial: int | None = None) -> Trajectory:
        if initial is None:
            initial = int(np.searchsorted(self._initial_cdf(), rng.random(), side="right"))
            initial = min(initial, self.model.dim - 1)
        psi = np.zeros(self.model.dim, dtype=complex)
        psi[initial] = 1.0
        t = 0.0
        events = []
        while True:
            tau = self.waiting_time(rng, psi, self.horizon - t)
            if not np.isfinite(tau):
                psi = self._no_jump.apply(self.horizon - t, psi)
                break
            t += tau
            psi = self._no_jump.apply(tau, psi)
            psi = psi / np.linalg.norm(psi)
            k, psi = self.choose_channel(rng, psi)
            events.append(JumpEvent(k, t))

        probs = np.abs(psi) ** 2
        cdf = np.cumsum(probs)
        if not np.isfinite(cdf[-1]) or cdf[-1] <= 0.0:
            raise NumericalError("non-finite state norm at the final measurement")
        final = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        final = min(final, self.model.dim - 1)
        return Trajectory(initial, tuple(events), final, self.horizon)


def sample_trajectory(m: LindbladModel, rng: np.random.Generator | int, horizon: float,
                      initial: int | None = None) -> Trajectory:
    """Sample one full trajectory; see :class:`TrajectorySampler`."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    return TrajectorySampler(m, horizon).sample(rng, initial=initial)


def visible_filter(t: Trajectory, m: LindbladModel) -> VisibleTrajectory:
    """Drop hidden jumps; endpoints and horizon are kept."""
    visible = set(m.visible_ids)
    events = tuple(e for e in t.events if e.jump_id in visible)
    return VisibleTrajectory(t.initial, events, t.final, t.horizon)


def hidden_env_entropy(t: Trajectory, m: LindbladModel) -> float:
    """Environmental entropy of the hidden jumps of a full trajectory."""
    hidden = set(m.hidden_ids)
    return float(sum(m.delta_s(e.jump_id) for e in t.events if e.jump_id in hidden))


def as_visible(m: LindbladModel, v: Trajectory) -> VisibleTrajectory:
    visible = set(m.visible_ids)
    for e in v.events:
        if e.jump_id not in visible:
            raise ValueError(f"jump {e.jump_id} is not a visible channel")
    _check_dim(m, v)
    if isinstance(v, VisibleTrajectory):
        return v
    return VisibleTrajectory(v.initial, v.events, v.final, v.horizon)


_SPEC_JUMP = re.compile(r"^\s*(\d+)\s*@\s*([0-9.eE+-]+)\s*$")
_SPEC_T = re.compile(r"^\s*T\s*=\s*([0-9.eE+-]+)\s*$")


def parse_trajectory_spec(spec: str, m: LindbladModel) -> VisibleTrajectory:
    """Parse ``"g0; 4@0.9; 1@1.5; 4@2.4; e1; T=3"`` into a visible trajectory."""
    parts = [p.strip() for p in spec.split(";") if p.strip()]
    if len(parts) < 3:
        raise ValueError("trajectory spec needs an initial label, a final label and T=...")
    match_t = _SPEC_T.match(parts[-1])
    if not match_t:
        raise ValueError(f"last spec element must be T=<horizon>, got {parts[-1]!r}")
    horizon = float(match_t.group(1))
    initial = m.basis_index(parts[0])
    final = m.basis_index(parts[-2])
    events = []
    for p in parts[1:-2]:
        match = _SPEC_JUMP.match(p)
        if not match:
            raise ValueError(f"cannot parse jump {p!r}; expected k@t")
        k = int(match.group(1))
        if k not in m.jump_by_id:
            raise ValueError(f"unknown jump id {k} in {p!r}")
        events.append(JumpEvent(k, float(match.group(2))))
    return as_visible(m, VisibleTrajectory(initial, tuple(events), final, horizon))


# -- observer's conditioned state ----------------------------------------------

SERIES_COLUMNS = ("t", "p00", "p01", "p10", "p11", "pY0", "pY1",
                  "re_rhoY01", "im_rhoY01", "lognorm")


@dataclass(frozen=True)
class ConditionedSeries:
    """Normalised conditioned state on a time grid plus post-jump instants.

    ``lognorm[i]`` is the log of the accumulated trace removed by the
    normalisation up to ``t[i]``; ``post_jump[i]`` marks rows taken right
    after a visible jump.
    """

    t: np.ndarray
    rho: np.ndarray
    rho_y: np.ndarray
    lognorm: np.ndarray
    post_jump: np.ndarray

    def bloch(self) -> np.ndarray:
        """Bloch vectors ``(x, y, z)`` of the hidden reduced state."""
        r01 = self.rho_y[:, 0, 1]
        x = 2.0 * r01.real
        y = -2.0 * r01.imag
        z = (self.rho_y[:, 0, 0] - self.rho_y[:, 1, 1]).real
        return np.column_stack([x, y, z])

    def rows(self) -> list[tuple[float, ...]]:
        pops = np.einsum("nii->ni", self.rho).real
        out = []
        for i in range(self.t.size):
            ry = self.rho_y[i]
            out.append((self.t[i], *pops[i], ry[0, 0].real, ry[1, 1].real,
                        ry[0, 1].real, ry[0, 1].imag, self.lognorm[i]))
        return out

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        fh = io.StringIO() if own else fh
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_COLUMNS)
        for row in self.rows():
            writer.writerow([repr(float(x)) for x in row])
        return fh.getvalue() if own else None


def conditioned_state_series(m: LindbladModel, v: Trajectory, grid_dt: float) -> ConditionedSeries:
    """Observer's state of the whole system conditioned on a visible record.

    The unnormalised state evolves under the between-jump generator, visible
    jumps are applied at their times, and the state is renormalised to unit
    trace at every emitted point.
    """
    if not grid_dt > 0:
        raise ValueError("grid_dt must be positive")
    v = as_visible(m, v)
    n = m.dim
    diag = np.arange(n) * (n + 1)
    prop = Propagator(liouville_generators(m).G)
    jumps = {k: jump_superoperator(m, k) for k in set(v.jump_ids)}

    n_grid = int(np.floor(v.horizon / grid_dt + 1e-9))
    grid = [i * grid_dt for i in range(n_grid + 1) if i * grid_dt < v.horizon]
    marks = [(t, None) for t in grid[1:]] + [(e.time, e.jump_id) for e in v.events]
    marks.sort(key=lambda x: (x[0], x[1] is None))
    marks.append((v.horizon, None))

    vec = np.zeros(n * n, dtype=complex)
    vec[v.initial * (n + 1)] = 1.0
    t_now, lognorm = 0.0, 0.0
    ts, states, norms, post = [0.0], [unvec(vec, n)], [0.0], [False]
    for t_mark, k in marks:
        if t_mark > t_now:
            vec = prop.apply(t_mark - t_now, vec)
            t_now = t_mark
        if k is not None:
            vec = jumps[k] @ vec
        trace = vec[diag].sum().real
        if not trace > 0 or not np.isfinite(trace):
            if k is not None or trace == 0.0:
                raise ImpossibleTrajectoryError(f"conditioned state vanished at t={t_now}")
            raise NumericalError(f"conditioned state norm underflow at t={t_now}")
        vec = vec / trace
        lognorm += np.log(trace)
        ts.append(t_now)
        states.append(unvec(vec, n))
        norms.append(lognorm)
        post.append(k is not None)

    rho = np.array(states)
    rho_y = np.array([partial_trace_X(r, m.dim_x, m.dim_y) for r in rho])
    return ConditionedSeries(t=np.array(ts), rho=rho, rho_y=rho_y,
                             lognorm=np.array(norms), post_jump=np.array(post))


def ensemble_populations(m: LindbladModel, finals: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    """Empirical final-state frequencies and their binomial standard errors."""
    finals = np.asarray(list(finals) if not isinstance(finals, np.ndarray) else finals)
    counts = np.bincount(finals, minlength=m.dim).astype(float)
    n = counts.sum()
    freq = counts / n
    return freq, np.sqrt(freq * (1 - freq) / n)

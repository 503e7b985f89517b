"""Closed-form results for the demon model without system-demon coupling.

With ``lam = 0`` every hidden jump operator splits as ``L_k = L_k^e + L_k^g``
according to the system state that controls it, and each part is an
eigenoperator of ``sum_k [L_k^dag L_k, .]`` with eigenvalue ``alpha_k^x``.
This gives an explicit expression for the part of ``exp(G t)`` that flips
the demon at fixed system state, and a time-independent hidden entropy per
inter-jump interval. Both serve as independent checks of the numerics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImpossibleTrajectoryError, PreconditionError
from .linops import kron
from .model import (
    BASIS_LABELS,
    IDENTITY_2,
    PROJ_HIGH,
    PROJ_LOW,
    DemonParams,
    build_demon_model,
)

__all__ = [
    "SYSTEM_STATES",
    "AlphaTable",
    "alpha_table",
    "split_operator",
    "eigenrelation_residual",
    "A_coefficient",
    "script_A",
    "closed_form_hidden_block",
    "demon_flip_entries",
    "interval_hidden_entropy",
]

SYSTEM_STATES = ("e", "g")
HIDDEN_IDS = (5, 6, 7, 8)
SERIES_SWITCH = 1e-8
_PROJ = {"e": kron(PROJ_HIGH, IDENTITY_2), "g": kron(PROJ_LOW, IDENTITY_2)}


def _require_uncoupled(p: DemonParams):
    if p.lam != 0.0:
        raise PreconditionError("closed forms require lam = 0")
    if p.drive:
        raise PreconditionError("closed forms require the undriven model")


@dataclass(frozen=True)
class AlphaTable:
    """``alpha[k][x]`` for hidden jumps ``k`` in 5..8 and ``x`` in {e, g}."""

    alpha: dict[int, dict[str, float]]

    def __getitem__(self, k: int) -> dict[str, float]:
        return self.alpha[k]


def alpha_table(p: DemonParams) -> AlphaTable:
    """Eigenvalues of the dissipative commutator on the split demon jumps."""
    _require_uncoupled(p)
    g2 = {k: v**2 for k, v in p.rates().items()}
    gx2, gy2 = p.gamma_x**2, p.gamma_y**2
    a5e = (1 - gx2) * (g2[3] - g2[1]) + (g2[6] - g2[5]) + gy2 * (g2[8] - g2[7])
    a5g = (1 - gx2) * (g2[4] - g2[2]) + (g2[8] - g2[7]) + gy2 * (g2[6] - g2[5])
    sign = {5: 1.0, 6: -1.0, 7: 1.0, 8: -1.0}
    return AlphaTable({k: {"e": s * a5e, "g": s * a5g} for k, s in sign.items()})


def split_operator(p: DemonParams, k: int, x: str) -> np.ndarray:
    """The part of hidden jump ``k`` controlled by system state ``x``."""
    if k not in HIDDEN_IDS:
        raise ValueError(f"jump {k} is not a demon jump")
    if x not in _PROJ:
        raise ValueError(f"system state must be 'e' or 'g', got {x!r}")
    return _PROJ[x] @ build_demon_model(p).jump(k).matrix


def eigenrelation_residual(p: DemonParams, k: int, x: str) -> float:
    """Max-abs residual of ``sum_j [L_j^dag L_j, L_k^x] - alpha_k^x L_k^x``."""
    m = build_demon_model(p)
    kk = sum(j.matrix.conj().T @ j.matrix for j in m.jumps)
    lx = split_operator(p, k, x)
    comm = kk @ lx - lx @ kk
    return float(np.abs(comm - alpha_table(p)[k][x] * lx).max())


def A_coefficient(k: int, x: str, xp: str, t: float, table: AlphaTable) -> float:
    """``2 (exp(s t / 2) - 1) / s`` with ``s = alpha_k^x + alpha_k^x'``; ``t`` at ``s = 0``."""
    s = table[k][x] + table[k][xp]
    if abs(s) < SERIES_SWITCH:
        return t * (1.0 + s * t / 4.0)
    return 2.0 * np.expm1(s * t / 2.0) / s


def script_A(p: DemonParams, x: str, xp: str, t: float, table: AlphaTable | None = None) -> float:
    """The ``C``-combination whose square root enters the sinh weight of block ``(x, x')``."""
    table = alpha_table(p) if table is None else table
    g2 = {k: v**2 for k, v in p.rates().items()}
    gy2 = p.gamma_y**2

    def c(k, kp):
        return g2[k] * g2[kp] * A_coefficient(k, x, xp, t, table) * A_coefficient(kp, x, xp, t, table)

    if x == xp == "e":
        return c(5, 6) + gy2 * (c(5, 8) + c(6, 7)) + gy2**2 * c(7, 8)
    if x == xp == "g":
        return gy2**2 * c(5, 6) + gy2 * (c(5, 8) + c(6, 7)) + c(7, 8)
    return gy2 * (c(5, 6) + c(5, 8) + c(6, 7) + c(7, 8))


def _sinhc_sqrt(z: float) -> float:
    """``sinh(sqrt(z)) / sqrt(z)``, continued to ``z <= 0``."""
    if abs(z) < SERIES_SWITCH:
        return 1.0 + z / 6.0 + z * z / 120.0
    if z > 0:
        r = np.sqrt(z)
        return float(np.sinh(r) / r)
    r = np.sqrt(-z)
    return float(np.sin(r) / r)


def closed_form_hidden_block(p: DemonParams, t: float, backward: bool = False) -> np.ndarray:
    """Sinh-weighted hidden-jump part of ``exp(G t)`` (or ``exp(G_bar_dag t)``).

    Returns the 16x16 Liouville matrix

        sum_{x,x'} sinh(sqrt(A_xx')) / sqrt(A_xx') sum_k A_k^{xx'} L_k^x (x) L_k^x'

    with an extra ``exp(-ds_k)`` per term for the backward generator. The
    diagonal part of the exponential is not included.
    """
    _require_uncoupled(p)
    if t < 0:
        raise ValueError("t must be non-negative")
    table = alpha_table(p)
    ds = p.entropies()
    parts = {(k, x): split_operator(p, k, x) for k in HIDDEN_IDS for x in SYSTEM_STATES}
    out = np.zeros((16, 16), dtype=complex)
    for x in SYSTEM_STATES:
        for xp in SYSTEM_STATES:
            weight = _sinhc_sqrt(script_A(p, x, xp, t, table))
            for k in HIDDEN_IDS:
                coef = A_coefficient(k, x, xp, t, table)
                if backward:
                    coef *= np.exp(-ds[k])
                out += weight * coef * kron(parts[k, x].conj(), parts[k, xp])
    return out


def _pop_index(s: int) -> int:
    return s * (len(BASIS_LABELS) + 1)


def demon_flip_entries() -> list[tuple[int, int]]:
    """Liouville ``(row, col)`` pairs of population transfers that flip only the demon."""
    pairs = []
    for x in ("g", "e"):
        lo, hi = BASIS_LABELS.index(x + "0"), BASIS_LABELS.index(x + "1")
        pairs.append((_pop_index(hi), _pop_index(lo)))
        pairs.append((_pop_index(lo), _pop_index(hi)))
    return pairs


def _state(chi) -> int:
    if isinstance(chi, str):
        return BASIS_LABELS.index(chi)
    return int(chi)


def interval_hidden_entropy(p: DemonParams, chi_from, chi_to, t: float) -> float:
    """Hidden entropy of one interval between visible jumps, from the closed form.

    ``chi_from`` is the state after the earlier visible jump, ``chi_to`` the
    state before the later one. The ``A`` factors cancel between forward and
    backward entries, so the result does not depend on ``t``.
    """
    _require_uncoupled(p)
    if p.gamma_x != 0.0:
        raise PreconditionError("interval decomposition requires gamma_x = 0")
    a, b = _state(chi_from), _state(chi_to)
    if a == b:
        return 0.0
    if BASIS_LABELS[a][0] != BASIS_LABELS[b][0]:
        raise ImpossibleTrajectoryError(
            f"no demon jump connects {BASIS_LABELS[a]} to {BASIS_LABELS[b]}"
        )
    x = BASIS_LABELS[a][0]
    table = alpha_table(p)
    ds = p.entropies()
    fwd = bwd = 0.0
    for k in HIDDEN_IDS:
        amp = abs(split_operator(p, k, x)[b, a]) ** 2
        if amp == 0.0:
            continue
        # A_k^{xx} is shared by the two channels making the same flip, so at
        # t = 0 the limit is the ratio of the bare amplitudes
        coef = A_coefficient(k, x, x, t, table) if t > 0 else 1.0
        fwd += coef * amp
        bwd += coef * amp * np.exp(-ds[k])
    if fwd == 0.0:
        raise ImpossibleTrajectoryError(
            f"no demon jump connects {BASIS_LABELS[a]} to {BASIS_LABELS[b]}"
        )
    return float(np.log(fwd / bwd))

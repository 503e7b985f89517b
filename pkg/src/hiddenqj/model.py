"""Lindblad models with paired, entropy-labelled, visibility-tagged jumps.

The two-qubit demon model couples a visible system qubit X (states g, e) and
a hidden demon qubit Y (states 0, 1) to a hot and a cold bath each. The
coupling of each qubit to its baths is switched by the state of the other
qubit, with the unwanted coupling suppressed by ``gamma_x`` (for X) and
``gamma_y`` (for Y).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import PreconditionError
from .linops import kron

__all__ = [
    "JumpOperator",
    "LindbladModel",
    "DemonParams",
    "Generators",
    "BASIS_LABELS",
    "build_demon_model",
    "validate_detailed_balance",
    "liouville_generators",
    "jump_superoperator",
    "mean_occupation",
]

BASIS_LABELS = ("g0", "g1", "e0", "e1")

# single-qubit operators in the (ground, excited) = (0, 1) index order
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
PROJ_LOW = np.diag([1.0, 0.0]).astype(complex)
PROJ_HIGH = np.diag([0.0, 1.0]).astype(complex)
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True, eq=False)
class JumpOperator:
    """One jump channel ``k`` with its complementary channel ``partner_id``."""

    id: int
    matrix: np.ndarray
    delta_s: float
    partner_id: int
    visible: bool
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Hamiltonian plus a list of jump operators on a ``dim``-level system.

    ``dim_x``/``dim_y`` describe the visible/hidden tensor split used for
    reduced states; they default to ``(1, dim)`` when no split exists.
    """

    dim: int
    hamiltonian: np.ndarray
    jumps: tuple[JumpOperator, ...]
    basis_labels: tuple[str, ...] = ()
    dim_x: int = 1
    dim_y: int = 0
    params: "DemonParams | None" = None

    def __post_init__(self):
        h = np.array(self.hamiltonian, dtype=complex)
        if h.shape != (self.dim, self.dim):
            raise ValueError(f"hamiltonian must be {self.dim}x{self.dim}")
        if np.abs(h - h.conj().T).max() > 1e-12:
            raise ValueError("hamiltonian is not Hermitian")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(self.jumps))
        if not self.basis_labels:
            object.__setattr__(self, "basis_labels", tuple(str(i) for i in range(self.dim)))
        if self.dim_y == 0:
            object.__setattr__(self, "dim_y", self.dim // self.dim_x)
        if self.dim_x * self.dim_y != self.dim:
            raise ValueError("dim_x * dim_y must equal dim")

        ids = [j.id for j in self.jumps]
        if len(set(ids)) != len(ids):
            raise ValueError("jump ids must be unique")
        by_id = {j.id: j for j in self.jumps}
        for j in self.jumps:
            if j.matrix.shape != (self.dim, self.dim):
                raise ValueError(f"jump {j.id} has the wrong shape")
            partner = by_id.get(j.partner_id)
            if partner is None or partner.partner_id != j.id:
                raise ValueError(f"jump {j.id} has no consistent partner")
            if partner.visible != j.visible:
                raise ValueError(f"jumps {j.id} and {partner.id} differ in visibility")
            if abs(j.delta_s + partner.delta_s) > 1e-12:
                raise ValueError(f"entropies of jumps {j.id} and {partner.id} are not opposite")
        object.__setattr__(self, "_by_id", by_id)

    @property
    def jump_by_id(self) -> Mapping[int, JumpOperator]:
        return self._by_id

    @property
    def visible_ids(self) -> tuple[int, ...]:
        return tuple(j.id for j in self.jumps if j.visible)

    @property
    def hidden_ids(self) -> tuple[int, ...]:
        return tuple(j.id for j in self.jumps if not j.visible)

    def delta_s(self, k: int) -> float:
        return self.jump(k).delta_s

    def jump(self, k: int) -> JumpOperator:
        try:
            return self._by_id[k]
        except KeyError:
            raise KeyError(f"unknown jump id {k}") from None

    def with_all_visible(self) -> "LindbladModel":
        """Same dynamics with every channel monitored."""
        jumps = tuple(replace(j, visible=True) for j in self.jumps)
        return replace(self, jumps=jumps)

    def effective_hamiltonian(self) -> np.ndarray:
        decay = sum((j.matrix.conj().T @ j.matrix for j in self.jumps),
                    np.zeros((self.dim, self.dim), dtype=complex))
        return self.hamiltonian - 0.5j * decay

    def basis_index(self, label: str | int) -> int:
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < self.dim:
                raise ValueError(f"basis index {label} out of range")
            return int(label)
        try:
            return self.basis_labels.index(label)
        except ValueError:
            raise ValueError(f"unknown basis label {label!r}") from None


def mean_occupation(beta: float, omega0: float) -> float:
    """Bose occupation ``1 / (exp(beta * omega0) - 1)``."""
    return 1.0 / np.expm1(beta * omega0)


@dataclass(frozen=True)
class DemonParams:
    """Parameters of the two-qubit demon model.

    ``bath_rates`` holds the bare couplings in the order
    (X hot, X cold, Y hot, Y cold). ``drive`` adds a transverse field of
    strength ``drive_strength`` on the demon.
    """

    omega0: float = 1.0
    beta_x_hot: float = 1.0
    beta_x_cold: float = 2.0
    beta_y_hot: float = 0.5
    beta_y_cold: float = 4.0
    gamma_x: float = 0.0
    gamma_y: float = 0.0
    lam: float = 0.0
    bath_rates: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    drive: bool = False
    drive_strength: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "bath_rates", tuple(float(r) for r in self.bath_rates))
        if len(self.bath_rates) != 4:
            raise ValueError("bath_rates needs four entries")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        for name in ("beta_x_hot", "beta_x_cold", "beta_y_hot", "beta_y_cold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("gamma_x", "gamma_y"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if any(not r >= 0 for r in self.bath_rates):
            raise ValueError("bath_rates must be non-negative")
        if not np.isfinite(self.lam) or not np.isfinite(self.drive_strength):
            raise ValueError("lam and drive_strength must be finite")

    def rates(self) -> dict[int, float]:
        """Amplitudes gamma_1..gamma_8 (square roots of the bare rates)."""
        betas = (self.beta_x_hot, self.beta_x_cold, self.beta_y_hot, self.beta_y_cold)
        out = {}
        for pair, (beta, bare) in enumerate(zip(betas, self.bath_rates)):
            n = mean_occupation(beta, self.omega0)
            out[2 * pair + 1] = np.sqrt(bare * (n + 1.0))
            out[2 * pair + 2] = np.sqrt(bare * n)
        return out

    def entropies(self) -> dict[int, float]:
        betas = (self.beta_x_hot, self.beta_x_cold, self.beta_y_hot, self.beta_y_cold)
        out = {}
        for pair, beta in enumerate(betas):
            out[2 * pair + 1] = beta * self.omega0
            out[2 * pair + 2] = -beta * self.omega0
        return out


def build_demon_model(p: DemonParams | None = None, **overrides) -> LindbladModel:
    """Two-qubit demon with jumps 1-4 on the visible qubit, 5-8 on the demon.

    Odd ids are relaxations, even ids excitations; pairs (1,2) and (3,4) are
    the system's hot and cold baths, (5,6) and (7,8) the demon's.
    """
    p = DemonParams() if p is None else p
    if overrides:
        p = replace(p, **overrides)
    if p.lam > 0.2 * p.omega0:
        warnings.warn(
            f"lam={p.lam} is large compared to omega0={p.omega0}; the weak-coupling "
            "master equation may be inaccurate",
            stacklevel=2,
        )
    g = p.rates()
    ds = p.entropies()
    gx, gy = p.gamma_x, p.gamma_y

    demon_prefers_hot = PROJ_HIGH + gx * PROJ_LOW  # system couples to its hot bath when demon is 1
    demon_prefers_cold = gx * PROJ_HIGH + PROJ_LOW
    system_prefers_hot = PROJ_HIGH + gy * PROJ_LOW  # demon couples to its hot bath when system is e
    system_prefers_cold = gy * PROJ_HIGH + PROJ_LOW
    mats = {
        1: g[1] * kron(SIGMA_MINUS, demon_prefers_hot),
        2: g[2] * kron(SIGMA_PLUS, demon_prefers_hot),
        3: g[3] * kron(SIGMA_MINUS, demon_prefers_cold),
        4: g[4] * kron(SIGMA_PLUS, demon_prefers_cold),
        5: g[5] * kron(system_prefers_hot, SIGMA_MINUS),
        6: g[6] * kron(system_prefers_hot, SIGMA_PLUS),
        7: g[7] * kron(system_prefers_cold, SIGMA_MINUS),
        8: g[8] * kron(system_prefers_cold, SIGMA_PLUS),
    }
    labels = {1: "X hot relax", 2: "X hot excite", 3: "X cold relax", 4: "X cold excite",
              5: "Y hot relax", 6: "Y hot excite", 7: "Y cold relax", 8: "Y cold excite"}
    jumps = tuple(
        JumpOperator(id=k, matrix=mats[k], delta_s=ds[k], partner_id=k + 1 if k % 2 else k - 1,
                     visible=k <= 4, label=labels[k])
        for k in range(1, 9)
    )

    h = 0.5 * p.omega0 * (kron(SIGMA_Z, IDENTITY_2) + kron(IDENTITY_2, SIGMA_Z))
    g1, e0 = BASIS_LABELS.index("g1"), BASIS_LABELS.index("e0")
    h[g1, e0] += p.lam
    h[e0, g1] += p.lam
    if p.drive:
        h = h + p.drive_strength * kron(IDENTITY_2, SIGMA_PLUS + SIGMA_MINUS)

    return LindbladModel(dim=4, hamiltonian=h, jumps=jumps, basis_labels=BASIS_LABELS,
                         dim_x=2, dim_y=2, params=p)


def validate_detailed_balance(m: LindbladModel) -> dict[tuple[int, int], float]:
    """Max-entry residual of ``L_k - L_partner^dagger exp(ds_k / 2)`` per pair."""
    report = {}
    for j in m.jumps:
        if j.id > j.partner_id:
            continue
        partner = m.jump(j.partner_id)
        resid = j.matrix - partner.matrix.conj().T * np.exp(j.delta_s / 2.0)
        report[(j.id, partner.id)] = float(np.abs(resid).max())
    return report


@dataclass(frozen=True)
class Generators:
    """Liouville-space generators of a model (all ``dim**2`` square).

    ``G`` evolves the state between visible jumps, ``G_bar_dag`` is its
    time-reversed counterpart and ``G_full`` the complete Lindbladian.
    """

    H_cal: np.ndarray
    L_nj: np.ndarray
    L_Y: np.ndarray
    L_X: np.ndarray
    G: np.ndarray
    G_bar_dag: np.ndarray
    G_full: np.ndarray


def jump_superoperator(m: LindbladModel, k: int) -> np.ndarray:
    """``conj(L_k) (x) L_k``, the vectorised action ``rho -> L_k rho L_k^dagger``."""
    lk = m.jump(k).matrix
    return np.kron(lk.conj(), lk)


def liouville_generators(m: LindbladModel) -> Generators:
    n = m.dim
    ident = np.eye(n, dtype=complex)
    h = m.hamiltonian
    h_cal = -1j * (np.kron(ident, h) - np.kron(h.T, ident))
    decay = np.zeros((n, n), dtype=complex)
    for j in m.jumps:
        decay += j.matrix.conj().T @ j.matrix
    l_nj = -0.5 * (np.kron(ident, decay) + np.kron(decay.T, ident))
    l_y = np.zeros((n * n, n * n), dtype=complex)
    l_x = np.zeros((n * n, n * n), dtype=complex)
    for j in m.jumps:
        sup = np.kron(j.matrix.conj(), j.matrix)
        if j.visible:
            l_x += sup
        else:
            l_y += sup
    g = h_cal + l_nj + l_y
    g_bar_dag = h_cal + l_nj + l_y.conj().T
    return Generators(H_cal=h_cal, L_nj=l_nj, L_Y=l_y, L_X=l_x, G=g,
                      G_bar_dag=g_bar_dag, G_full=g + l_x)


def require_demon_params(m: LindbladModel) -> DemonParams:
    if m.params is None:
        raise PreconditionError("operation needs a model built by build_demon_model")
    return m.params

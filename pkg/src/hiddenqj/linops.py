"""Dense complex linear algebra for Liouville-space calculations.

Conventions used throughout the package:

* ``vec`` stacks columns, so ``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.
* Composite spaces are ordered visible (X) first, hidden (Y) second. For the
  two-qubit model the basis is ``|g,0>, |g,1>, |e,0>, |e,1>`` = indices 0..3.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NoNullSpaceError, NumericalError

__all__ = [
    "kron",
    "vec",
    "unvec",
    "expm",
    "null_vector",
    "partial_trace_X",
    "Propagator",
]


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {a.shape}")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product, shape ``(ra*rb, ca*cb)``."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def vec(rho) -> np.ndarray:
    """Column-stacking vectorisation, returned as an ``(n*m, 1)`` column."""
    rho = _as_matrix(rho)
    return rho.reshape(-1, 1, order="F").copy()


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`."""
    cols = rows if cols is None else cols
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != rows * cols:
        raise ValueError(f"vector of length {v.size} cannot be reshaped to {rows}x{cols}")
    return v.reshape(rows, cols, order="F").copy()


# Pade [13/13] coefficients and 1-norm thresholds (Higham 2005, Table 10.2).
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0,
    ),
    13: (
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ),
}
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068, 13: 5.371920351148152}
_MAX_SQUARINGS = 1000


def _pade(a: np.ndarray, m: int):
    b = _PADE_COEFFS[m]
    ident = np.eye(a.shape[0], dtype=a.dtype)
    a2 = a @ a
    if m < 13:
        powers = [ident, a2]
        for _ in range(2, m // 2 + 1):
            powers.append(powers[-1] @ a2)
        u = a @ sum(b[2 * j + 1] * powers[j] for j in range(m // 2 + 1))
        v = sum(b[2 * j] * powers[j] for j in range(m // 2 + 1))
        return u, v
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    return u, v


def expm(m, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(m * t)`` by scaling and squaring.

    Uses the diagonal Pade approximant of the lowest sufficient degree in
    {3, 5, 7, 9, 13} chosen from the 1-norm of ``m * t``. Works for
    non-normal and defective matrices.

    Raises
    ------
    ValueError
        If ``m`` is not square or ``t`` is not finite.
    NumericalError
        If the required number of squarings is absurd or the result
        overflows.
    """
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {m.shape}")
    if not np.isfinite(t):
        raise ValueError("expm needs a finite time argument")
    a = m * t
    if not np.all(np.isfinite(a)):
        raise NumericalError("non-finite entries in expm argument")
    norm = np.linalg.norm(a, 1)
    if norm == 0.0:
        return np.eye(a.shape[0], dtype=complex)

    s = 0
    for deg in (3, 5, 7, 9):
        if norm <= _THETA[deg]:
            u, v = _pade(a, deg)
            break
    else:
        deg = 13
        s = max(0, int(np.ceil(np.log2(norm / _THETA[13]))))
        if s > _MAX_SQUARINGS:
            raise NumericalError(f"expm scaling needs 2**{s} squarings; norm {norm:.3g} too large")
        u, v = _pade(a / 2.0**s, 13)

    r = np.linalg.solve(v - u, v + u)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            r = r @ r
    if not np.all(np.isfinite(r)):
        raise NumericalError("matrix exponential overflowed")
    return r


def null_vector(m, tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """Right singular vector of the smallest singular value.

    Returns ``(vector, gap)`` with ``gap = sigma_next / max(sigma_min, tiny)``;
    callers decide uniqueness from the gap. ``tol`` is relative to
    ``max(1, sigma_max)``.

    Raises
    ------
    NoNullSpaceError
        If the smallest singular value exceeds the tolerance.
    """
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"null_vector needs a square matrix, got shape {m.shape}")
    _, sv, vh = np.linalg.svd(m)
    sigma_min = sv[-1]
    scale = max(1.0, sv[0])
    if sigma_min > tol * scale:
        raise NoNullSpaceError(
            f"smallest singular value {sigma_min:.3e} exceeds tolerance {tol * scale:.3e}"
        )
    sigma_next = sv[-2] if sv.size > 1 else np.inf
    gap = sigma_next / max(sigma_min, np.finfo(float).tiny)
    return vh[-1].conj().copy(), float(gap)


def partial_trace_X(rho, dim_x: int, dim_y: int) -> np.ndarray:
    """Trace out the first (visible) tensor factor of ``rho`` on ``X (x) Y``."""
    rho = _as_matrix(rho)
    n = dim_x * dim_y
    if rho.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} operator, got shape {rho.shape}")
    return np.einsum("iaib->ab", rho.reshape(dim_x, dim_y, dim_x, dim_y))


class Propagator:
    """Repeated application of ``exp(M t)`` for many different ``t``.

    When ``M`` has a well-conditioned eigenbasis the exponential is applied
    through the eigendecomposition, otherwise each call falls back to
    :func:`expm`. Instances are read-only after construction.
    """

    def __init__(self, m, cond_limit: float = 1e8):
        m = _as_matrix(m)
        if m.shape[0] != m.shape[1]:
            raise ValueError("Propagator needs a square matrix")
        self.matrix = m
        self.eigenbasis = False
        w, vecs = scipy.linalg.eig(m)
        if np.all(np.isfinite(w)) and np.all(np.isfinite(vecs)):
            cond = np.linalg.cond(vecs)
            if cond < cond_limit:
                inv = np.linalg.inv(vecs)
                resid = np.abs(vecs @ (w[:, None] * inv) - m).max()
                if resid <= 1e-12 * max(1.0, np.abs(m).max()) * cond:
                    self._w, self._v, self._vinv = w, vecs, inv
                    self.eigenbasis = True

    def expm(self, t: float) -> np.ndarray:
        if self.eigenbasis:
            return self._v @ (np.exp(self._w * t)[:, None] * self._vinv)
        return expm(self.matrix, t)

    def apply(self, t: float, v: np.ndarray) -> np.ndarray:
        """Return ``exp(M t) @ v`` for a 1-d vector ``v``."""
        if self.eigenbasis:
            return self._v @ (np.exp(self._w * t) * (self._vinv @ v))
        return expm(self.matrix, t) @ v

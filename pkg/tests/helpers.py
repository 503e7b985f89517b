from __future__ import annotations

import numpy as np

FIG1_SPEC = "g0; 4@0.9; 1@1.5; 4@2.4; e1; T=3"


def random_density(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)

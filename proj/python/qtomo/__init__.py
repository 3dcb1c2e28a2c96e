"""Integer tomography by QUBO reconstruction."""

from ._qtomo import *  # noqa: F401,F403
from ._qtomo import (
    DetectionFailed,
    Encoding,
    Geometry,
    InvalidArgument,
    TooLarge,
)

__all__ = [name for name in dir() if not name.startswith("_")]


def reconstruct(image, angles, encoding=None, mask=None, sweeps=1000, seed=0):
    """Projects `image`, builds the QUBO and anneals it. Returns (recon, solution)."""
    import numpy as np

    image = np.asarray(image, dtype=np.int32)
    n = image.shape[0]
    geometry = Geometry.uniform(n, angles)
    sino = radon(image, geometry)  # noqa: F405
    if encoding is None:
        encoding = Encoding.unit_step(max(1, int(image.max())))
    model = build_qubo(sino, encoding, mask)  # noqa: F405
    sol = simulated_anneal(model, sweeps=sweeps, seed=seed)  # noqa: F405
    return decode(sol.assignment, encoding, n), sol  # noqa: F405

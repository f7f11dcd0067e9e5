import numpy as np

from hsw.spectral import Grid, RealField


def random_field(grid: Grid, seed: int, k_max=None, scale=1.0) -> RealField:
    """Zero-mean real field with Gaussian coefficients on ``1 <= |k| <= k_max``."""
    rng = np.random.default_rng(seed)
    k_max = grid.k_dealias if k_max is None else k_max
    vals = rng.standard_normal(k_max) + 1j * rng.standard_normal(k_max)
    c = np.zeros(grid.n_points, dtype=np.complex128)
    ks = np.arange(1, k_max + 1)
    c[ks] = scale * vals
    c[grid.n_points - ks] = scale * np.conj(vals)
    return RealField(grid, c)


def cos_mode(grid: Grid, k: int, amp=1.0) -> RealField:
    return RealField.from_modes(grid, {k: amp / 2, -k: amp / 2})

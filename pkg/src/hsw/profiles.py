"""Named initial data: ``single_mode:k:amplitude``, ``broadband:decay:seed:amplitude``, files."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .diagnostics import sobolev_norm
from .spectral import Grid, RealField, read_field


def single_mode(grid: Grid, k: int, amplitude: float) -> RealField:
    """``amplitude * cos(k x)``."""
    if k == 0:
        raise ValueError("single_mode needs k != 0 (zero-mean data)")
    if abs(k) > grid.k_dealias:
        raise ValueError(f"mode {k} exceeds the dealiased band |k| <= {grid.k_dealias}")
    return RealField.from_modes(grid, {k: amplitude / 2, -k: amplitude / 2})


def broadband(grid: Grid, decay: float, seed: int, amplitude: float) -> RealField:
    """Random phases on ``1 <= |k| <= n/3`` with ``|c(k)| ~ exp(-decay |k|)``.

    The result is scaled so that ``||u||_{H^1} = amplitude``.
    """
    if decay < 0:
        raise ValueError("decay rate must be non-negative")
    rng = np.random.default_rng(seed)
    kmax = grid.k_dealias
    k = np.arange(1, kmax + 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=kmax)
    values = np.exp(-decay * (k - 1)) * np.exp(1j * phases)
    c = np.zeros(grid.n_points, dtype=np.complex128)
    c[k] = values
    c[grid.n_points - k] = np.conj(values)
    u = RealField(grid, c)
    norm = sobolev_norm(u, 1.0)
    return u * (amplitude / norm) if amplitude else u * 0.0


def parse_profile(text: str, grid: Grid) -> RealField:
    """Build initial data from a profile string or a snapshot CSV path."""
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "single_mode":
            _, k, amp = parts
            return single_mode(grid, int(k), float(amp))
        if kind == "broadband":
            _, decay, seed, amp = parts
            return broadband(grid, float(decay), int(seed), float(amp))
    except ValueError as exc:
        raise ValueError(f"bad profile {text!r}: {exc}") from exc
    path = Path(text[5:] if kind == "file" else text)
    if not path.exists():
        raise ValueError(f"unknown profile {text!r} (expected single_mode:k:a, broadband:d:seed:a or a file)")
    fld = read_field(path, j=grid.j)
    if fld.grid.n_points != grid.n_points:
        raise ValueError(f"profile file has {fld.grid.n_points} points, grid has {grid.n_points}")
    return fld

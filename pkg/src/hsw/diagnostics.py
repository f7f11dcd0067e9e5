"""Sobolev norms and per-snapshot diagnostics along trajectories."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .spectral import RealField


def sobolev_norm(u: RealField, s: float) -> float:
    """``(sum_k (1 + k^2)^s |c(k)|^2)^(1/2)``."""
    k = u.grid.modes.astype(np.float64)
    return float(np.sqrt(np.sum((1.0 + k * k) ** s * np.abs(u.coeffs) ** 2)))


def h1_energy(u: RealField) -> float:
    return sobolev_norm(u, 1.0) ** 2


def _hs_rows(coeffs: np.ndarray, modes: np.ndarray, s: float) -> np.ndarray:
    k = modes.astype(np.float64)
    return np.sqrt(np.sum((1.0 + k * k) ** s * np.abs(coeffs) ** 2, axis=-1))


@dataclass
class DiagnosticsRecord:
    time: float
    mean: float
    h1_energy: float
    hs_norms: dict = field(default_factory=dict)
    i_energy: Optional[float] = None

    def as_dict(self) -> dict:
        row = {"time": self.time, "mean": self.mean, "h1_energy": self.h1_energy}
        for s, v in self.hs_norms.items():
            row[f"hs_{_fmt_s(s)}"] = v
        if self.i_energy is not None:
            row["i_energy"] = self.i_energy
        return row


def _fmt_s(s: float) -> str:
    return repr(float(s))


def record(traj, s_list: Sequence[float] = ()) -> list:
    """One :class:`DiagnosticsRecord` per stored state, in time order."""
    modes = traj.grid.modes
    energies = _hs_rows(traj.coeffs, modes, 1.0) ** 2
    norms = {float(s): _hs_rows(traj.coeffs, modes, s) for s in s_list}
    out = []
    for i, t in enumerate(traj.times):
        out.append(
            DiagnosticsRecord(
                time=float(t),
                mean=float(traj.coeffs[i, 0].real),
                h1_energy=float(energies[i]),
                hs_norms={s: float(v[i]) for s, v in norms.items()},
            )
        )
    return out


def relative_energy_drift(records: Sequence[DiagnosticsRecord]) -> float:
    """``max_t |E(t) - E(0)| / E(0)``; zero for a zero initial energy."""
    e0 = records[0].h1_energy
    if e0 == 0:
        return 0.0
    return max(abs(r.h1_energy - e0) for r in records) / e0


def records_to_csv(records: Sequence[DiagnosticsRecord]) -> str:
    if not records:
        return ""
    rows = [r.as_dict() for r in records]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(float(v)) for k, v in row.items()})
    return buf.getvalue()


def records_to_jsonl(records: Sequence[DiagnosticsRecord]) -> str:
    return "".join(json.dumps(r.as_dict()) + "\n" for r in records)

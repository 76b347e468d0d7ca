"""Equilibrium branches of the coupled SIS system as the recovery rate varies.

All branches are closed-form in ``gamma``, so a sweep just evaluates
:func:`sis_equilibria` on a grid. The four transcritical points are exact
and are confirmed by the sign change of the eigenvalue that carries the
exchange of stability.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .equilibria import STABLE, EquilibriumReport, sis_equilibria, sis_jacobian
from .model import SisParams, thresholds


class TransitionPoint(NamedTuple):
    label: str
    gamma: Optional[float]
    branches: tuple[str, str]
    notice: str = ""


@dataclass(frozen=True)
class BranchTable:
    gamma_grid: np.ndarray
    rows: tuple[tuple[EquilibriumReport, ...], ...]
    transition_points: tuple[TransitionPoint, ...]

    def stable_labels(self) -> list[Optional[str]]:
        """Label of the stable equilibrium at each grid point (``None`` if
        no branch is stable there, e.g. exactly at a transition)."""
        out = []
        for reports in self.rows:
            stable = [r.label for r in reports if r.exists and r.stability == STABLE]
            out.append(stable[0] if len(stable) == 1 else None)
        return out

    def stable_sequence(self) -> list[str]:
        seq = []
        for lab in self.stable_labels():
            if lab is not None and (not seq or seq[-1] != lab):
                seq.append(lab)
        return seq


# branch whose eigenvalue changes sign, and which Jacobian entry holds it
_CRITICAL = {"T0": ("E0", (0, 0)), "T1": ("E1", (0, 0)), "T2": ("E2", (1, 1)), "T3": ("E4", (1, 1))}


def transcritical_points(p: SisParams) -> list[TransitionPoint]:
    """``T0 = alpha*beta_p`` (E0/E4), ``T1 = beta_p`` (E1/E2),
    ``T2 = beta_p*(1 - y_int)`` (E2/E3) and ``T3 = alpha*beta_p*(1 - y_int)``
    (E3/E4). ``gamma`` does not enter ``y_int``, so these are exact. With
    ``y_int >= 1`` E3 never exists and T2, T3 come back as ``None``."""
    y_int = thresholds(p).y_int
    a, b = p.alpha, p.beta_p
    pts = [TransitionPoint("T0", a * b, ("E0", "E4")), TransitionPoint("T1", b, ("E1", "E2"))]
    if y_int < 1.0:
        pts += [TransitionPoint("T2", b * (1.0 - y_int), ("E2", "E3")),
                TransitionPoint("T3", a * b * (1.0 - y_int), ("E3", "E4"))]
    else:
        note = f"y_int = {y_int:.6g} >= 1: E3 cannot exist"
        pts += [TransitionPoint("T2", None, ("E2", "E3"), note),
                TransitionPoint("T3", None, ("E3", "E4"), note)]
    return pts


def _coords(p: SisParams, label: str) -> tuple[float, ...]:
    return next(r.coordinates for r in sis_equilibria(p) if r.label == label)


def critical_eigenvalue(p: SisParams, label: str) -> float:
    """Eigenvalue of the branch whose stability flips at transition ``label``."""
    branch, (i, j) = _CRITICAL[label]
    return float(sis_jacobian(_coords(p, branch), p)[i, j])


def confirm_transcritical(p: SisParams, point: TransitionPoint, delta: float = 1e-4) -> bool:
    """True when the critical eigenvalue has opposite signs at
    ``gamma = T -+ delta`` and the two exchanging branches meet at ``T``."""
    if point.gamma is None:
        return False
    below = critical_eigenvalue(p.replace(gamma=point.gamma - delta), point.label)
    above = critical_eigenvalue(p.replace(gamma=point.gamma + delta), point.label)
    at = p.replace(gamma=point.gamma)
    meet = np.allclose(_coords(at, point.branches[0]), _coords(at, point.branches[1]), rtol=0, atol=1e-10)
    return below * above < 0 and meet


def sweep_gamma(p: SisParams, gamma_lo: float, gamma_hi: float, n_points: int) -> BranchTable:
    if not 0 < gamma_lo < gamma_hi:
        raise ValueError("need 0 < gamma_lo < gamma_hi")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    grid = np.linspace(gamma_lo, gamma_hi, n_points)
    rows = tuple(tuple(sis_equilibria(p.replace(gamma=float(g)))) for g in grid)
    pts = tuple(t for t in transcritical_points(p)
                if t.gamma is not None and gamma_lo <= t.gamma <= gamma_hi)
    grid.setflags(write=False)
    return BranchTable(grid, rows, pts)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_branches(table: BranchTable, include_nonexistent: bool = False) -> str:
    """CSV ``gamma,label,y,z_S,z_I,stability`` plus one ``# T<k> gamma=<v>``
    comment per transition inside the sweep.

    With ``include_nonexistent`` the formal branches that leave the unit box
    are written too, tagged ``exists=false``, so the complete diagram can be
    drawn."""
    buf = io.StringIO()
    buf.write("gamma,label,y,z_S,z_I,stability\n")
    for g, reports in zip(table.gamma_grid, table.rows):
        for r in reports:
            if not r.exists and not include_nonexistent:
                continue
            tag = r.stability if r.exists else "exists=false"
            buf.write(",".join([_fmt(g), r.label, *(_fmt(v) for v in r.coordinates), tag]) + "\n")
    for t in table.transition_points:
        buf.write(f"# {t.label} gamma={_fmt(t.gamma)}\n")
    return buf.getvalue()


class BranchRow(NamedTuple):
    gamma: float
    label: str
    y: float
    z_S: float
    z_I: float
    stability: str


def read_branches(text: str) -> tuple[list[BranchRow], dict[str, float]]:
    """Parse :func:`export_branches` output into rows and transition points."""
    rows, points = [], {}
    lines = text.splitlines()
    if not lines or lines[0].strip() != "gamma,label,y,z_S,z_I,stability":
        raise ValueError("not a branch CSV: unexpected header")
    for ln in lines[1:]:
        if not ln.strip():
            continue
        if ln.startswith("#"):
            label, _, value = ln[1:].strip().partition(" gamma=")
            points[label] = float(value)
            continue
        g, label, y, z_S, z_I, stab = ln.split(",")
        rows.append(BranchRow(float(g), label, float(y), float(z_S), float(z_I), stab))
    return rows, points


def stable_y_profile(table: BranchTable) -> list[float]:
    """Prevalence on the stable branch at each grid point (``nan`` where no
    single branch is stable)."""
    out = []
    for reports, lab in zip(table.rows, table.stable_labels()):
        out.append(next(r.coordinates[0] for r in reports if r.label == lab) if lab else math.nan)
    return out

"""Equilibria, Jacobians and stability verdicts.

SIS equilibria of the coupled system are reported twice over: once by the
closed-form existence/stability conditions and once by the eigenvalues of the
analytic Jacobian, so the two can be checked against each other. Reduced
SIRI equilibria have no Jacobian (the field is discontinuous) and are judged
by the analytic inequalities only.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import VariantError
from .model import SiriParams, SisParams, thresholds

NONHYPERBOLIC_TOL = 1e-9

STABLE, UNSTABLE, NONHYPERBOLIC = "stable", "unstable", "nonhyperbolic"


@dataclass(frozen=True)
class EquilibriumReport:
    label: str
    coordinates: tuple[float, ...]
    exists: bool
    violated: Optional[str] = None
    eigenvalues: Optional[tuple] = None
    stability: Optional[str] = None
    eigen_stability: Optional[str] = None
    justification: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        ev = self.eigenvalues
        if ev is not None and not isinstance(ev, dict):
            d["eigenvalues"] = [[z.real, z.imag] for z in ev]
        d["coordinates"] = [_json_float(v) for v in self.coordinates]
        return d


def _json_float(v):
    return v if math.isfinite(v) else str(v)


# --- eigenvalues ---------------------------------------------------------

def _cubic_roots(a: float, b: float, c: float) -> list[complex]:
    """Roots of ``l^3 + a l^2 + b l + c`` via the depressed cubic."""
    shift = -a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    if p == 0.0 and q == 0.0:
        return [complex(shift)] * 3
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc <= 0.0:
        # three real roots, trigonometric form (p < 0 here)
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        return [complex(shift + m * math.cos(theta - 2.0 * math.pi * k / 3.0)) for k in range(3)]
    sq = math.sqrt(disc)
    u = float(np.cbrt(-q / 2.0 + sq))
    v = float(np.cbrt(-q / 2.0 - sq))
    re = shift - (u + v) / 2.0
    im = math.sqrt(3.0) / 2.0 * (u - v)
    return [complex(shift + u + v), complex(re, im), complex(re, -im)]


def _polish(root: complex, a: float, b: float, c: float) -> complex:
    poly = lambda z: ((z + a) * z + b) * z + c  # noqa: E731
    best, fbest = root, abs(poly(root))
    z = root
    for _ in range(4):
        d = (3.0 * z + 2.0 * a) * z + b
        if abs(d) < 1e-14:
            break
        z = z - poly(z) / d
        fz = abs(poly(z))
        if fz < fbest:
            best, fbest = z, fz
    return best


def eigen3(matrix) -> tuple[complex, complex, complex]:
    """Eigenvalues of a real 3x3 matrix as roots of its characteristic
    cubic (closed form, then a few Newton steps). Sorted by real part,
    then imaginary part."""
    A = np.asarray(matrix, dtype=float)
    if A.shape != (3, 3) or not np.all(np.isfinite(A)):
        raise ValueError("eigen3 needs a finite 3x3 matrix")
    tr = A[0, 0] + A[1, 1] + A[2, 2]
    minors = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
              + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
              + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
    det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
           - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
           + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    a, b, c = -tr, minors, -det
    roots = [_polish(r, a, b, c) for r in _cubic_roots(a, b, c)]
    roots = [complex(r.real, 0.0) if abs(r.imag) <= 1e-14 * (1 + abs(r)) else r for r in roots]
    return tuple(sorted(roots, key=lambda z: (z.real, z.imag)))


def eigen_verdict(eigenvalues: Sequence[complex], tol: float = NONHYPERBOLIC_TOL) -> str:
    """``unstable`` if some real part is clearly positive, ``nonhyperbolic``
    if none is but one is within ``tol`` of zero, else ``stable``."""
    re = [z.real for z in eigenvalues]
    if max(re) > tol:
        return UNSTABLE
    if max(re) >= -tol:
        return NONHYPERBOLIC
    return STABLE


# --- coupled SIS ---------------------------------------------------------

def sis_jacobian(state, p: SisParams) -> np.ndarray:
    y, z_S, z_I = (float(v) for v in state)
    a = p.alpha
    infectivity = p.beta_u * z_I + p.beta_p * (1.0 - z_I)
    protect = z_S + a * (1.0 - z_S)
    spread = z_S * (1.0 - z_S) * p.L * (1.0 - a)
    return np.array([
        [(1.0 - y) * protect * infectivity - p.gamma - y * protect * infectivity,
         y * (1.0 - y) * (1.0 - a) * infectivity,
         y * (1.0 - y) * protect * (p.beta_u - p.beta_p)],
        [-spread * infectivity,
         (1.0 - 2.0 * z_S) * (p.c_P - p.L * (1.0 - a) * infectivity * y),
         -spread * (p.beta_u - p.beta_p) * y],
        [0.0, 0.0, (1.0 - 2.0 * z_I) * (p.c_IP - p.c_IU)],
    ])


def _sign_verdict(x: float) -> str:
    """Verdict for a quantity that must be negative for stability."""
    if x < 0:
        return STABLE
    return UNSTABLE if x > 0 else NONHYPERBOLIC


def sis_equilibria(p: SisParams) -> list[EquilibriumReport]:
    """Reports for E0..E4 of the coupled SIS system.

    ``stability`` comes from the closed-form conditions, ``eigen_stability``
    from the eigenvalues of the analytic Jacobian; both are ``None`` for an
    equilibrium that does not exist.
    """
    th = thresholds(p)
    a, b_p, g = p.alpha, p.beta_p, p.gamma
    out = []

    def report(label, coords, exists, violated, stability, why):
        if not exists:
            out.append(EquilibriumReport(label, coords, False, violated, justification=why))
            return
        ev = eigen3(sis_jacobian(coords, p))
        out.append(EquilibriumReport(label, coords, True, None, ev, stability, eigen_verdict(ev), why))

    report("E0", (0.0, 0.0, 0.0), True, None, UNSTABLE,
           "always exists; eigenvalue c_P > 0 makes it unstable")
    report("E1", (0.0, 1.0, 0.0), True, None, _sign_verdict(b_p - g),
           "always exists; stable iff beta_p < gamma")
    report("E2", (th.y_u, 1.0, 0.0), b_p > g, "beta_p > gamma", _sign_verdict(th.y_u - th.y_int),
           "exists iff beta_p > gamma; stable iff y_u < y_int")
    e3 = th.y_p < th.y_int < th.y_u
    e3_verdict = None
    if e3:
        # trace/determinant of the (y, z_S) block plus the decoupled z_I eigenvalue
        y, z = th.y_int, th.z_S_int
        trace = -g * y / (1.0 - y)
        det = y * (1.0 - y) * (1.0 - a) * b_p * z * (1.0 - z) * p.L * (1.0 - a) * b_p
        e3_verdict = STABLE if trace < 0 and det > 0 else NONHYPERBOLIC
    report("E3", (th.y_int, th.z_S_int, 0.0), e3, "y_p < y_int < y_u", e3_verdict,
           "exists iff y_p < y_int < y_u; stable by negative trace and positive determinant")
    report("E4", (th.y_p, 0.0, 0.0), g < a * b_p, "gamma < alpha*beta_p", _sign_verdict(th.y_int - th.y_p),
           "exists iff gamma < alpha*beta_p; stable iff y_p > y_int")
    return out


def table1_row(p: SisParams) -> str:
    """Which of E1..E4 the closed-form conditions single out as stable."""
    th = thresholds(p)
    if p.gamma > p.beta_p:
        return "E1"
    if th.y_u < th.y_int:
        return "E2"
    if th.y_p < th.y_int:
        return "E3"
    return "E4"


# --- vanilla SIRI --------------------------------------------------------

@dataclass(frozen=True)
class VanillaSiriRegime:
    R0: float
    R1: float
    M: float
    regime: str
    basin_threshold: Optional[float] = None
    endemic_level: Optional[float] = None
    notice: str = ""


def vanilla_siri_classify(beta: float, beta_hat: float, gamma: float) -> VanillaSiriRegime:
    """Long-run regime of the SIRI epidemic without behaviour.

    With equal infection and reinfection rates ``M`` is undefined and the
    model collapses to SIS; the report then carries the SIS verdict and a
    notice. ``basin_threshold`` assumes the epidemic starts with ``r = 0``.
    """
    if not (beta > 0 and beta_hat > 0 and gamma > 0):
        raise ValueError("rates must be positive")
    R0, R1 = beta / gamma, beta_hat / gamma
    ee = 1.0 - 1.0 / R1 if R1 > 1 else None
    if R0 == R1:
        regime = "endemic" if R0 > 1 else "infection-free"
        return VanillaSiriRegime(R0, R1, math.nan, regime, None, ee,
                                 notice="R0 = R1: reinfection equals first infection, the model reduces to SIS")
    M = (1.0 - R1) / (R0 - R1)
    if R0 > 1 and R1 > 1:
        return VanillaSiriRegime(R0, R1, M, "endemic", None, ee)
    if R0 > 1:
        return VanillaSiriRegime(R0, R1, M, "epidemic")
    if R1 > 1:
        return VanillaSiriRegime(R0, R1, M, "bistable", 1.0 - M * (R0 * M) ** (-R0 / R1), ee)
    return VanillaSiriRegime(R0, R1, M, "infection-free")


# --- reduced SIRI --------------------------------------------------------

def siri_fast_equilibria(y: float, p: SiriParams, tol: float = 1e-12):
    """Stable behavioural equilibrium ``(z_S, z_I, z_R)`` at prevalence
    ``y``. ``None`` marks a fraction that is indeterminate because ``y``
    sits on its indifference level."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"y must lie in [0,1], got {y}")
    th = thresholds(p)

    def pick(level):
        if abs(y - level) <= tol:
            return None
        return 1.0 if y < level else 0.0

    return (pick(th.y_int), 0.0, pick(th.y_hat_int))


@dataclass(frozen=True)
class SiriCaseReport:
    variant: str
    case_id: int
    condition: str
    equilibria: tuple[EquilibriumReport, ...]
    ife_stability: str
    ife_bound: Optional[float]
    bistable: bool
    attractor_y: float = field(default=math.nan)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["equilibria"] = [e.as_dict() for e in self.equilibria]
        return d


def _endemic_points(p: SiriParams, case_id: int, e2_case: int, slide_case: int, e3_case: int):
    g, bh, a = p.gamma, p.beta_hat_p, p.alpha
    y_hat = thresholds(p).y_hat_int
    e2 = (1.0 - g / bh, g / bh)
    e3 = (1.0 - g / (a * bh), g / (a * bh))
    return (
        EquilibriumReport("E2", e2, case_id == e2_case, None if case_id == e2_case else
                          "beta_hat_p*(1-y_hat_int) < gamma < beta_hat_p",
                          {"condition": "beta_hat_p*(1-y_hat_int) < gamma < beta_hat_p"},
                          STABLE if case_id == e2_case else None, None,
                          f"case {e2_case}: endemic point below y_hat_int"),
        EquilibriumReport("SLIDING", (y_hat, 1.0 - y_hat), case_id == slide_case,
                          None if case_id == slide_case else
                          "alpha*beta_hat_p*(1-y_hat_int) < gamma < beta_hat_p*(1-y_hat_int)",
                          {"condition": "alpha*beta_hat_p*(1-y_hat_int) < gamma < beta_hat_p*(1-y_hat_int)"},
                          STABLE if case_id == slide_case else None, None,
                          f"case {slide_case}: attractive sliding mode on y = y_hat_int"),
        EquilibriumReport("E3", e3, case_id == e3_case, None if case_id == e3_case else
                          "gamma < alpha*beta_hat_p*(1-y_hat_int)",
                          {"condition": "gamma < alpha*beta_hat_p*(1-y_hat_int)"},
                          STABLE if case_id == e3_case else None, None,
                          f"case {e3_case}: endemic point above y_hat_int"),
    )


def _ife(stability: str, bound, why: str) -> EquilibriumReport:
    cond = {"stable_region": stability}
    if bound is not None:
        cond["r_bound"] = bound
    overall = STABLE if stability == "all" else UNSTABLE if stability == "none" else "partial"
    return EquilibriumReport("IFE(r*)", (0.0, math.nan), True, None, cond, overall, None, why)


def siri_strong_classify(p: SiriParams) -> SiriCaseReport:
    """Regime of the reduced SIRI system when infection strengthens immunity.

    Boundary values of ``gamma`` fall into the lower-numbered case.
    """
    if not p.beta_p > p.beta_hat_p:
        raise VariantError("strengthened-immunity classifier needs beta_p > beta_hat_p")
    g, b, bh, a = p.gamma, p.beta_p, p.beta_hat_p, p.alpha
    y_hat = thresholds(p).y_hat_int
    bound = (b - g) / (b - bh)
    if g >= b:
        case, cond, ife, bnd, limit = 1, "gamma > beta_p", "all", None, 0.0
    elif g >= bh:
        case, cond, ife, bnd, limit = 2, "beta_hat_p < gamma < beta_p", "r>bound", bound, 0.0
    elif g >= bh * (1.0 - y_hat):
        case, cond, ife, bnd, limit = 3, "beta_hat_p*(1-y_hat_int) < gamma < beta_hat_p", "none", None, 1.0 - g / bh
    elif g >= a * bh * (1.0 - y_hat):
        case, cond, ife, bnd, limit = (4, "alpha*beta_hat_p*(1-y_hat_int) < gamma < beta_hat_p*(1-y_hat_int)",
                                       "none", None, y_hat)
    else:
        case, cond, ife, bnd, limit = 5, "gamma < alpha*beta_hat_p*(1-y_hat_int)", "none", None, 1.0 - g / (a * bh)
    why = {1: "R0 < 1 and R1 < 1 on every branch", 2: "R0 > 1 >= R1 on the low branch",
           }.get(case, "R0 > 1 and R1 > 1 on the low branch")
    eqs = (_ife(ife, bnd, why),) + _endemic_points(p, case, 3, 4, 5)
    return SiriCaseReport("siri-strong", case, cond, eqs, ife, bnd, False, limit)


def siri_weak_classify(p: SiriParams) -> SiriCaseReport:
    """Regime of the reduced SIRI system when infection compromises
    immunity, with local verdicts only. Boundary values of ``gamma`` fall
    into the lower-numbered case; ``gamma == beta_p`` leaves the IFE
    verdict nonhyperbolic."""
    if not p.beta_p < p.beta_hat_p:
        raise VariantError("compromised-immunity classifier needs beta_p < beta_hat_p")
    g, b, bh, a = p.gamma, p.beta_p, p.beta_hat_p, p.alpha
    y_hat = thresholds(p).y_hat_int
    if g >= bh:
        case, cond, limit = 1, "gamma > beta_hat_p", 0.0
    elif g >= bh * (1.0 - y_hat):
        case, cond, limit = 2, "beta_hat_p*(1-y_hat_int) < gamma < beta_hat_p", 1.0 - g / bh
    elif g >= a * bh * (1.0 - y_hat):
        case, cond, limit = 3, "alpha*beta_hat_p*(1-y_hat_int) < gamma < beta_hat_p*(1-y_hat_int)", y_hat
    else:
        case, cond, limit = 4, "gamma < alpha*beta_hat_p*(1-y_hat_int)", 1.0 - g / (a * bh)
    bnd = None
    if case == 1:
        ife, why = "all", "R0 < 1 and R1 < 1 on every branch"
    elif g < b:
        ife, why = "none", "gamma < beta_p: R0 > 1 on the low branch"
    elif g > b:
        ife, bnd, why = "r<bound", (b - g) / (b - bh), "gamma > beta_p: R0 < 1 < R1 on the low branch"
    else:
        ife, why = NONHYPERBOLIC, "gamma = beta_p: R0 = 1 on the low branch"
    bistable = case >= 2 and g > b
    eqs = (_ife(ife, bnd, why),) + _endemic_points(p, case, 2, 3, 4)
    return SiriCaseReport("siri-weak", case, cond, eqs, ife, bnd, bistable, limit)


# --- rendering -----------------------------------------------------------

def reports_to_json(reports) -> str:
    """Structured text form of equilibrium or case reports."""
    if isinstance(reports, SiriCaseReport):
        payload = reports.as_dict()
    else:
        payload = [r.as_dict() for r in reports]
    return json.dumps(payload, indent=2, allow_nan=True, default=str)


def render_table(reports: Sequence[EquilibriumReport]) -> str:
    """Plain-text table with one row per equilibrium: existence,
    coordinates and the two stability verdicts."""
    head = f"{'label':<8} {'exists':<7} {'coordinates':<36} {'stability':<14} {'eigen':<14} note"
    lines = [head, "-" * len(head)]
    for r in reports:
        coords = ", ".join(f"{v:.6g}" for v in r.coordinates)
        note = "" if r.exists else f"needs {r.violated}"
        lines.append(f"{r.label:<8} {('yes' if r.exists else 'no'):<7} ({coords}){'':<{max(0, 34 - len(coords))}} "
                     f"{r.stability or '-':<14} {r.eigen_stability or '-':<14} {note}")
    return "\n".join(lines)

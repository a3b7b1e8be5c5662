"""Closed-form eigenvalue bounds and constants, plus a verification report.

Everything here is a pure formula evaluator; the report builder at the
bottom pulls computed spectra from the operator modules and lays the
formulas next to them. Two groups of formulas with different parameter
conventions live here: the eigenvalue bounds (beta, theta, the explicit
lower/upper bounds, Widom's slope) take the bandwidth c directly, while the
Sturm-Liouville constants (R, H, the chi sandwich, the U bracket) are
functions of the kernel's exponential scale t = pi*c/2, consistent with
commuting_ode.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .special_functions import elliptic_K
from .commuting_ode import family_parameter, _u_closed_form

__all__ = [
    "C0",
    "recompute_c0",
    "beta",
    "theta",
    "theta_tilde",
    "lower_bound_small_c",
    "lower_bound_all_c",
    "lower_combined",
    "upper_bound",
    "widom_slope",
    "fit_log_slope",
    "R_of_c",
    "H_of_c",
    "supnorm_bound",
    "chi_sandwich",
    "U_bounds",
    "BoundsReport",
    "build_report",
]

# crossing point of the two lower-bound exponents
C0 = 0.12059


def recompute_c0(tol: float = 1e-10) -> float:
    """Root of log(7 e^2 pi / (2c)) = pi/(4c) by bisection.

    Guards against transcription drift in the stored constant C0.
    """
    def h(c):
        return math.log(7 * math.e ** 2 * math.pi / (2 * c)) - math.pi / (4 * c)

    lo, hi = 0.01, 1.0
    if h(lo) >= 0 or h(hi) <= 0:
        raise ValueError("bisection bracket invalid")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta(c: float) -> float:
    """Exponent of the combined eigenvalue lower bound rho_m >= theta e^{-2 beta m}."""
    if c <= 0:
        raise ValueError("c must be positive")
    if c <= C0:
        return math.log(7 * math.e ** 2 * math.pi / (2 * c))
    return math.pi / (4 * c)


def theta(c: float) -> float:
    if c <= 0:
        raise ValueError("c must be positive")
    if c <= C0:
        return 2 * math.sin(2 * c) ** 2 / (math.e ** 2 * c)
    return math.pi * math.exp(-math.pi / (2 * c))


def theta_tilde(c: float) -> float:
    """Monotone-in-c variant of theta; same exponent beta applies."""
    if c <= 0:
        raise ValueError("c must be positive")
    if c <= C0:
        return 2 * math.sin(2 * C0) ** 2 * c / (math.e * C0) ** 2
    return math.pi * math.exp(-math.pi / (2 * c))


def lower_bound_small_c(c: float, m: int) -> float:
    """Lower bound 2 sin(2c)^2/(e^2 c) * exp(-2 log(7 e^2 pi/(2c)) m), c <= pi/4."""
    if not 0 < c <= math.pi / 4:
        raise ValueError("this lower bound requires 0 < c <= pi/4")
    return 2 * math.sin(2 * c) ** 2 / (math.e ** 2 * c) \
        * math.exp(-2 * math.log(7 * math.e ** 2 * math.pi / (2 * c)) * m)


def lower_bound_all_c(c: float, m: int) -> float:
    """Lower bound pi * exp(-pi (m+1)/(2c)), valid for every c > 0."""
    if c <= 0:
        raise ValueError("c must be positive")
    return math.pi * math.exp(-math.pi * (m + 1) / (2 * c))


def lower_combined(c: float, m: int) -> float:
    return theta_tilde(c) * math.exp(-2 * beta(c) * m)


def upper_bound(c: float, m: int) -> float:
    """Upper bound 2 sqrt(pi) c^{2m+1} / (sqrt(m+3/4) (1-c^2)), only for c < 1."""
    if not 0 < c < 1:
        raise ValueError("this upper bound requires 0 < c < 1")
    return 2 * math.sqrt(math.pi) * c ** (2 * m + 1) \
        / (math.sqrt(m + 0.75) * (1 - c * c))


def widom_slope(c: float) -> float:
    """Asymptotic decay rate: -log(rho_m) ~ slope * m with
    slope = pi K(sech(pi c)) / K(tanh(pi c)).

    sech(pi c) is the complementary modulus of tanh(pi c) exactly, so the
    denominator is pi / (2 AGM(1, sech(pi c))). Evaluating through the AGM
    keeps the slope finite for large c, where tanh(pi c) rounds to 1.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    k = 1 / math.cosh(math.pi * c)
    a, b = 1.0, k
    for _ in range(60):
        if abs(a - b) <= 1e-15 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 2.0 * a * elliptic_K(k)


def fit_log_slope(ms, rhos) -> float:
    """Least-squares slope of -log(rho_m) against m."""
    ms = np.asarray(ms, dtype=float)
    ys = -np.log(np.asarray(rhos, dtype=float))
    A = np.vstack([ms, np.ones_like(ms)]).T
    sol, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(sol[0])


def R_of_c(c: float) -> float:
    """Oscillation constant of the flattened potential, at scale t = pi*c/2."""
    t = family_parameter(c)
    U = _u_closed_form(t)
    return 2 / math.pi ** 2 + (U * t / math.pi) ** 2 * (
        (math.cosh(4 * t) * (1 + (t / 3) / math.tanh(2 * t)) - 1)
        + 2 * t * math.sinh(4 * t))


def H_of_c(c: float) -> float:
    """Sup-norm constant: |g_m| <= H(c) sqrt(m+1/2), at scale t = pi*c/2."""
    t = family_parameter(c)
    return math.pi * math.sqrt(1 + 4 * t ** 2 / 3) * (
        1 + 2 * math.sqrt(2) * (2 + 1 / math.sqrt(3)) * (
            2 / math.pi ** 2 + (8 / 3) * (1 + 2 * t) * (t ** 2 + 9 * t / 8 + 0.5)))


def supnorm_bound(c: float, m: int) -> float:
    return H_of_c(c) * math.sqrt(m + 0.5)


def chi_sandwich(c: float, m: int):
    """Two-sided enclosure claimed for the m-th commuting-operator eigenvalue."""
    t = family_parameter(c)
    U = _u_closed_form(t)
    R = R_of_c(c)
    base = m * (m + 1) + 0.5
    lo = (math.pi / U) ** 2 * (base - R) - t * t
    hi = (math.pi / U) ** 2 * base - t * t
    return lo, hi


def U_bounds(c: float):
    """Bracket sqrt(2) e^{2t}/sinh(4t) < U < pi sqrt(2) e^{2t}/sinh(4t)."""
    t = family_parameter(c)
    lo = math.sqrt(2) * math.exp(2 * t) / math.sinh(4 * t)
    return lo, math.pi * lo


@dataclass
class BoundsReport:
    c: float
    m_max: int
    rows: list                      # one dict per m
    widom_slope: float
    slope_fit: float

    def to_json_dict(self) -> dict:
        return {
            "c": self.c,
            "m_max": self.m_max,
            "widom_slope": self.widom_slope,
            "slope_fit": self.slope_fit,
            "rows": self.rows,
        }


ROW_FIELDS = ["m", "lower_small_c", "lower_all_c", "lower_combined",
              "rho_computed", "upper", "chi_lo", "chi_hi", "chi_computed",
              "supnorm_bound", "supnorm_observed"]


def build_report(c: float, m_max: int = 12, n: int = None) -> BoundsReport:
    """Compute spectra by both operator routes and tabulate them against
    every closed-form bound that applies at this c."""
    from .sech_operator import nystrom_eigensystem, rho_rayleigh
    from .commuting_ode import galerkin_eigensystem

    ny = nystrom_eigensystem(c, n=n, m_max=m_max)
    n_b = max(140, 2 * (m_max + 1) + 30)
    ode = galerkin_eigensystem(c, n_b=n_b, m_max=m_max)
    fine = np.linspace(-1.0, 1.0, 2001)
    rows = []
    rhos = []
    for m in range(m_max + 1):
        if ny.eigenvalues[m] > ny.trust_floor:
            rho = float(ny.eigenvalues[m])
        else:
            rho = rho_rayleigh(c, ode.eigenfunction(m))
        rhos.append(rho)
        lo_chi, hi_chi = chi_sandwich(c, m)
        row = {
            "m": m,
            "lower_small_c": lower_bound_small_c(c, m) if c <= math.pi / 4 else None,
            "lower_all_c": lower_bound_all_c(c, m),
            "lower_combined": lower_combined(c, m),
            "rho_computed": rho,
            "upper": upper_bound(c, m) if c < 1 else None,
            "chi_lo": lo_chi,
            "chi_hi": hi_chi,
            "chi_computed": float(ode.chi[m]),
            "supnorm_bound": supnorm_bound(c, m),
            "supnorm_observed": float(np.max(np.abs(ode.evaluate_g(m, fine)))),
        }
        rows.append(row)
    m_fit_lo = min(6, max(0, m_max - 4))
    ms = np.arange(m_fit_lo, m_max + 1)
    fit = fit_log_slope(ms, [rhos[m] for m in ms]) if len(ms) >= 2 else float("nan")
    return BoundsReport(c=c, m_max=m_max, rows=rows,
                        widom_slope=widom_slope(c), slope_fit=fit)


if __name__ == "__main__":
    assert abs(beta(1.0) - math.pi / 4) < 1e-15
    assert abs(theta(1.0) - math.pi * math.exp(-math.pi / 2)) < 1e-15
    assert abs(recompute_c0() - C0) < 5e-5
    rep = build_report(0.5, m_max=8)
    ok = all(r["lower_combined"] <= r["rho_computed"] for r in rep.rows)
    print("bounds self-check ok; lower bounds hold:", ok)

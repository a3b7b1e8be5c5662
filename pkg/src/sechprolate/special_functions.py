"""Quadrature and special-function kernel shared by the rest of the package.

Everything here is dependency-light on purpose: Gauss-Legendre rules by
Newton iteration, normalized Legendre polynomials by recurrence, complete
elliptic integral by the AGM, and spherical Bessel functions by stable
downward recurrence.
"""
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureGrid",
    "gauss_legendre",
    "legendre_normalized",
    "legendre_table",
    "legendre_derivative_table",
    "elliptic_K",
    "spherical_bessel_ratio",
]


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple

    def __len__(self):
        return self.nodes.size


def _legendre_and_derivative(n, x):
    # P_n(x) and P_n'(x) by the three-term recurrence, vectorized in x
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(n: int, interval=(-1.0, 1.0)) -> QuadratureGrid:
    """n-point Gauss-Legendre rule on (lo, hi).

    Nodes found by Newton iteration on P_n starting from the Chebyshev-type
    guesses cos(pi*(i+3/4)/(n+1/2)); one half computed, then mirrored so the
    rule is exactly symmetric.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if n < 1:
        raise ValueError("need at least one quadrature node")
    if not lo < hi:
        raise ValueError("interval endpoints must satisfy lo < hi")
    if n == 1:
        x = np.array([0.0])
        w = np.array([2.0])
    else:
        m = (n + 1) // 2
        i = np.arange(m)
        x = np.cos(math.pi * (i + 0.75) / (n + 0.5))
        for _ in range(100):
            p, dp = _legendre_and_derivative(n, x)
            dx = p / dp
            x = x - dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        p, dp = _legendre_and_derivative(n, x)
        w_half = 2.0 / ((1.0 - x * x) * dp * dp)
        if n % 2:
            # x[m-1] is the center node; keep a single copy
            x = np.concatenate([-x[: m - 1], x[::-1]])
            w = np.concatenate([w_half[: m - 1], w_half[::-1]])
        else:
            x = np.concatenate([-x, x[::-1]])
            w = np.concatenate([w_half, w_half[::-1]])
        order = np.argsort(x)
        x = x[order]
        w = w[order]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return QuadratureGrid(half * x + mid, half * w, (lo, hi))


def legendre_normalized(m: int, x):
    """Orthonormal Legendre polynomial sqrt(m+1/2)*P_m(x) on [-1, 1]."""
    if m < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise ValueError("argument outside [-1, 1]")
    p0 = np.ones_like(x)
    p1 = x.copy()
    if m == 0:
        out = p0
    elif m == 1:
        out = p1
    else:
        for k in range(2, m + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        out = p1
    out = out * math.sqrt(m + 0.5)
    return out if out.shape else float(out)


def legendre_table(m_max: int, x) -> np.ndarray:
    """Values of the orthonormal Legendre polynomials 0..m_max, shape (m_max+1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((m_max + 1, x.size))
    p0 = np.ones_like(x)
    p1 = x.copy()
    out[0] = p0
    if m_max >= 1:
        out[1] = p1
    for k in range(2, m_max + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        out[k] = p1
    for k in range(m_max + 1):
        out[k] *= math.sqrt(k + 0.5)
    return out


def legendre_derivative_table(m_max: int, x) -> np.ndarray:
    """Derivatives of the orthonormal Legendre polynomials (same layout as legendre_table).

    Uses P'_k = P'_{k-2} + (2k-1) P_{k-1} on the unnormalized polynomials.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.empty((m_max + 1, x.size))
    ders = np.empty((m_max + 1, x.size))
    p0 = np.ones_like(x)
    p1 = x.copy()
    vals[0] = p0
    ders[0] = 0.0
    if m_max >= 1:
        vals[1] = p1
        ders[1] = 1.0
    for k in range(2, m_max + 1):
        vals[k] = ((2 * k - 1) * x * vals[k - 1] - (k - 1) * vals[k - 2]) / k
        ders[k] = ders[k - 2] + (2 * k - 1) * vals[k - 1]
    for k in range(m_max + 1):
        ders[k] *= math.sqrt(k + 0.5)
    return ders


def elliptic_K(k: float) -> float:
    """Complete elliptic integral of the first kind, modulus convention.

    K(k) = int_0^{pi/2} (1-k^2 sin^2 t)^{-1/2} dt, by the arithmetic-geometric
    mean. Note the argument is the modulus k, not the parameter m = k^2.
    """
    if not 0.0 <= k < 1.0:
        raise ValueError("modulus must lie in [0, 1)")
    a = 1.0
    b = math.sqrt(1.0 - k * k)
    for _ in range(60):
        if abs(a - b) <= 1e-15 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def spherical_bessel_ratio(k: int, z: float) -> float:
    """Spherical Bessel function j_k(z) for k >= 0, z >= 0.

    Downward recurrence from order k + ceil(20 + z), normalized against
    j_0(z) = sin(z)/z, which keeps the result stable for k well above z.
    """
    if k < 0:
        raise ValueError("order must be nonnegative")
    if z < 0:
        raise ValueError("argument must be nonnegative")
    if z < 1e-6:
        # series head: z^k / (2k+1)!!, relative error below z^2 ~ 1e-12;
        # also covers denormal z where the recurrences overflow
        if k == 0:
            return 1.0 if z == 0.0 else math.sin(z) / z
        val = 1.0
        for n in range(1, k + 1):
            val *= z / (2 * n + 1)
        return val
    if z > 2.0 * k and k > 0:
        # upward recurrence is stable here and cheaper
        jm, j = math.sin(z) / z, (math.sin(z) / z - math.cos(z)) / z
        for n in range(1, k):
            jm, j = j, (2 * n + 1) / z * j - jm
        return j
    n_start = k + int(math.ceil(20.0 + z))
    jp = 0.0
    j = 1e-300
    target = 0.0
    for n in range(n_start, 0, -1):
        jm = (2 * n + 1) / z * j - jp
        jp, j = j, jm
        if n - 1 == k:
            target = j
        if abs(j) > 1e280:
            j *= 1e-280
            jp *= 1e-280
            target *= 1e-280
    # j now holds the downward value at order 0
    scale = (math.sin(z) / z) / j
    if k == 0:
        return math.sin(z) / z
    return target * scale


if __name__ == "__main__":
    g = gauss_legendre(4)
    assert abs(np.sum(g.weights * g.nodes**6) - 2.0 / 7.0) < 1e-14
    assert abs(elliptic_K(0.0) - math.pi / 2) < 1e-15
    assert abs(spherical_bessel_ratio(0, math.pi)) < 1e-14
    print("special_functions self-check ok")

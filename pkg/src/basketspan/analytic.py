"""Closed-form continuum spanning solutions and the quadrature oracles that check them.

Fourier convention: Ff(z) = int f(s) exp(-i z s) ds.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation radius, absolute tolerance and subdivision budget for adaptive quadrature."""

    T: float = 40.0
    tol: float = 1e-10
    max_subdivisions: int = 2**20
    rule: str = "gauss-kronrod-21"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("truncation radius T must be positive")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.rule != "gauss-kronrod-21":
            raise ValueError(f"unsupported rule {self.rule!r}")

    def tighter(self, factor: float = 10.0) -> "QuadratureSpec":
        return QuadratureSpec(self.T, self.tol / factor, self.max_subdivisions, self.rule)


class QuadratureError(ArithmeticError):
    """Adaptive quadrature missed its tolerance; carries the estimate reached."""

    def __init__(self, message: str, estimate: float, abserr: float):
        super().__init__(f"{message}: estimate={estimate!r}, abserr={abserr:.3g}")
        self.estimate = estimate
        self.abserr = abserr


def adaptive_quad(f, a: float, b: float, q: QuadratureSpec, points=None, what: str = "integral",
                  **kwargs) -> float:
    """``scipy.integrate.quad`` with warnings promoted to QuadratureError."""
    if points is not None:
        points = sorted({float(p) for p in points if a < p < b}) or None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=q.tol, epsrel=0.0, limit=q.max_subdivisions,
                                  points=points, **kwargs)
    bad = [w for w in caught if issubclass(w.category, integrate.IntegrationWarning)]
    if bad and err > q.tol:
        raise QuadratureError(f"{what} did not converge ({bad[0].message})", val, err)
    return float(val)


def basket_call_ft(c: float, r: float) -> float:
    """Fourier transform in the strike variable of (|c| - |k|)^+, evaluated at r != 0."""
    if r == 0:
        raise ValueError("basket_call_ft is singular at r = 0")
    return (2.0 - 2.0 * math.cos(r * c)) / (r * r)


def basket_call_ft_integral(c: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    """int_R (2 - 2cos(rc)) / r^2 dr by quadrature.

    The core [0, T] uses the cancellation-free form 4 sin^2(rc/2) / r^2; the
    tail integrates 2/r^2 exactly and the oscillatory part with QAWF.
    """
    T = q.T

    def core(r):
        if r == 0.0:
            return c * c
        s = math.sin(0.5 * r * c)
        return 4.0 * s * s / (r * r)

    brk = [2 * math.pi * j / abs(c) for j in range(1, int(T * abs(c) / (2 * math.pi)) + 1)] if c else None
    head = adaptive_quad(core, 0.0, T, q, points=brk, what="basket call FT core")
    if c == 0:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        osc, err = integrate.quad(lambda r: 1.0 / (r * r), T, np.inf, weight="cos", wvar=abs(c),
                                  epsabs=q.tol, limlst=200)
    if err > 10 * q.tol:
        raise QuadratureError("basket call FT tail did not converge", osc, err)
    return 2.0 * (head + 2.0 / T - 2.0 * osc)


def g_solution(d: int, w) -> float:
    """Density g_d solving the strong spanning problem for the Gaussian payoff."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if d not in (1, 2, 3):
        raise ValueError(f"g_solution is available for d in (1, 2, 3), got {d}")
    if w.size != d:
        raise ValueError(f"expected a weight vector of length {d}, got {w.size}")
    r2 = float(w @ w)
    e = math.exp(-r2)
    if d == 1:
        return e * (2.0 * r2 - 1.0)
    if d == 2:
        return 2.0 / SQRT_PI * e * (r2 - 1.0)
    return e * (2.0 * r2 - 3.0) / math.pi


def g1(w):
    w = np.asarray(w, dtype=float)
    return np.exp(-w * w) * (2.0 * w * w - 1.0)


def _g2_uv(u: float, v: float) -> float:
    r2 = u * u + v * v
    return 2.0 / SQRT_PI * math.exp(-r2) * (r2 - 1.0)


def span_quadrature_gaussian(d: int, x, k: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    """int (|x.w| - |k|)^+ g_d(w) dw by adaptive quadrature, d in (1, 2).

    g_d is radial, so in coordinates (u, v) aligned with x the integrand is
    (|x| |u| - |k|)^+ g_d(u, v), and it is even in u.  The kink sits at
    |u| = |k| / |x|, which is handed to the integrator as a breakpoint.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if d not in (1, 2) or x.size != d:
        raise ValueError("span_quadrature_gaussian supports d in (1, 2) with len(x) == d")
    r = float(np.linalg.norm(x))
    if r > 10:
        raise ValueError("|x| must not exceed 10")
    kk = abs(float(k))
    if r == 0.0:
        return 0.0
    b = kk / r
    T = q.T
    if b >= T:
        return 0.0
    if d == 1:
        val = adaptive_quad(lambda u: (r * u - kk) * g1(u), b, T, q, what="G_1 spanning integral")
        return 2.0 * val
    inner_q = q.tighter()

    def slice_integral(u):
        return adaptive_quad(lambda v: _g2_uv(u, v), -T, T, inner_q, points=[0.0],
                             what="G_2 inner integral")

    val = adaptive_quad(lambda u: (r * u - kk) * slice_integral(u), b, T, q,
                        what="G_2 spanning integral")
    return 2.0 * val


def dispersion_d1_span(x: float, k: float) -> float:
    """Half-half mixture of the basket calls on weights +1 and -1, which equals (|x| - |k|)^+."""
    lhs = max(abs(x) - abs(k), 0.0)
    rhs = 0.5 * (max(abs(x) - abs(k), 0.0) + max(abs(-x) - abs(k), 0.0))
    if abs(lhs - rhs) > 1e-15:
        raise ArithmeticError(f"dispersion spanning identity failed at x={x}, k={k}")
    return rhs


def carr_madan_density(w):
    """Call-quantity density 2 exp(-w^2)(2w^2 - 1) spanning G_1 with single-asset calls."""
    w = np.asarray(w, dtype=float)
    out = 2.0 * np.exp(-w * w) * (2.0 * w * w - 1.0)
    return float(out) if out.ndim == 0 else out


def carr_madan_integral(x: float, k: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    """int (w x - k)^+ carr_madan_density(w) dw over [-T, T]."""
    if x == 0:
        # the density integrates to zero, so only a constant (-k)^+ * 0 remains
        return 0.0
    b = k / x
    f = lambda w: (w * x - k) * carr_madan_density(w)
    lo, hi = (b, q.T) if x > 0 else (-q.T, b)
    lo, hi = max(lo, -q.T), min(hi, q.T)
    if lo >= hi:
        return 0.0
    return adaptive_quad(f, lo, hi, q, what="Carr-Madan integral")


def g_grid_csv(d: int, lo: float = -3.0, hi: float = 3.0, n: int = 61) -> str:
    """CSV of g_d on a tensor grid: columns w_1..w_d, g."""
    if n < 2:
        raise ValueError("need at least two points per axis")
    axis = np.linspace(lo, hi, n)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"w_{j + 1}" for j in range(d)] + ["g"])
    for p in pts:
        writer.writerow([repr(float(v)) for v in p] + [repr(g_solution(d, p))])
    return buf.getvalue()

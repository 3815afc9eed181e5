"""Principal-value quadrature and numeric checks of the weak dispersion-call solutions
in one and two dimensions, plus the separable Dirac mollifier.

Fourier convention as in :mod:`basketspan.analytic`; the inverse transform is
F^{-1}g(x) = (2 pi)^{-d} int g(z) exp(i z x) dz.
"""

from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .analytic import QuadratureError, QuadratureSpec, adaptive_quad

ENVELOPE_PROBES = (5.0, 10.0, 20.0)


@dataclass(frozen=True)
class TestFunction1D:
    """Rapidly decaying test function with |f(w)| <= A exp(-a w^2).

    ``inv_ft`` is the inverse Fourier transform, when known in closed form.
    ``A = None`` marks a function without a decay certificate (constants).
    """

    __test__ = False  # not a pytest class

    f: Callable[[float], float]
    df: Callable[[float], float] | None = None
    A: float | None = 1.0
    a: float = 1.0
    inv_ft: Callable[[float], float] | None = None
    name: str = "phi"
    even: bool = False

    def __post_init__(self):
        if self.A is not None:
            if not (self.A > 0 and self.a > 0):
                raise ValueError("envelope constants must be positive")
            for w in ENVELOPE_PROBES:
                bound = self.A * math.exp(-self.a * w * w)
                for s in (w, -w):
                    if abs(self.f(s)) > bound * (1 + 1e-9) + 1e-300:
                        raise ValueError(f"{self.name}: envelope violated at w={s}")

    def __call__(self, w):
        return self.f(w)

    def derivative(self, w: float, h: float = 1e-5) -> float:
        if self.df is not None:
            return self.df(w)
        # fourth-order central difference
        f = self.f
        return (8 * (f(w + h) - f(w - h)) - (f(w + 2 * h) - f(w - 2 * h))) / (12 * h)

    def scaled(self, s: float) -> "TestFunction1D":
        f, df, inv = self.f, self.df, self.inv_ft
        return TestFunction1D(
            f=lambda w: s * f(w),
            df=None if df is None else (lambda w: s * df(w)),
            A=None if self.A is None else max(abs(s), 1e-300) * self.A,
            a=self.a,
            inv_ft=None if inv is None else (lambda x: s * inv(x)),
            name=f"{s:g}*{self.name}",
            even=self.even,
        )


def gaussian(a: float = 1.0, scale: float = 1.0) -> TestFunction1D:
    """scale * exp(-a w^2), with its closed-form inverse Fourier transform."""
    pref = scale / (2 * math.pi) * math.sqrt(math.pi / a)
    return TestFunction1D(
        f=lambda w: scale * np.exp(-a * w * w),
        df=lambda w: -2 * a * w * scale * np.exp(-a * w * w),
        A=abs(scale) if scale else 1.0,
        a=a,
        inv_ft=lambda x: pref * np.exp(-x * x / (4 * a)),
        name=f"{scale:g}*exp(-{a:g}w^2)",
        even=True,
    )


def shifted_gaussian(s: float, a: float = 1.0) -> TestFunction1D:
    """exp(-a (w - s)^2); uses (w - s)^2 >= w^2/2 - s^2 for the envelope."""
    return TestFunction1D(
        f=lambda w: np.exp(-a * (w - s) ** 2),
        df=lambda w: -2 * a * (w - s) * np.exp(-a * (w - s) ** 2),
        A=math.exp(a * s * s),
        a=a / 2,
        name=f"exp(-{a:g}(w-{s:g})^2)",
    )


def poly_gaussian(power: int, a: float = 1.0) -> TestFunction1D:
    """w^power exp(-a w^2); envelope with half the decay rate."""
    p = int(power)
    A = max(1.0, (p / (a * math.e)) ** (p / 2)) if p else 1.0
    return TestFunction1D(
        f=lambda w: w**p * np.exp(-a * w * w),
        df=lambda w: (p * w ** (p - 1) if p else 0.0) * np.exp(-a * w * w)
        - 2 * a * w ** (p + 1) * np.exp(-a * w * w),
        A=A,
        a=a / 2,
        name=f"w^{p}exp(-{a:g}w^2)",
        even=p % 2 == 0,
    )


def constant(kappa: float) -> TestFunction1D:
    return TestFunction1D(f=lambda w: kappa, df=lambda w: 0.0, A=None, name=f"const({kappa:g})",
                          even=True)


def _tail_bound(A: float, a: float, T: float, c: float) -> float:
    """Bound on |int_{T+|c|}^inf (phi(c+t) - phi(c-t))/t dt| under |phi| <= A exp(-a w^2).

    Both shifted arguments then lie outside [-T, T].
    """
    return A / (T + abs(c)) * math.sqrt(math.pi / a) * erfc(math.sqrt(a) * T)


def cpv_fn(f: Callable[[float], float], dfc: float, c: float, q: QuadratureSpec,
           A: float, a: float) -> float:
    """Principal value of int f(w)/(w - c) dw as int_0^R (f(c+t) - f(c-t))/t dt.

    R = T + |c| so that the window covers w in [-T, T]; ``dfc`` is f'(c), the
    removable value of the integrand at t = 0.
    """
    tail = _tail_bound(A, a, q.T, c)
    if tail > q.tol:
        raise QuadratureError(f"truncation tail bound {tail:.3g} exceeds tolerance at c={c}",
                              math.nan, tail)

    def integrand(t):
        if t == 0.0:
            return 2.0 * dfc
        return (f(c + t) - f(c - t)) / t

    pts = [abs(c)] if c != 0 else None
    return adaptive_quad(integrand, 0.0, q.T + abs(c), q, points=pts,
                         what=f"principal value at c={c}")


def cpv(phi: TestFunction1D, c: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    if phi.A is None:
        raise ValueError(f"{phi.name} has no decay certificate")
    return cpv_fn(phi.f, phi.derivative(c), c, q, phi.A, phi.a)


def eps_limit_oracle(phi: TestFunction1D, c: float, T: float = 40.0,
                     eps=(1e-2, 1e-3, 1e-4), n: int = 200_000) -> float:
    """Independent check of the principal value by direct excision.

    For each eps the truncated integral over eps < |w - c| < T is computed side by
    side with a midpoint rule in log|w - c|.  Its eps-dependence is
    I + b eps + d eps^3 + O(eps^5) for smooth phi, so three excision radii
    determine I by exact elimination.
    """
    f = phi.f
    vals = []
    for e in eps:
        s = np.linspace(math.log(e), math.log(T), n + 1)
        mid = 0.5 * (s[1:] + s[:-1])
        h = s[1] - s[0]
        t = np.exp(mid)
        # dw/(w-c) = ds on each side of the pole
        vals.append(h * (np.sum(f(c + t)) - np.sum(f(c - t))))
    M = np.array([[1.0, e, e**3] for e in eps])
    return float(np.linalg.solve(M, np.array(vals))[0])


def iterated_cpv(outer: TestFunction1D, inner: TestFunction1D, q: QuadratureSpec = QuadratureSpec()) -> float:
    """int dw1 outer(w1) pv int dw2 inner(w2)/(w2 - w1), outer integral over [-T, T].

    Exchanging the order gives -iterated_cpv(inner, outer), which is the
    Fubini-type identity for principal values.
    """
    inner_q = q.tighter()
    return adaptive_quad(lambda w: outer(w) * cpv(inner, w, inner_q), -q.T, q.T, q,
                         what="iterated principal value")


def t1_action(theta: TestFunction1D) -> float:
    """Weak d=1 solution tested against theta: (theta(1) + theta(-1)) / 2."""
    return 0.5 * (theta(1.0) + theta(-1.0))


def _hilbert_pair(phi: TestFunction1D, q: QuadratureSpec) -> Callable[[float], float]:
    """H(s) = pv int phi(w)/(w + s) dw - pv int phi(w)/(w - s) dw, memoized on s."""

    @functools.lru_cache(maxsize=None)
    def cached(c: float) -> float:
        return cpv(phi, c, q)

    def H(s: float) -> float:
        return cached(-float(s)) - cached(float(s))

    return H


def _t2_term(outer: TestFunction1D, inner: TestFunction1D, q: QuadratureSpec) -> float:
    inner_q = q.tighter()
    H = _hilbert_pair(inner, inner_q)
    g = lambda w: outer(w) * H(w)
    # |H| is bounded by its supremum, estimated on a grid and inflated
    hmax = 2.0 * max(abs(H(s)) for s in np.linspace(0.0, 5.0, 11)) + 1.0
    A = outer.A * hmax
    total = 0.0
    for c in (-1.0, 1.0):
        h = 1e-4
        dg = (8 * (g(c + h) - g(c - h)) - (g(c + 2 * h) - g(c - 2 * h))) / (12 * h)
        total += cpv_fn(g, dg, c, q, A, outer.a)
    return total


def t2_action(phi1: TestFunction1D, phi2: TestFunction1D, q: QuadratureSpec = QuadratureSpec()) -> float:
    """Weak d=2 solution tested against phi1(w1) phi2(w2), both even.

    Sum over the two orderings of the nested principal values
    (1/4pi^2) pv_{w1} [1/(w1+1) + 1/(w1-1)] phi1(w1) pv_{w2} [1/(w2+w1) - 1/(w2-w1)] phi2(w2).
    """
    for p in (phi1, phi2):
        if not p.even:
            raise ValueError(f"{p.name} must be even")
    return (_t2_term(phi1, phi2, q) + _t2_term(phi2, phi1, q)) / (4 * math.pi**2)


def _cos_sin_moments(phi: TestFunction1D, q: QuadratureSpec) -> tuple[float, float]:
    """(int F^{-1}phi(x) cos x dx, int F^{-1}phi(x) sin|x| dx) for even phi."""
    if phi.inv_ft is None:
        raise ValueError(f"{phi.name} has no inverse Fourier transform")
    T = q.T
    c = adaptive_quad(lambda x: phi.inv_ft(x) * math.cos(x), 0.0, T, q, what="cosine moment")
    s = adaptive_quad(lambda x: phi.inv_ft(x) * math.sin(x), 0.0, T, q, what="sine moment")
    return 2.0 * c, 2.0 * s


def weak_rhs_c2(phi1: TestFunction1D, phi2: TestFunction1D, q: QuadratureSpec = QuadratureSpec(),
                tol: float = 1e-9) -> float:
    """int_{R^2} F^{-1}theta(x) (cos(|x1| + |x2|) - 1) dx for theta = phi1 (x) phi2.

    The integrand is even in each coordinate, so the first quadrant is
    integrated in two dimensions and multiplied by four.
    """
    f1, f2 = phi1.inv_ft, phi2.inv_ft
    if f1 is None or f2 is None:
        raise ValueError("inverse Fourier transforms are required")
    T = q.T
    with warnings.catch_warnings():
        # roundoff warnings are superseded by the explicit error check below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.dblquad(lambda x2, x1: f1(x1) * f2(x2) * (math.cos(x1 + x2) - 1.0),
                                     0.0, T, 0.0, T, epsabs=tol, epsrel=0.0)
    if err > 10 * tol:
        raise QuadratureError("two-dimensional weak integral did not converge", 4 * val, 4 * err)
    return 4.0 * val


class TnbisCheck(NamedTuple):
    lhs: float
    rhs: float
    gap: float
    weak_rhs: float | None = None
    weak_gap: float | None = None


def verify_tnbis_d1(phi: TestFunction1D, q: QuadratureSpec = QuadratureSpec()) -> TnbisCheck:
    lhs, _ = _cos_sin_moments(phi, q)
    rhs = t1_action(phi)
    return TnbisCheck(lhs, rhs, abs(lhs - rhs))


def verify_tnbis_d2(phi1: TestFunction1D, phi2: TestFunction1D, q: QuadratureSpec = QuadratureSpec(),
                    with_weak: bool = True) -> TnbisCheck:
    """lhs = int F^{-1}theta(x) cos(|x1| + |x2|) dx against rhs = t2_action(phi1, phi2).

    cos(|x1| + |x2|) = cos x1 cos x2 - sin|x1| sin|x2| splits lhs into
    one-dimensional moments.  ``weak_rhs`` is the direct 2D integral of
    F^{-1}theta (cos||x||_1 - 1), which should equal rhs - theta(0).
    """
    c1, s1 = _cos_sin_moments(phi1, q)
    c2, s2 = _cos_sin_moments(phi2, q)
    lhs = c1 * c2 - s1 * s2
    rhs = t2_action(phi1, phi2, q)
    if not with_weak:
        return TnbisCheck(lhs, rhs, abs(lhs - rhs))
    weak = weak_rhs_c2(phi1, phi2, q)
    theta0 = phi1(0.0) * phi2(0.0)
    return TnbisCheck(lhs, rhs, abs(lhs - rhs), weak, float(abs(weak - (rhs - theta0))))


@functools.lru_cache(maxsize=None)
def bump_integral() -> float:
    """I0 = int_{-1}^{1} exp(-1/(1 - u^2)) du."""
    q = QuadratureSpec(T=1.0, tol=1e-14)
    return 2.0 * adaptive_quad(_bump, 0.0, 1.0, q, what="bump integral")


def _bump(u: float) -> float:
    return math.exp(-1.0 / (1.0 - u * u)) if abs(u) < 1.0 else 0.0


@dataclass(frozen=True)
class MollifierSpec:
    n: int
    d: int = 1
    c_n: float = field(init=False)

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be >= 1")
        object.__setattr__(self, "c_n", (self.n / bump_integral()) ** self.d)


def mollifier(spec: MollifierSpec, x) -> float:
    """h_n(x) = c_n prod_i 1{|x_i| < 1/n} exp(-1/(1 - n^2 x_i^2))."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != spec.d:
        raise ValueError(f"expected a point of dimension {spec.d}")
    out = spec.c_n
    for xi in x:
        out *= _bump(spec.n * xi)
        if out == 0.0:
            return 0.0
    return out


def mollifier_mass(spec: MollifierSpec, tol: float = 1e-13) -> float:
    r = 1.0 / spec.n
    if spec.d == 1:
        val, _ = integrate.quad(lambda x: mollifier(spec, [x]), -r, r, epsabs=tol, epsrel=0.0,
                                limit=1000)
        return val
    if spec.d == 2:
        with warnings.catch_warnings():
            # roundoff warnings at large n; callers compare the mass against 1 directly
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.dblquad(lambda y, x: mollifier(spec, [x, y]), -r, r, -r, r,
                                       epsabs=tol, epsrel=0.0)
        return val
    raise ValueError("mass check implemented for d in (1, 2)")


def mollifier_action(spec: MollifierSpec, g: Callable[[float], float], tol: float = 1e-13) -> float:
    """int h_n(x) g(x) dx in one dimension."""
    if spec.d != 1:
        raise ValueError("mollifier_action is one-dimensional")
    r = 1.0 / spec.n
    val, _ = integrate.quad(lambda x: mollifier(spec, [x]) * g(x), -r, r, epsabs=tol, epsrel=0.0,
                            limit=1000)
    return val


def verification_report(checks: list[dict]) -> str:
    """JSON document listing each check with lhs, rhs, gap, tolerance and pass flag."""
    return json.dumps({"schema": 1, "checks": checks}, indent=2, sort_keys=True) + "\n"

"""One-hidden-layer spanning network

    F(x) = alpha + mu.x + sum_i nu_i * (eta_i * (psi(w_i).x - k_i))^+

with hand-written backpropagation, the four weight restriction maps, and the
common-strike renormalization of a trained portfolio.

Parameters live in one flat float64 vector; the named blocks are views into it
so the optimizer can update everything with a handful of vector operations.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field

import numpy as np

STRIKE_FLOOR = 1e-6
BLOCKS = ("W", "mu", "strikes", "alpha", "nu", "eta")
REG_FORMS = ("squared", "norm")


class RestrictionKind(str, enum.Enum):
    UNRESTRICTED = "Unrestricted"
    SINGLE_ASSET = "SingleAsset"
    PREDETERMINED = "Predetermined"
    LONG_ONLY = "LongOnly"


def _block_slices(l: int, d: int) -> dict[str, slice]:
    sizes = {"W": l * d, "mu": d, "strikes": l, "alpha": 1, "nu": l, "eta": l}
    out, start = {}, 0
    for name in BLOCKS:
        out[name] = slice(start, start + sizes[name])
        start += sizes[name]
    return out


class SpanParams:
    """theta = (W, mu, strikes, alpha, nu, eta) backed by a flat vector."""

    def __init__(self, theta: np.ndarray, l: int, d: int):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (l * d + d + 3 * l + 1,):
            raise ValueError(f"flat vector of length {theta.size} does not fit l={l}, d={d}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("parameters must be finite")
        self.theta = theta
        self.l, self.d = int(l), int(d)
        self._slices = _block_slices(self.l, self.d)

    @classmethod
    def from_blocks(cls, W, mu, strikes, alpha, nu, eta) -> "SpanParams":
        W = np.atleast_2d(np.asarray(W, dtype=float))
        l, d = W.shape
        parts = [W.reshape(-1), np.reshape(mu, d), np.reshape(strikes, l),
                 np.reshape(alpha, 1), np.reshape(nu, l), np.reshape(eta, l)]
        return cls(np.concatenate([np.asarray(p, dtype=float) for p in parts]), l, d)

    @classmethod
    def zeros(cls, l: int, d: int) -> "SpanParams":
        return cls(np.zeros(l * d + d + 3 * l + 1), l, d)

    def block(self, name: str) -> np.ndarray:
        return self.theta[self._slices[name]]

    @property
    def W(self) -> np.ndarray:
        return self.block("W").reshape(self.l, self.d)

    @property
    def mu(self) -> np.ndarray:
        return self.block("mu")

    @property
    def strikes(self) -> np.ndarray:
        return self.block("strikes")

    @property
    def alpha(self) -> float:
        return float(self.theta[self._slices["alpha"]][0])

    @alpha.setter
    def alpha(self, value: float):
        self.theta[self._slices["alpha"]] = value

    @property
    def nu(self) -> np.ndarray:
        return self.block("nu")

    @property
    def eta(self) -> np.ndarray:
        return self.block("eta")

    def copy(self) -> "SpanParams":
        return SpanParams(self.theta.copy(), self.l, self.d)

    def project_strikes(self, floor: float = STRIKE_FLOOR) -> None:
        np.maximum(self.strikes, floor, out=self.strikes)

    def offending_block(self, vec: np.ndarray) -> str | None:
        """Name of the first block of ``vec`` (same layout) holding a non-finite entry."""
        for name in BLOCKS:
            if not np.all(np.isfinite(vec[self._slices[name]])):
                return name
        return None

    def to_dict(self) -> dict:
        return {
            "W": self.W.tolist(),
            "mu": self.mu.tolist(),
            "strikes": self.strikes.tolist(),
            "alpha": self.alpha,
            "nu": self.nu.tolist(),
            "eta": self.eta.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpanParams":
        return cls.from_blocks(data["W"], data["mu"], data["strikes"], data["alpha"],
                               data["nu"], data["eta"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __eq__(self, other):
        if not isinstance(other, SpanParams):
            return NotImplemented
        return (self.l, self.d) == (other.l, other.d) and np.array_equal(self.theta, other.theta)

    def __repr__(self):
        return f"SpanParams(l={self.l}, d={self.d})"


@dataclass(frozen=True)
class Restriction:
    """Active restriction map; Predetermined carries its frozen weights and strikes."""

    kind: RestrictionKind = RestrictionKind.UNRESTRICTED
    frozen_W: np.ndarray | None = field(default=None, compare=False)
    frozen_strikes: np.ndarray | None = field(default=None, compare=False)
    freeze_eta: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", RestrictionKind(self.kind))
        if self.kind is RestrictionKind.PREDETERMINED:
            if self.frozen_W is None:
                raise ValueError("Predetermined restriction needs frozen weights")
            W = np.atleast_2d(np.array(self.frozen_W, dtype=float))
            k = (np.ones(len(W)) if self.frozen_strikes is None
                 else np.array(self.frozen_strikes, dtype=float).reshape(len(W)))
            W.flags.writeable = False
            k.flags.writeable = False
            object.__setattr__(self, "frozen_W", W)
            object.__setattr__(self, "frozen_strikes", k)
        elif self.frozen_W is not None or self.frozen_strikes is not None:
            raise ValueError(f"{self.kind.value} does not take frozen weights")

    @classmethod
    def predetermined(cls, W, strikes=None, freeze_eta: bool = False) -> "Restriction":
        return cls(RestrictionKind.PREDETERMINED, W, strikes, freeze_eta)


def as_restriction(kind) -> Restriction:
    if isinstance(kind, Restriction):
        return kind
    return Restriction(RestrictionKind(kind))


def _softmax_rows(W: np.ndarray) -> np.ndarray:
    z = W - W.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _psi_rows(kind: RestrictionKind, W: np.ndarray):
    """psi applied to each row; for SingleAsset also returns (softmax, argmax)."""
    if kind is RestrictionKind.LONG_ONLY:
        return np.abs(W), None
    if kind is RestrictionKind.SINGLE_ASSET:
        omega = _softmax_rows(W)
        jstar = np.argmax(omega, axis=1)  # first maximal index on ties
        rows = np.arange(len(W))
        out = np.zeros_like(W)
        out[rows, jstar] = omega[rows, jstar]
        return out, (omega, jstar)
    return W, None


def apply_psi(kind, w) -> np.ndarray:
    """Effective basket weights for one weight vector or for each row of a matrix."""
    kind = kind.kind if isinstance(kind, Restriction) else RestrictionKind(kind)
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    out, _ = _psi_rows(kind, np.atleast_2d(w))
    return out.reshape(w.shape)


def forward(params: SpanParams, kind, x):
    """Network output at a point (returns float) or at each row of ``x``."""
    kind = kind.kind if isinstance(kind, Restriction) else RestrictionKind(kind)
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != params.d:
        raise ValueError(f"expected inputs of dimension {params.d}, got {X.shape[1]}")
    psi, _ = _psi_rows(kind, params.W)
    z = params.eta * (X @ psi.T - params.strikes)
    out = params.alpha + X @ params.mu + np.maximum(z, 0.0) @ params.nu
    return float(out[0]) if single else out


def regularization(theta: np.ndarray, zeta: float, reg_form: str):
    """Penalty value and gradient: zeta*|theta|^2 ("squared") or zeta*|theta| ("norm")."""
    if reg_form == "squared":
        return zeta * float(theta @ theta), 2.0 * zeta * theta
    if reg_form == "norm":
        nrm = float(np.sqrt(theta @ theta))
        if nrm == 0.0:
            return 0.0, np.zeros_like(theta)
        return zeta * nrm, (zeta / nrm) * theta
    raise ValueError(f"unknown regularization form {reg_form!r}; expected one of {REG_FORMS}")


def loss_and_grad_arrays(params: SpanParams, restriction: Restriction, X: np.ndarray,
                         y: np.ndarray, zeta: float, reg_form: str = "squared",
                         out: np.ndarray | None = None):
    """Batch loss and flat gradient on explicit arrays (the trainer's hot path)."""
    n = len(X)
    if n == 0:
        raise ValueError("empty batch")
    kind = restriction.kind
    W = params.W
    psi, aux = _psi_rows(kind, W)
    eta, nu = params.eta, params.nu

    zpre = X @ psi.T - params.strikes
    z = eta * zpre
    act = z > 0.0
    relu = np.where(act, z, 0.0)
    resid = params.alpha + X @ params.mu + relu @ nu - y
    g = (2.0 / n) * resid

    grad = np.empty_like(params.theta) if out is None else out
    sl = params._slices
    grad[sl["alpha"]] = g.sum()
    grad[sl["mu"]] = X.T @ g
    grad[sl["nu"]] = relu.T @ g
    dz = np.outer(g, nu) * act
    grad[sl["eta"]] = np.einsum("ij,ij->j", dz, zpre)
    dpre = dz * eta
    grad[sl["strikes"]] = -dpre.sum(axis=0)
    dpsi = dpre.T @ X

    if kind is RestrictionKind.PREDETERMINED:
        grad[sl["W"]] = 0.0
        grad[sl["strikes"]] = 0.0
        if restriction.freeze_eta:
            grad[sl["eta"]] = 0.0
    elif kind is RestrictionKind.LONG_ONLY:
        grad[sl["W"]] = (dpsi * np.sign(W)).reshape(-1)
    elif kind is RestrictionKind.SINGLE_ASSET:
        omega, jstar = aux
        rows = np.arange(params.l)
        upstream = dpsi[rows, jstar] * omega[rows, jstar]
        dW = -upstream[:, None] * omega
        dW[rows, jstar] += upstream
        grad[sl["W"]] = dW.reshape(-1)
    else:
        grad[sl["W"]] = dpsi.reshape(-1)

    loss = float(resid @ resid) / n
    if zeta:
        pen, pen_grad = regularization(params.theta, zeta, reg_form)
        loss += pen
        if kind is RestrictionKind.PREDETERMINED:
            frozen = np.zeros_like(pen_grad, dtype=bool)
            frozen[sl["W"]] = True
            frozen[sl["strikes"]] = True
            if restriction.freeze_eta:
                frozen[sl["eta"]] = True
            pen_grad = np.where(frozen, 0.0, pen_grad)
        grad += pen_grad
    return loss, grad


def loss_and_grad(params: SpanParams, kind, dataset, batch, zeta: float,
                  reg_form: str = "squared"):
    """Mean squared error on ``batch`` plus the regularization penalty, and its gradient.

    Returns ``(loss, grad)`` with ``grad`` a SpanParams of the same shape.
    """
    if zeta < 0:
        raise ValueError("zeta must be >= 0")
    idx = np.asarray(batch, dtype=int)
    if idx.size == 0:
        raise ValueError("empty batch")
    targets = dataset.require_targets()
    loss, grad = loss_and_grad_arrays(params, as_restriction(kind), dataset.points[idx],
                                      targets[idx], zeta, reg_form)
    return loss, SpanParams(grad, params.l, params.d)


@dataclass(frozen=True)
class Portfolio:
    """Hedge expressed as cash, underlyings and basket calls at one common strike."""

    alpha: float
    mu: np.ndarray
    nu_prime: np.ndarray
    w_prime: np.ndarray
    strike: float

    def value(self, x):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        calls = np.maximum(X @ self.w_prime.T - self.strike, 0.0)
        out = self.alpha + X @ self.mu + calls @ self.nu_prime
        return float(out[0]) if np.ndim(x) == 1 else out

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "mu": self.mu.tolist(),
            "strike": self.strike,
            "nu_prime": self.nu_prime.tolist(),
            "w_prime": self.w_prime.tolist(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        d = self.w_prime.shape[1]
        writer.writerow(["i", "nu_prime"] + [f"w_prime_{j + 1}" for j in range(d)] + ["strike"])
        for i, (nu, w) in enumerate(zip(self.nu_prime, self.w_prime)):
            writer.writerow([i, repr(float(nu))] + [repr(float(v)) for v in w] + [repr(self.strike)])
        return buf.getvalue()


def renormalize_strikes(params: SpanParams, kind, common_k: float) -> Portfolio:
    """Rewrite every option as a call struck at ``common_k``.

    A unit with eta_i >= 0 becomes nu'_i = nu_i*eta_i*k_i/k on weights
    w'_i = (k/k_i) psi(w_i).  A put-type unit (eta_i < 0) is turned into the
    call on the same rescaled weights through put-call parity,
    (k_i - a)^+ = (a - k_i)^+ - (a - k_i), with the linear remainder folded
    into the cash and underlying positions.  The portfolio value is unchanged.
    """
    if not common_k > 0:
        raise ValueError("common strike must be positive")
    k_i = params.strikes
    if np.any(k_i <= 0):
        raise ValueError("all strikes must be positive to renormalize")
    psi = apply_psi(kind, params.W)
    scale = common_k / k_i
    w_prime = psi * scale[:, None]
    nu_prime = params.nu * np.abs(params.eta) / scale
    puts = params.eta < 0
    alpha = params.alpha + common_k * nu_prime[puts].sum()
    mu = params.mu - nu_prime[puts] @ w_prime[puts]
    return Portfolio(alpha=float(alpha), mu=np.asarray(mu, dtype=float),
                     nu_prime=nu_prime, w_prime=w_prime, strike=float(common_k))

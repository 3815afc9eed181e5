"""Target payoffs: dispersion, best-of, worst-of (vanilla and binary) and the
smooth Gaussian example payoff.

All evaluators are branch-exact: kinks and indicators are never smoothed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np


class PayoffKind(str, enum.Enum):
    DISPERSION_CALL = "DispersionCall"
    DISPERSION_PUT = "DispersionPut"
    BEST_OF_CALL = "BestOfCall"
    BEST_OF_PUT = "BestOfPut"
    WORST_OF_CALL = "WorstOfCall"
    WORST_OF_PUT = "WorstOfPut"
    BEST_OF_BINARY_CALL = "BestOfBinaryCall"
    BEST_OF_BINARY_PUT = "BestOfBinaryPut"
    WORST_OF_BINARY_CALL = "WorstOfBinaryCall"
    WORST_OF_BINARY_PUT = "WorstOfBinaryPut"
    GAUSSIAN_EXAMPLE = "GaussianExample"


_BINARY = {
    PayoffKind.BEST_OF_BINARY_CALL,
    PayoffKind.BEST_OF_BINARY_PUT,
    PayoffKind.WORST_OF_BINARY_CALL,
    PayoffKind.WORST_OF_BINARY_PUT,
}

_SHORT_NAMES = {
    PayoffKind.DISPERSION_CALL: "DC",
    PayoffKind.DISPERSION_PUT: "DP",
    PayoffKind.BEST_OF_CALL: "BOC",
    PayoffKind.BEST_OF_PUT: "BOP",
    PayoffKind.WORST_OF_CALL: "WOC",
    PayoffKind.WORST_OF_PUT: "WOP",
    PayoffKind.BEST_OF_BINARY_CALL: "BOBC",
    PayoffKind.BEST_OF_BINARY_PUT: "BOBP",
    PayoffKind.WORST_OF_BINARY_CALL: "WOBC",
    PayoffKind.WORST_OF_BINARY_PUT: "WOBP",
    PayoffKind.GAUSSIAN_EXAMPLE: "G",
}


@dataclass(frozen=True)
class PayoffSpec:
    """Declarative description of a target payoff F(x, k)."""

    kind: PayoffKind
    dim: int
    strike: float = 1.0
    ah_variant: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", PayoffKind(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "strike", float(self.strike))
        if not math.isfinite(self.strike):
            raise ValueError("strike must be finite")
        if self.ah_variant and self.kind in _BINARY:
            raise ValueError(f"{self.kind.value} has no absolutely homogeneous variant")

    @property
    def is_ah(self) -> bool:
        return self.ah_variant or self.kind is PayoffKind.GAUSSIAN_EXAMPLE

    @property
    def payoff_id(self) -> str:
        tag = "-AH" if self.ah_variant else ""
        return f"{_SHORT_NAMES[self.kind]}{tag}_d{self.dim}_k{self.strike:g}"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = self.kind.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PayoffSpec":
        unknown = set(data) - {"kind", "dim", "strike", "ah_variant"}
        if unknown:
            raise ValueError(f"unknown payoff fields: {sorted(unknown)}")
        return cls(
            kind=PayoffKind(data["kind"]),
            dim=data["dim"],
            strike=data.get("strike", 1.0),
            ah_variant=bool(data.get("ah_variant", False)),
        )


def _positive(z):
    return np.maximum(z, 0.0)


def payoff_values(spec: PayoffSpec, X: np.ndarray, strike: float | None = None) -> np.ndarray:
    """Vectorized payoff over the rows of ``X`` (shape ``(m, d)``)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != spec.dim:
        raise ValueError(f"expected points of dimension {spec.dim}, got {X.shape[1]}")
    k = spec.strike if strike is None else float(strike)
    kind = spec.kind

    if kind is PayoffKind.GAUSSIAN_EXAMPLE:
        r = np.sqrt(np.einsum("ij,ij->i", X, X))
        out = np.zeros(len(X))
        nz = r > 0
        out[nz] = r[nz] * np.exp(-(k * k) / (r[nz] ** 2))
        return out

    if kind in (PayoffKind.DISPERSION_CALL, PayoffKind.DISPERSION_PUT):
        # the dispersion payoff is already stated on |x_j|
        level = np.abs(X).sum(axis=1)
    elif kind in (PayoffKind.BEST_OF_CALL, PayoffKind.BEST_OF_PUT,
                  PayoffKind.BEST_OF_BINARY_CALL, PayoffKind.BEST_OF_BINARY_PUT):
        level = (np.abs(X) if spec.ah_variant else X).max(axis=1)
    else:
        level = (np.abs(X) if spec.ah_variant else X).min(axis=1)
    kk = abs(k) if spec.ah_variant else k
    moneyness = level - kk

    if kind in (PayoffKind.DISPERSION_CALL, PayoffKind.BEST_OF_CALL, PayoffKind.WORST_OF_CALL):
        return _positive(moneyness)
    if kind in (PayoffKind.DISPERSION_PUT, PayoffKind.BEST_OF_PUT, PayoffKind.WORST_OF_PUT):
        return _positive(-moneyness)
    if kind in (PayoffKind.BEST_OF_BINARY_CALL, PayoffKind.WORST_OF_BINARY_CALL):
        return (moneyness > 0).astype(float)
    return (-moneyness > 0).astype(float)


def eval_payoff(spec: PayoffSpec, x, strike: float | None = None) -> float:
    """F(x, k) at a single point ``x`` of length ``spec.dim``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != spec.dim:
        raise ValueError(f"expected a point of dimension {spec.dim}, got {x.shape[0]}")
    return float(payoff_values(spec, x[None, :], strike)[0])


def check_ah(spec: PayoffSpec, x, k: float, lam: float) -> bool:
    """True iff F(lam x, lam k) = |lam| F(x, k) and F is even in x and in k at (x, k)."""
    if lam == 0:
        raise ValueError("lam must be nonzero")
    x = np.asarray(x, dtype=float)
    base = eval_payoff(spec, x, k)
    tol = 1e-12 * (1.0 + abs(base))
    scaled = eval_payoff(spec, lam * x, lam * k)
    return (
        abs(scaled - abs(lam) * base) <= tol
        and abs(eval_payoff(spec, x, -k) - base) <= tol
        and abs(eval_payoff(spec, -x, k) - base) <= tol
    )

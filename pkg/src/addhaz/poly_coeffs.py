"""Log-domain coefficients of products prod_i (a + b_i).

Likelihood factors over one grid interval multiply into a polynomial in the
local baseline level a:

    prod_{i=1}^{N} (a + b_i) = sum_{k=0}^{N} d_k a^k,   b_i = beta'z_i >= 0.

Coefficients grow combinatorially, so they are held as log magnitudes with
an explicit sign channel; a zero coefficient is the pair (-inf, 0).  With
nonnegative b_i every coefficient stays nonnegative, so multiplying in one
more factor only needs log-add-exp:

    d_0   <- d_0 * b
    d_k   <- d_{k-1} + d_k * b     (1 <= k <= N)
    d_{N+1} <- 1                   (leading coefficient)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "PolyCoefficients",
    "poly_init",
    "poly_multiply_in",
    "poly_eval_log",
    "poly_from_factors",
]


@dataclass(frozen=True)
class PolyCoefficients:
    """Coefficients d_0..d_degree as (log|d_k|, sign_k) pairs."""

    log_abs: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        log_abs = np.asarray(self.log_abs, dtype=float)
        signs = np.asarray(self.signs, dtype=np.int8)
        if log_abs.ndim != 1 or signs.shape != log_abs.shape or log_abs.size == 0:
            raise ValueError("log_abs and signs must be matching 1-d arrays")
        log_abs.setflags(write=False)
        signs.setflags(write=False)
        object.__setattr__(self, "log_abs", log_abs)
        object.__setattr__(self, "signs", signs)

    @property
    def degree(self) -> int:
        return self.log_abs.size - 1

    def coefficients(self) -> np.ndarray:
        """Plain-float coefficients; overflows to inf for extreme magnitudes."""
        return self.signs * np.exp(self.log_abs)


def poly_init() -> PolyCoefficients:
    """The empty product: the constant polynomial 1."""
    return PolyCoefficients(np.zeros(1), np.ones(1, dtype=np.int8))


def poly_multiply_in(poly: PolyCoefficients, b: float) -> PolyCoefficients:
    """Multiply the stored polynomial by one factor (a + b) with b >= 0."""
    b = float(b)
    if not (b >= 0.0) or math.isinf(b):
        raise ValueError("factor offset b must be finite and >= 0")
    log_b = math.log(b) if b > 0.0 else -math.inf
    old = poly.log_abs
    deg = poly.degree
    new = np.empty(deg + 2)
    new[0] = old[0] + log_b
    # shifted copy contributes d_{k-1}; scaled copy contributes d_k * b
    new[1 : deg + 1] = np.logaddexp(old[:deg], old[1:] + log_b)
    new[deg + 1] = old[deg]
    signs = np.where(new > -math.inf, 1, 0).astype(np.int8)
    return PolyCoefficients(new, signs)


def poly_from_factors(offsets: Iterable[float]) -> PolyCoefficients:
    """Fold poly_multiply_in over a sequence of factor offsets."""
    poly = poly_init()
    for b in offsets:
        poly = poly_multiply_in(poly, b)
    return poly


def poly_eval_log(poly: PolyCoefficients, a: float) -> float:
    """log of sum_k d_k a^k for a >= 0, or -inf when the value is 0."""
    a = float(a)
    if not (a >= 0.0):
        raise ValueError("evaluation point a must be >= 0")
    if a == 0.0:
        return float(poly.log_abs[0])
    terms = poly.log_abs + np.arange(poly.log_abs.size) * math.log(a)
    top = np.max(terms)
    if top == -math.inf:
        return -math.inf
    return float(top + math.log(np.sum(np.exp(terms - top))))

"""Analytic benchmark functions on the unit hypercube and their exact indices.

Seven families from the Kucherenko taxonomy: A-type (few important factors,
weak interactions), B-type (all factors important, weak interactions) and
C-type (all factors important, strong interactions).  All except ``A1`` are
products of independent one-dimensional terms, so their variance and
sensitivity indices have simple closed forms; ``A1`` is an alternating sum
of prefix products and is integrated exactly with rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

FAMILIES = ("A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "G")

# Canonical Sobol' G-function coefficient ladders.  A2 spans very-important
# to non-significant factors; A3 doubles the coefficient per factor; B3 makes
# all factors equally (moderately) important.
A2_COEFFS = (0.0, 0.5, 3.0, 9.0, 99.0, 999.0)
A3_COEFFS = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
B3_COEFF = 6.42


@dataclass(frozen=True)
class FunctionSpec:
    """A test-function identity: family, dimension and (where used) G coefficients."""

    family: str
    k: int
    a: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown function family {self.family!r}; expected one of {FAMILIES}")
        if self.k < 1:
            raise ValueError("factor count k must be >= 1")
        if self.a is not None:
            a = tuple(float(x) for x in self.a)
            if len(a) != self.k:
                raise ValueError(f"coefficient vector has length {len(a)}, expected k = {self.k}")
            if any(x < 0 for x in a):
                raise ValueError("G-function coefficients must be non-negative")
            object.__setattr__(self, "a", a)

    @property
    def coefficients(self) -> tuple[float, ...] | None:
        """Effective coefficient vector (defaults filled in for A2/A3/B3/C1)."""
        if self.a is not None:
            return self.a
        if self.family in ("A2", "A3"):
            ladder = A2_COEFFS if self.family == "A2" else A3_COEFFS
            if self.k > len(ladder):
                raise ValueError(
                    f"{self.family} has default coefficients for k <= {len(ladder)}; "
                    "pass an explicit coefficient vector"
                )
            return ladder[: self.k]
        if self.family == "B3":
            return (B3_COEFF,) * self.k
        if self.family == "C1":
            return (0.0,) * self.k
        if self.family == "G":
            raise ValueError("family 'G' requires an explicit coefficient vector")
        return None


def function_spec(family: str, k: int, a: tuple[float, ...] | None = None) -> FunctionSpec:
    """Build a :class:`FunctionSpec`, validating coefficient defaults early."""
    spec = FunctionSpec(family=family, k=k, a=a)
    spec.coefficients  # trigger default validation for coefficient families
    return spec


@dataclass(frozen=True)
class AnalyticIndices:
    """Exact output variance and first/total-order sensitivity index vectors."""

    variance: float
    first_order: np.ndarray
    total: np.ndarray


def _g_product(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.prod((np.abs(4.0 * x - 2.0) + a) / (1.0 + a), axis=-1)


def evaluate(fn: FunctionSpec, x: np.ndarray) -> np.ndarray:
    """Evaluate ``fn`` at one point or a batch of points in the unit cube.

    ``x`` has shape ``(k,)`` or ``(n, k)``; the result is a scalar array or a
    length-``n`` vector.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != fn.k:
        raise ValueError(f"point dimension {x.shape[-1]} does not match k = {fn.k}")
    fam = fn.family
    if fam == "A1":
        signs = (-1.0) ** np.arange(1, fn.k + 1)
        prefix = np.cumprod(x, axis=-1)
        return np.sum(signs * prefix, axis=-1)
    if fam in ("A2", "A3", "B3", "C1", "G"):
        return _g_product(x, np.asarray(fn.coefficients))
    if fam == "B1":
        return np.prod((fn.k - x) / (fn.k - 0.5), axis=-1)
    if fam == "B2":
        return (1.0 + 1.0 / fn.k) ** fn.k * np.prod(x ** (1.0 / fn.k), axis=-1)
    if fam == "C2":
        return 2.0**fn.k * np.prod(x, axis=-1)
    raise AssertionError(f"unhandled family {fam}")


def _multiplicative_indices(mu: np.ndarray, var: np.ndarray) -> AnalyticIndices:
    """Exact indices for f = prod_j g_j(x_j) with per-factor mean/variance.

    With m_j = mu_j^2 and s_j = mu_j^2 + var_j:
    V = prod s_j - prod m_j,  S_j V = var_j prod_{l != j} m_l,
    T_j V = var_j prod_{l != j} s_l.
    """
    m = mu**2
    s = m + var
    v_total = float(np.prod(s) - np.prod(m))
    if v_total <= 0:
        raise ValueError("function has zero output variance; indices undefined")
    k = len(mu)
    first = np.empty(k)
    total = np.empty(k)
    for j in range(k):
        others = np.delete(np.arange(k), j)
        first[j] = var[j] * np.prod(m[others]) / v_total
        total[j] = var[j] * np.prod(s[others]) / v_total
    return AnalyticIndices(variance=v_total, first_order=first, total=total)


def _a1_indices(k: int) -> AnalyticIndices:
    """Exact indices of the alternating prefix-product sum, by direct integration.

    With P_m = prod_{l<=m} x_l and f = sum_m (-1)^m P_m over iid U(0,1):
    E[P_m P_m'] = (1/3)^min(m,m') (1/2)^|m-m'|, which gives V(Y) from the
    double sum.  Conditioning on all-but-x_j makes f affine in x_j with slope
    d_j = prod_{l<j} x_l * sum_{m>=j} (-1)^m prod_{j<l<=m} x_l, so the total
    numerator is E[d_j^2]/12; conditioning on x_j alone gives the first-order
    numerator (sum_{m>=j} (-1)^m 2^{1-m})^2 / 12.  All terms are rational.
    """
    third, half = Fraction(1, 3), Fraction(1, 2)
    e_cross = sum(
        (-1) ** (m + mp) * third ** min(m, mp) * half ** abs(m - mp)
        for m in range(1, k + 1)
        for mp in range(1, k + 1)
    )
    e_mean = sum((-1) ** m * half**m for m in range(1, k + 1))
    v_total = e_cross - e_mean**2
    first = np.empty(k)
    total = np.empty(k)
    for j in range(1, k + 1):
        tail = sum(
            (-1) ** (m + mp) * third ** (min(m, mp) - j) * half ** abs(m - mp)
            for m in range(j, k + 1)
            for mp in range(j, k + 1)
        )
        total[j - 1] = float(third ** (j - 1) * tail / 12 / v_total)
        slope = sum((-1) ** m * half ** (m - 1) for m in range(j, k + 1))
        first[j - 1] = float(slope**2 / 12 / v_total)
    return AnalyticIndices(variance=float(v_total), first_order=first, total=total)


def analytic_indices(fn: FunctionSpec) -> AnalyticIndices:
    """Exact V(Y), S_j and T_j for a supported function family."""
    k = fn.k
    if fn.family == "A1":
        return _a1_indices(k)
    if fn.family in ("A2", "A3", "B3", "C1", "G"):
        a = np.asarray(fn.coefficients)
        mu = np.ones(k)
        var = (1.0 / 3.0) / (1.0 + a) ** 2
        return _multiplicative_indices(mu, var)
    if fn.family == "B1":
        mu = np.ones(k)
        var = np.full(k, (1.0 / 12.0) / (k - 0.5) ** 2)
        return _multiplicative_indices(mu, var)
    if fn.family == "B2":
        # g_j = (1 + 1/k) x^(1/k): E[g] = 1, E[g^2] = (k+1)^2 / (k (k+2)).
        mu = np.ones(k)
        var = np.full(k, 1.0 / (k * (k + 2.0)))
        return _multiplicative_indices(mu, var)
    if fn.family == "C2":
        mu = np.ones(k)
        var = np.full(k, 1.0 / 3.0)
        return _multiplicative_indices(mu, var)
    raise ValueError(f"no analytic indices for family {fn.family!r}")


def indices_csv(fn: FunctionSpec) -> str:
    """Analytic S/T table as CSV (factor, S, T) with the variance in a header row."""
    idx = analytic_indices(fn)
    lines = [f"# family={fn.family} k={fn.k} variance={idx.variance!r}", "factor,S,T"]
    for j in range(fn.k):
        lines.append(f"{j + 1},{float(idx.first_order[j])!r},{float(idx.total[j])!r}")
    return "\n".join(lines) + "\n"


__all__ = [
    "A2_COEFFS",
    "A3_COEFFS",
    "B3_COEFF",
    "FAMILIES",
    "AnalyticIndices",
    "FunctionSpec",
    "analytic_indices",
    "evaluate",
    "function_spec",
    "indices_csv",
]

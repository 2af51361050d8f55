"""Feasibility mathematics: Prentice bounds, positive definiteness, and the
applicability regions of the 1-dependent constructions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from .core import (
    EPS,
    Algorithm,
    CorrelationSpec,
    DecayingProduct,
    Exchangeable,
    General,
    KDependent,
    MarginalVector,
    OneDependent,
)

PD_TOL = 1e-10
# Upper bound on the number of violations copied into a report.
MAX_LISTED = 100


class Verdict(str, enum.Enum):
    FEASIBLE = "Feasible"
    PRENTICE_VIOLATED = "PrenticeViolated"
    NOT_POSITIVE_DEFINITE = "NotPositiveDefinite"
    ALGORITHM_INAPPLICABLE = "AlgorithmInapplicable"


@dataclass(frozen=True)
class Violation:
    where: tuple  # (i, j) for a pair, (i,) for a coordinate; 1-based
    quantity: str
    value: float
    interval: tuple  # closed admissible interval (lo, hi)

    def to_dict(self) -> dict:
        return {
            "where": list(self.where),
            "quantity": self.quantity,
            "value": self.value,
            "interval": list(self.interval),
        }


@dataclass
class FeasibilityReport:
    verdict: Verdict
    violations: list = field(default_factory=list)
    checked_algorithm: Algorithm | None = None
    notes: str = ""
    hints: dict = field(default_factory=dict)
    total_violations: int = 0

    def __post_init__(self):
        if not self.total_violations:
            self.total_violations = len(self.violations)
        if (self.verdict is Verdict.FEASIBLE) != (self.total_violations == 0):
            raise ValueError("verdict must be Feasible exactly when there are no violations")

    @property
    def feasible(self) -> bool:
        return self.verdict is Verdict.FEASIBLE

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "checked_algorithm": self.checked_algorithm.value if self.checked_algorithm else None,
            "violations": [v.to_dict() for v in self.violations],
            "total_violations": self.total_violations,
            "notes": self.notes,
            "hints": self.hints,
        }


class FeasibilityError(ValueError):
    """Raised when a derivation cannot produce valid Bernoulli parameters."""

    def __init__(self, report: FeasibilityReport):
        self.report = report
        super().__init__(report.notes or report.verdict.value)


def feasible_report(alg: Algorithm | None = None, notes: str = "") -> FeasibilityReport:
    return FeasibilityReport(Verdict.FEASIBLE, [], alg, notes or "all checks passed")


# ---------------------------------------------------------------------------
# Prentice bounds


def _check_open_unit(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 < x < 1.0:
        raise ValueError(f"{name}={x!r} must lie in the open interval (0, 1)")
    return x


def prentice_upper(p_i: float, p_j: float) -> float:
    """Largest non-negative correlation two Bernoulli(p_i), Bernoulli(p_j) can have."""
    p_i = _check_open_unit(p_i, "p_i")
    p_j = _check_open_unit(p_j, "p_j")
    if p_i == p_j:
        return 1.0
    odds_i, odds_j = p_i / (1.0 - p_i), p_j / (1.0 - p_j)
    return math.sqrt(min(odds_i, odds_j) / max(odds_i, odds_j))


def prentice_upper_array(p_a: np.ndarray, p_b: np.ndarray) -> np.ndarray:
    """Elementwise ``prentice_upper`` via the odds ratio; broadcasts."""
    odds_a = p_a / (1.0 - p_a)
    odds_b = p_b / (1.0 - p_b)
    out = np.sqrt(np.minimum(odds_a, odds_b) / np.maximum(odds_a, odds_b))
    return np.where(p_a == p_b, 1.0, out)


def _pairs_for(p: MarginalVector, spec: CorrelationSpec):
    """(i, j, r_ij) arrays (0-based) of the pairs whose correlation is specified."""
    m = p.m
    if isinstance(spec, Exchangeable):
        # The binding pair is the one with the most extreme odds.
        if m < 2 or spec.rho == 0.0:
            return np.empty(0, int), np.empty(0, int), np.empty(0)
        i, j = int(np.argmin(p.p)), int(np.argmax(p.p))
        if i == j:
            j = (i + 1) % m
        i, j = min(i, j), max(i, j)
        return np.array([i]), np.array([j]), np.array([spec.rho])
    if isinstance(spec, (DecayingProduct, OneDependent)):
        # Implied decaying products need no separate check: the Alg. 2
        # construction realises them whenever the adjacent pairs pass.
        idx = np.arange(m - 1)
        return idx, idx + 1, np.asarray(spec.rho)
    if isinstance(spec, General):
        spec = spec.to_bands()
    if isinstance(spec, KDependent):
        ii, jj, rr = [], [], []
        for lag, band in enumerate(spec.bands, start=1):
            idx = np.arange(band.size)
            ii.append(idx)
            jj.append(idx + lag)
            rr.append(np.asarray(band))
        return np.concatenate(ii), np.concatenate(jj), np.concatenate(rr)
    raise TypeError(f"unsupported correlation spec {type(spec).__name__}")


def check_prentice(p: MarginalVector, spec: CorrelationSpec) -> FeasibilityReport:
    """Check every specified pairwise correlation against its Prentice bound."""
    spec.check_dimension(p.m)
    ii, jj, rr = _pairs_for(p, spec)
    nz = rr != 0.0
    ii, jj, rr = ii[nz], jj[nz], rr[nz]
    if rr.size == 0:
        return feasible_report(notes="no nonzero correlations")
    upper = prentice_upper_array(p.p[ii], p.p[jj])
    bad = np.flatnonzero(rr > upper + EPS)
    if bad.size == 0:
        return feasible_report(notes="Prentice constraints satisfied")
    listed = [
        Violation(
            (int(ii[k]) + 1, int(jj[k]) + 1),
            f"r[{ii[k] + 1},{jj[k] + 1}]",
            float(rr[k]),
            (0.0, float(upper[k])),
        )
        for k in bad[:MAX_LISTED]
    ]
    first = listed[0]
    notes = (
        f"{bad.size} correlation(s) violate the Prentice constraints; e.g. "
        f"r[{first.where[0]},{first.where[1]}]={first.value:.6g} must lie in "
        f"[0, {first.interval[1]:.6g}]"
    )
    return FeasibilityReport(
        Verdict.PRENTICE_VIOLATED, listed, None, notes, total_violations=int(bad.size)
    )


def joint_cell_probabilities(p_i: float, p_j: float, r: float):
    """(P11, P10, P01, P00) of a Bernoulli pair with correlation r.

    Negative cells are returned unchanged; they are what marks an
    impossible (p_i, p_j, r) combination.
    """
    p11 = p_i * p_j + r * math.sqrt(p_i * p_j * (1.0 - p_i) * (1.0 - p_j))
    p10 = p_i - p11
    p01 = p_j - p11
    p00 = 1.0 - p11 - p10 - p01
    return p11, p10, p01, p00


# ---------------------------------------------------------------------------
# Positive definiteness


def is_positive_definite(r) -> bool:
    """Cholesky (LDL^T) test; pivots at or below ``PD_TOL`` count as failure."""
    a = np.array(r, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    m = a.shape[0]
    for k in range(m):
        pivot = a[k, k]
        if not pivot > PD_TOL:
            return False
        if k + 1 < m:
            col = a[k + 1 :, k] / pivot
            a[k + 1 :, k + 1 :] -= np.outer(col, a[k, k + 1 :])
    return True


def pd_bound_1dep_equal(m: int) -> tuple:
    """Admissible common minor-diagonal correlation of an m x m 1-dependent matrix.

    The raw interval is (-1/c_m, 1/c_m), c_m = 2 sin(pi (m-1) / (2 (m+1))).
    For m = 2 it is wider than the correlation domain, so it is capped at +-1.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    c_m = 2.0 * math.sin(math.pi * (m - 1) / (2.0 * (m + 1)))
    bound = min(1.0 / c_m, 1.0)
    return (-bound, bound)


# ---------------------------------------------------------------------------
# Algorithm 3 region


class QuadraticBoundCoeffs(NamedTuple):
    a: float
    b1: float
    b2: float
    c: float


def alg3_bound_coeffs(p: MarginalVector, i: int) -> QuadraticBoundCoeffs:
    """Coefficients of ``a r_{i-1} r_i + b1 r_{i-1} + b2 r_i <= c`` (1-based i)."""
    if not 2 <= i <= p.m - 1:
        raise IndexError(f"index {i} outside 2..{p.m - 1}")
    lo, mid, hi = p.p[i - 2], p.p[i - 1], p.p[i]
    return QuadraticBoundCoeffs(
        math.sqrt((1 - lo) * (1 - mid) * (1 - hi)),
        math.sqrt((1 - lo) * mid * hi),
        math.sqrt(lo * mid * (1 - hi)),
        math.sqrt(lo * (1 - mid) * hi),
    )


def rho_max_alg3_equal(p: MarginalVector) -> float:
    """Largest common 1-dependent correlation Algorithm 3 accepts for these marginals."""
    if p.m < 2:
        raise ValueError("need at least two coordinates")
    q = p.p
    bound = float(np.min(prentice_upper_array(q[:-1], q[1:])))
    if p.m == 2:
        return bound
    lo, mid, hi = q[:-2], q[1:-1], q[2:]
    a = np.sqrt((1 - lo) * (1 - mid) * (1 - hi))
    b = np.sqrt((1 - lo) * mid * hi) + np.sqrt(lo * mid * (1 - hi))
    c = np.sqrt(lo * (1 - mid) * hi)
    # Positive root of a x^2 + b x - c, in the cancellation-free form.
    roots = 2.0 * c / (b + np.sqrt(b * b + 4.0 * a * c))
    return min(bound, float(roots.min()))


# ---------------------------------------------------------------------------
# Algorithm 4 region


class RSequence(NamedTuple):
    r: np.ndarray
    feasible: bool
    first_bad: int  # 1-based index of the first r_i > 1, or 0


@numba.njit(cache=True)
def _r_recursion(rho_prime, eps):
    m = rho_prime.size + 1
    r = np.zeros(m)
    first_bad = 0
    for i in range(1, m):
        rp = rho_prime[i - 1]
        if first_bad:
            r[i] = np.inf
        elif rp == 0.0:
            r[i] = 0.0
        elif r[i - 1] >= 1.0:
            r[i] = np.inf
            first_bad = i + 1
        else:
            r[i] = rp / (1.0 - r[i - 1])
            if r[i] > 1.0 + eps:
                first_bad = i + 1
            elif r[i] > 1.0:
                r[i] = 1.0
    return r, first_bad


def alg4_rho_prime(p: MarginalVector, rho: np.ndarray) -> np.ndarray:
    q = p.p
    p_max = p.p_max
    if p_max == 1.0:  # pragma: no cover - excluded by MarginalVector
        raise ValueError("degenerate marginals")
    scale = np.sqrt((1 - q[:-1]) * (1 - q[1:]) / (q[:-1] * q[1:])) * p_max / (1 - p_max)
    return np.asarray(rho, dtype=float) * scale


def alg4_r_sequence(p: MarginalVector, rho) -> RSequence:
    """Forward recursion for the mixing probabilities r_1..r_m of Algorithm 4."""
    rho = np.asarray(rho, dtype=float)
    if rho.size != p.m - 1:
        raise ValueError(f"expected {p.m - 1} correlations, got {rho.size}")
    r, first_bad = _r_recursion(alg4_rho_prime(p, rho), EPS)
    return RSequence(r, first_bad == 0, int(first_bad))


@numba.njit(cache=True)
def _alg4_equal_ok(rho, m):
    r = 0.0
    for _ in range(2, m + 1):
        if r >= 1.0:
            return False
        r = rho / (1.0 - r)
        if r > 1.0:
            return False
    return True


def rho_max_alg4_equal(m: int) -> float:
    """Largest common correlation Algorithm 4 accepts in dimension m (equal marginals).

    For m = 2 the recursion never binds and the full domain is returned as 1.0.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if m == 2:
        return 1.0
    lo, hi = 0.25, 0.5  # recursion converges for rho <= 1/4 at any m; 1/2 is the m = 3 limit
    if _alg4_equal_ok(hi, m):
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _alg4_equal_ok(mid, m):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------


def _one_dep_hints(p: MarginalVector) -> dict:
    hints = {"rho_max_alg3_equal": rho_max_alg3_equal(p)} if p.m >= 2 else {}
    if p.m >= 2:
        hints["rho_max_alg4_equal"] = rho_max_alg4_equal(p.m)
    return hints


def check_applicability(
    p: MarginalVector, spec: CorrelationSpec, alg: Algorithm | str
) -> FeasibilityReport:
    """Prentice check, then a fresh derivation for ``alg``; never raises on infeasibility."""
    from . import generators

    alg = Algorithm.parse(alg)
    report = check_prentice(p, spec)
    if not report.feasible:
        report.checked_algorithm = alg
        return report
    try:
        generators.derive(p, spec, alg)
    except FeasibilityError as exc:
        rep = exc.report
        rep.checked_algorithm = alg
        if alg in (Algorithm.ONE_DEP_M1, Algorithm.ONE_DEP_M2) and not rep.hints:
            rep.hints = _one_dep_hints(p)
        return rep
    return feasible_report(alg, f"all derived parameters of {alg.value} lie in [0, 1]")

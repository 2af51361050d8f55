"""Domain types shared across the package.

Marginals and correlation structures are validated once at construction and
are immutable afterwards.  Every probability is a 64-bit float.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

# Derived probabilities this far outside [0, 1] are rounding noise and get
# clamped; anything further out is a genuine infeasibility.
EPS = 1e-12


class Algorithm(str, enum.Enum):
    EXCHANGEABLE = "alg1"
    DECAYING = "alg2"
    ONE_DEP_M1 = "alg3"
    ONE_DEP_M2 = "alg4"
    K_DEP = "alg5"

    @classmethod
    def parse(cls, value: "str | int | Algorithm") -> "Algorithm":
        if isinstance(value, Algorithm):
            return value
        text = str(value).strip().lower()
        if text.isdigit():
            text = "alg" + text
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown algorithm id {value!r}") from None


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MarginalVector:
    """Marginal probabilities p_1..p_m, each strictly inside (0, 1)."""

    p: np.ndarray

    def __init__(self, p: Sequence[float] | np.ndarray):
        arr = _frozen_array(p)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("marginals must be a non-empty 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("marginals must be finite")
        bad = np.flatnonzero((arr <= 0.0) | (arr >= 1.0))
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                f"marginal p[{i + 1}]={arr[i]!r} is not in the open interval (0, 1)"
            )
        object.__setattr__(self, "p", arr)

    @property
    def m(self) -> int:
        return int(self.p.size)

    @property
    def p_min(self) -> float:
        return float(self.p.min())

    @property
    def p_max(self) -> float:
        return float(self.p.max())

    def __len__(self) -> int:
        return self.m

    def __eq__(self, other) -> bool:
        return isinstance(other, MarginalVector) and np.array_equal(self.p, other.p)

    def __repr__(self) -> str:
        return f"MarginalVector(m={self.m}, p={np.array2string(self.p, threshold=8)})"


def _check_corr_values(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what}: correlations must be finite")
    if np.any(values < 0.0):
        raise ValueError(f"{what}: only non-negative correlations are supported")
    if np.any(values >= 1.0):
        raise ValueError(f"{what}: off-diagonal correlations must be < 1")


class CorrelationSpec:
    """Base class of the target correlation structures."""

    kind: str = ""

    def check_dimension(self, m: int) -> None:
        raise NotImplementedError

    def canonical(self) -> dict:
        """Exact, JSON-able description used for hashing and metadata."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Exchangeable(CorrelationSpec):
    rho: float
    kind = "exchangeable"

    def __post_init__(self):
        rho = float(self.rho)
        _check_corr_values(np.array([rho]), "exchangeable")
        object.__setattr__(self, "rho", rho)

    def check_dimension(self, m: int) -> None:
        pass

    def canonical(self) -> dict:
        return {"kind": self.kind, "rho": self.rho.hex()}

    def __eq__(self, other) -> bool:
        return isinstance(other, Exchangeable) and self.rho == other.rho


@dataclass(frozen=True, eq=False)
class _MinorDiagonal(CorrelationSpec):
    rho: np.ndarray

    def __init__(self, rho: Sequence[float] | np.ndarray):
        arr = _frozen_array(rho)
        if arr.ndim != 1:
            raise ValueError(f"{self.kind}: rho must be a 1-d vector of length m-1")
        _check_corr_values(arr, self.kind)
        object.__setattr__(self, "rho", arr)

    def check_dimension(self, m: int) -> None:
        if self.rho.size != m - 1:
            raise ValueError(
                f"{self.kind}: expected {m - 1} minor-diagonal correlations, got {self.rho.size}"
            )

    def canonical(self) -> dict:
        return {"kind": self.kind, "rho": [float(x).hex() for x in self.rho]}

    def __eq__(self, other) -> bool:
        return type(other) is type(self) and np.array_equal(self.rho, other.rho)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(rho={np.array2string(self.rho, threshold=8)})"


class DecayingProduct(_MinorDiagonal):
    """corr(X_j, X_k) = rho_j * ... * rho_{k-1}; AR(1) when all rho_l are equal."""

    kind = "decaying"


class OneDependent(_MinorDiagonal):
    """Nonzero correlations only between neighbours."""

    kind = "one_dep"


@dataclass(frozen=True, eq=False)
class KDependent(CorrelationSpec):
    """Banded structure: ``bands[i-1][j-1]`` is corr(X_j, X_{j+i}) for i <= k."""

    bands: tuple
    kind = "k_dep"

    def __init__(self, bands: Sequence[Sequence[float]]):
        frozen = tuple(_frozen_array(b) for b in bands)
        if not frozen:
            raise ValueError("k_dep: at least one band is required")
        for i, band in enumerate(frozen, start=1):
            if band.ndim != 1:
                raise ValueError(f"k_dep: band {i} must be 1-d")
            _check_corr_values(band, f"k_dep band {i}")
            if band.size != frozen[0].size - (i - 1):
                raise ValueError(f"k_dep: band {i} must be one shorter than band {i - 1}")
        object.__setattr__(self, "bands", frozen)

    @property
    def k(self) -> int:
        return len(self.bands)

    def check_dimension(self, m: int) -> None:
        if self.k > m - 1:
            raise ValueError(f"k_dep: band width {self.k} exceeds m-1={m - 1}")
        for i, band in enumerate(self.bands, start=1):
            if band.size != m - i:
                raise ValueError(f"k_dep: band {i} must have length {m - i}, got {band.size}")

    def canonical(self) -> dict:
        return {"kind": self.kind, "bands": [[float(x).hex() for x in b] for b in self.bands]}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, KDependent)
            and self.k == other.k
            and all(np.array_equal(a, b) for a, b in zip(self.bands, other.bands))
        )


@dataclass(frozen=True, eq=False)
class General(CorrelationSpec):
    """Arbitrary symmetric correlation matrix with non-negative entries."""

    r: np.ndarray
    kind = "general"

    def __init__(self, r: Sequence[Sequence[float]] | np.ndarray):
        arr = np.array(r, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError("general: correlation matrix must be square")
        if not np.allclose(arr, arr.T, rtol=0.0, atol=1e-12):
            raise ValueError("general: correlation matrix must be symmetric")
        if not np.all(np.diag(arr) == 1.0):
            raise ValueError("general: correlation matrix must have a unit diagonal")
        arr = (arr + arr.T) / 2.0
        np.fill_diagonal(arr, 1.0)
        off = arr[~np.eye(arr.shape[0], dtype=bool)]
        _check_corr_values(off, "general")
        arr.setflags(write=False)
        object.__setattr__(self, "r", arr)

    def check_dimension(self, m: int) -> None:
        if self.r.shape[0] != m:
            raise ValueError(f"general: matrix is {self.r.shape[0]}x{self.r.shape[0]}, expected {m}x{m}")

    def to_bands(self) -> KDependent:
        m = self.r.shape[0]
        return KDependent([np.diagonal(self.r, offset=i).copy() for i in range(1, m)])

    def canonical(self) -> dict:
        return {"kind": self.kind, "r": [[float(x).hex() for x in row] for row in self.r]}

    def __eq__(self, other) -> bool:
        return isinstance(other, General) and np.array_equal(self.r, other.r)


AnySpec = Union[Exchangeable, DecayingProduct, OneDependent, KDependent, General]


# ---------------------------------------------------------------------------
# Derived per-algorithm parameters


@dataclass(frozen=True, eq=False)
class ExchangeableParams:
    gamma: float
    alpha: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True, eq=False)
class DecayingParams:
    # alpha[0], beta[0] belong to coordinate 2
    alpha: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True, eq=False)
class OneDepM1Params:
    alpha: np.ndarray  # alpha_1..alpha_m
    beta: np.ndarray  # beta_0..beta_m, beta[0] == 1


@dataclass(frozen=True, eq=False)
class OneDepM2Params:
    alpha: np.ndarray
    rho_prime: np.ndarray
    r: np.ndarray  # r_1..r_m, r[0] == 0
    p_max: float


@dataclass(frozen=True, eq=False)
class KDepParams:
    alpha: np.ndarray
    beta: np.ndarray  # K x m
    k_prime: np.ndarray

    @property
    def k(self) -> int:
        return int(self.beta.shape[0])


DerivedParams = Union[ExchangeableParams, DecayingParams, OneDepM1Params, OneDepM2Params, KDepParams]


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """n x m block of 0/1 draws plus what is needed to reproduce it."""

    data: np.ndarray
    seed: int
    spec_digest: str
    algorithm: Algorithm

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def m(self) -> int:
        return int(self.data.shape[1])


def spec_digest(p: MarginalVector, spec: CorrelationSpec, alg: Algorithm | str) -> str:
    """SHA-256 over an exact (float.hex) rendering of the inputs."""
    payload = {
        "p": [float(x).hex() for x in p.p],
        "spec": spec.canonical(),
        "alg": Algorithm.parse(alg).value,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()

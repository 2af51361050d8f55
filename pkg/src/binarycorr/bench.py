"""Timing harness: per-row sampling cost against dimension, with log-log slope fits."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    Algorithm,
    CorrelationSpec,
    DecayingProduct,
    Exchangeable,
    KDependent,
    MarginalVector,
    OneDependent,
)
from .generators import fill_rows, make_plan

ProfileP = Callable[[int], MarginalVector]
ProfileSpec = Callable[[int], CorrelationSpec]


@dataclass
class ScalingResult:
    algorithm: Algorithm
    dims: np.ndarray
    times: np.ndarray  # median seconds per row, derivation excluded
    slope: float
    r2: float
    reps: int
    mean_times: np.ndarray = field(default=None)
    derive_times: np.ndarray = field(default=None)
    label: str = ""

    def __post_init__(self):
        self.dims = np.asarray(self.dims, dtype=np.int64)
        self.times = np.asarray(self.times, dtype=float)
        if self.dims.size == 0:
            raise ValueError("scaling result needs at least one dimension")
        if np.any(np.diff(self.dims) <= 0):
            raise ValueError("dims must be strictly increasing")
        if np.any(self.times <= 0):
            raise ValueError("times must be positive")
        self.mean_times = self.times.copy() if self.mean_times is None else np.asarray(self.mean_times, dtype=float)
        if self.derive_times is None:
            self.derive_times = np.full(self.dims.size, np.nan)
        self.derive_times = np.asarray(self.derive_times, dtype=float)
        if not self.label:
            self.label = self.algorithm.value


def fit_loglog(dims, times) -> tuple:
    """Least-squares slope of log(time) on log(m) and its r^2."""
    x = np.log(np.asarray(dims, dtype=float))
    y = np.log(np.asarray(times, dtype=float))
    if x.size < 2:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def equal_p(value: float) -> ProfileP:
    return lambda m: MarginalVector(np.full(m, value))


def default_profile(algorithm: Algorithm | str, k: int | None = None):
    """(p-profile, spec-profile, label) used by the CLI and the acceptance suite.

    ``k=None`` with alg5 means a general AR(1) matrix (band width m - 1).
    """
    alg = Algorithm.parse(algorithm)
    if alg is Algorithm.EXCHANGEABLE:
        return equal_p(0.5), lambda m: Exchangeable(0.5), "alg1 exchangeable rho=0.5"
    if alg is Algorithm.DECAYING:
        return equal_p(0.5), lambda m: DecayingProduct(np.full(m - 1, 0.4)), "alg2 AR(1) rho=0.4"
    if alg in (Algorithm.ONE_DEP_M1, Algorithm.ONE_DEP_M2):
        return (
            equal_p(0.5),
            lambda m: OneDependent(np.full(m - 1, 0.2)),
            f"{alg.value} 1-dependent rho=0.2",
        )
    if k is None:
        def ar1_bands(m, rho=0.2):
            return KDependent([np.full(m - lag, rho**lag) for lag in range(1, m)])

        return equal_p(0.5), ar1_bands, "alg5 general AR(1) rho=0.2"
    return (
        equal_p(0.5),
        lambda m: KDependent([np.full(m - lag, 0.05) for lag in range(1, k + 1)]),
        f"alg5 K={k} bands rho=0.05",
    )


def _time_once(plan, buf, seed) -> float:
    t0 = time.perf_counter()
    fill_rows(plan, seed, buf, 0, parallel=False)
    return time.perf_counter() - t0


def run_scaling(
    algorithm: Algorithm | str,
    p_profile: ProfileP,
    spec_profile: ProfileSpec,
    dims: Sequence[int],
    reps: int = 10,
    warmup: int = 2,
    min_seconds: float = 2e-3,
    seed: int = 0,
    label: str = "",
) -> ScalingResult:
    """Median per-row sampling time at each m.

    Each timed repetition draws enough rows in one serial kernel call to take
    at least ``min_seconds``; per-row time is that duration over the row
    count.  Derivation is timed separately (median of 3).
    """
    alg = Algorithm.parse(algorithm)
    dims = [int(m) for m in dims]
    if not dims:
        raise ValueError("dims must not be empty")
    medians, means, derive = [], [], []
    for m in dims:
        p, spec = p_profile(m), spec_profile(m)
        d_times = []
        for _ in range(3):
            t0 = time.perf_counter()
            plan = make_plan(p, spec, alg)
            d_times.append(time.perf_counter() - t0)
        derive.append(float(np.median(d_times)))

        rows = 1
        buf = np.empty((rows, m), dtype=np.uint8)
        _time_once(plan, buf, seed)  # compile
        while _time_once(plan, buf, seed) < min_seconds and rows < 1 << 20:
            rows *= 2
            buf = np.empty((rows, m), dtype=np.uint8)
        samples = []
        for rep in range(warmup + reps):
            dt = _time_once(plan, buf, seed + rep) / rows
            if rep >= warmup:
                samples.append(dt)
        medians.append(float(np.median(samples)))
        means.append(float(np.mean(samples)))
    slope, r2 = fit_loglog(dims, medians)
    return ScalingResult(alg, dims, medians, slope, r2, reps, means, derive, label)


CSV_COLUMNS = ("algorithm", "m", "median_seconds", "reps", "mean_seconds", "derive_seconds")


def emit_scaling_csv(result: ScalingResult, path) -> None:
    if result.dims.size == 0:
        raise ValueError("refusing to write an empty scaling table")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for k, m in enumerate(result.dims):
            writer.writerow(
                [
                    result.algorithm.value,
                    int(m),
                    repr(float(result.times[k])),
                    result.reps,
                    repr(float(result.mean_times[k])),
                    repr(float(result.derive_times[k])),
                ]
            )

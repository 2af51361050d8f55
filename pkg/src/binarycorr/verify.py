"""Ground truth for the generators.

``exact_oracle`` enumerates every joint outcome of a plan's auxiliary
Bernoulli variables and returns the exact law of X.  It is written with
vectorised numpy boolean algebra and shares nothing with the numba samplers
except the derived parameters, so it checks the constructions themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Algorithm,
    CorrelationSpec,
    DecayingProduct,
    Exchangeable,
    General,
    KDependent,
    MarginalVector,
    OneDependent,
    SampleMatrix,
)
from .generators import GenerationPlan, generate_from_plan, make_plan

ORACLE_MAX_VARS = 24
_CHUNK_BITS = 16


class OracleSizeError(ValueError):
    pass


class DegenerateColumnError(ValueError):
    def __init__(self, columns):
        self.columns = list(columns)
        shown = ", ".join(str(c + 1) for c in self.columns[:20])
        super().__init__(f"constant column(s) {shown}: correlation undefined")


def materialize_correlation(spec: CorrelationSpec, m: int) -> np.ndarray:
    spec.check_dimension(m)
    if isinstance(spec, General):
        return np.array(spec.r, dtype=float)
    r = np.eye(m)
    if isinstance(spec, Exchangeable):
        r[~np.eye(m, dtype=bool)] = spec.rho
        return r
    if isinstance(spec, DecayingProduct):
        for j in range(m):
            acc = 1.0
            for k in range(j + 1, m):
                acc *= spec.rho[k - 1]
                r[j, k] = r[k, j] = acc
        return r
    bands = spec.bands if isinstance(spec, KDependent) else [spec.rho]
    for lag, band in enumerate(bands, start=1):
        idx = np.arange(m - lag)
        r[idx, idx + lag] = band
        r[idx + lag, idx] = band
    return r


# ---------------------------------------------------------------------------
# Exact oracle


@dataclass(frozen=True, eq=False)
class ExactMoments:
    mean: np.ndarray
    corr: np.ndarray
    pmf: np.ndarray  # indexed by sum_i x_i 2**i

    def prob(self, outcome) -> float:
        code = sum(int(b) << i for i, b in enumerate(outcome))
        return float(self.pmf[code])


def _lattice(plan: GenerationPlan):
    """Probabilities of the auxiliary variables (draw order) and the map bits -> X."""
    prm, m = plan.params, plan.m
    alg = plan.algorithm

    if alg is Algorithm.EXCHANGEABLE:
        probs = [prm.gamma]
        for i in range(m):
            probs += [prm.alpha[i], prm.beta[i]]

        def build(b):
            z = b[:, 0]
            return np.stack([np.where(b[:, 1 + 2 * i], z, b[:, 2 + 2 * i]) for i in range(m)], 1)

    elif alg is Algorithm.DECAYING:
        probs = [plan.p.p[0]]
        for i in range(m - 1):
            probs += [prm.alpha[i], prm.beta[i]]

        def build(b):
            cols = [b[:, 0]]
            for i in range(1, m):
                cols.append(np.where(b[:, 2 * i - 1], cols[-1], b[:, 2 * i]))
            return np.stack(cols, 1)

    elif alg is Algorithm.ONE_DEP_M1:
        probs = []
        for i in range(m):
            probs += [prm.alpha[i], prm.beta[i + 1]]

        def build(b):
            u, y = b[:, 0::2], b[:, 1::2]
            y_prev = np.concatenate([np.ones((b.shape[0], 1), bool), y[:, :-1]], 1)
            return u & y & y_prev

    elif alg is Algorithm.ONE_DEP_M2:
        probs = [prm.p_max]
        for i in range(1, m):
            probs += [prm.r[i], prm.p_max]
        probs += list(prm.alpha)

        def build(b):
            y = [b[:, 0]] + [b[:, 2 * i] for i in range(1, m)]
            w = [y[0]] + [np.where(b[:, 2 * i - 1], y[i - 1], y[i]) for i in range(1, m)]
            a = b[:, 2 * m - 1 :]
            return a & np.stack(w, 1)

    else:
        k = prm.k
        probs = list(np.asarray(prm.beta).ravel()) + list(prm.alpha)

        def build(b):
            y = b[:, : k * m].reshape(-1, k, m)
            x = b[:, k * m :].copy()
            for i in range(m):
                for lag in range(1, k + 1):
                    x[:, i] &= y[:, lag - 1, i]
                    if i - lag >= 0:
                        x[:, i] &= y[:, lag - 1, i - lag]
            return x

    return np.asarray(probs, dtype=float), build


def lattice_size(plan: GenerationPlan) -> int:
    """Number of non-deterministic auxiliary variables the oracle must enumerate."""
    probs, _ = _lattice(plan)
    return int(np.count_nonzero((probs > 0.0) & (probs < 1.0)))


def exact_oracle(plan: GenerationPlan, max_vars: int = ORACLE_MAX_VARS) -> ExactMoments:
    """Exact pmf, mean and correlation of one row of ``plan``.

    Variables with probability exactly 0 or 1 are fixed rather than
    enumerated; their other branch has zero mass.
    """
    probs, build = _lattice(plan)
    m = plan.m
    free = np.flatnonzero((probs > 0.0) & (probs < 1.0))
    if free.size > max_vars:
        raise OracleSizeError(f"lattice of 2**{free.size} points exceeds the 2**{max_vars} cap")
    fixed = probs >= 1.0
    q_free = probs[free]
    total = 1 << free.size
    chunk = min(total, 1 << _CHUNK_BITS)
    shifts = np.arange(free.size, dtype=np.int64)
    weights_of_x = 1 << np.arange(m, dtype=np.int64)
    pmf = np.zeros(1 << m)
    for start in range(0, total, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        fbits = ((idx[:, None] >> shifts) & 1).astype(bool)
        w = np.prod(np.where(fbits, q_free, 1.0 - q_free), axis=1)
        bits = np.broadcast_to(fixed, (chunk, probs.size)).copy()
        bits[:, free] = fbits
        x = build(bits).astype(np.int64)
        pmf += np.bincount(x @ weights_of_x, weights=w, minlength=1 << m)
    return _moments_from_pmf(pmf, m)


def _moments_from_pmf(pmf: np.ndarray, m: int) -> ExactMoments:
    outcomes = ((np.arange(pmf.size)[:, None] >> np.arange(m)) & 1).astype(float)
    mean = pmf @ outcomes
    second = outcomes.T @ (outcomes * pmf[:, None])
    cov = second - np.outer(mean, mean)
    sd = np.sqrt(np.diag(cov))
    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return ExactMoments(mean, corr, pmf)


# ---------------------------------------------------------------------------
# Empirical moments


@dataclass(frozen=True)
class MomentErrors:
    mean_l2: float
    corr_frobenius: float
    n: int


def _data(samples) -> np.ndarray:
    return samples.data if isinstance(samples, SampleMatrix) else np.asarray(samples)


def empirical_moments(samples, chunk_rows: int = 1 << 16):
    """Sample mean and Pearson correlation of a 0/1 matrix."""
    data = _data(samples)
    n, m = data.shape
    if n < 2:
        raise ValueError("need at least two rows")
    counts = np.zeros(m)
    co = np.zeros((m, m))
    for start in range(0, n, chunk_rows):
        # float32 sums of 0/1 are exact below 2**24 rows per chunk
        block = data[start : start + chunk_rows].astype(np.float32)
        counts += block.sum(axis=0, dtype=np.float64)
        co += (block.T @ block).astype(np.float64)
    mean = counts / n
    var = mean * (1.0 - mean)
    constant = np.flatnonzero(var == 0.0)
    if constant.size:
        raise DegenerateColumnError(constant)
    cov = co / n - np.outer(mean, mean)
    sd = np.sqrt(var)
    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return mean, corr


def moment_errors(samples, p: MarginalVector, spec: CorrelationSpec) -> MomentErrors:
    data = _data(samples)
    mean, corr = empirical_moments(data)
    target = materialize_correlation(spec, p.m)
    return MomentErrors(
        float(np.linalg.norm(mean - p.p)),
        float(np.linalg.norm(corr - target, "fro")),
        int(data.shape[0]),
    )


def clt_envelopes(p: MarginalVector, n: int) -> tuple:
    """Root-mean-square scales of both errors for n iid rows.

    The mean envelope is exact; the correlation one gives each off-diagonal
    sample correlation unit asymptotic variance.
    """
    m = p.m
    return (
        float(np.sqrt(np.sum(p.p * (1 - p.p)) / n)),
        float(np.sqrt(m * (m - 1) / n)),
    )


# ---------------------------------------------------------------------------
# Convergence ladder

DEFAULT_LADDER = (10**3, 10**4, 10**5, 10**6)


@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    mean_l2: float
    corr_frobenius: float
    mean_envelope: float
    corr_envelope: float


def convergence_study(
    p: MarginalVector,
    spec: CorrelationSpec,
    algorithm=None,
    ladder=DEFAULT_LADDER,
    seeds=range(10),
) -> list:
    """Seed-averaged errors at each ladder size.

    Each seed draws ``max(ladder)`` rows once; smaller sizes use leading
    rows, which are themselves iid samples.
    """
    ladder = sorted(int(n) for n in ladder)
    plan = make_plan(p, spec, algorithm)
    target = materialize_correlation(spec, p.m)
    sums = np.zeros((len(ladder), 2))
    seeds = list(seeds)
    for seed in seeds:
        data = generate_from_plan(plan, ladder[-1], seed).data
        for k, n in enumerate(ladder):
            mean, corr = empirical_moments(data[:n])
            sums[k, 0] += np.linalg.norm(mean - p.p)
            sums[k, 1] += np.linalg.norm(corr - target, "fro")
    avg = sums / len(seeds)
    return [
        ConvergencePoint(n, float(avg[k, 0]), float(avg[k, 1]), *clt_envelopes(p, n))
        for k, n in enumerate(ladder)
    ]


def assess_convergence(points, envelope_factor: float = 5.0) -> dict:
    """PASS/FAIL for monotone decrease and final-envelope checks; SKIPPED when too short."""
    usable = [pt for pt in points if pt.n >= 1000]
    if len(usable) < 2:
        return {"decreasing": "SKIPPED", "envelope": "SKIPPED"}
    dec = all(
        b.mean_l2 < a.mean_l2 and b.corr_frobenius < a.corr_frobenius
        for a, b in zip(usable, usable[1:])
    )
    last = usable[-1]
    env = (
        last.mean_l2 < envelope_factor * last.mean_envelope
        and last.corr_frobenius < envelope_factor * last.corr_envelope
    )
    return {"decreasing": "PASS" if dec else "FAIL", "envelope": "PASS" if env else "FAIL"}

"""The five constructions, each split into a pure derivation and a sampler.

Draw order inside one row (every draw is one uniform from the row's stream):

* alg1: Z, then (U_i, Y_i) for i = 1..m                      -> 2m + 1 draws
* alg2: X_1, then (U_i, Y_i) for i = 2..m                    -> 2m - 1 draws
* alg3: (U_i, Y_i) for i = 1..m; Y_0 = 1 is not drawn        -> 2m draws
* alg4: Y_1, then (U_i, Y_i) for i = 2..m, then A_1..A_m     -> 3m - 1 draws
* alg5: Y_{lj} band by band (l = 1..K, j = 1..m), then U_1..U_m -> (K + 1) m draws
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .constraints import (
    FeasibilityError,
    FeasibilityReport,
    Verdict,
    Violation,
    _one_dep_hints,
    _r_recursion,
    alg4_rho_prime,
    check_prentice,
)
from .core import (
    EPS,
    Algorithm,
    CorrelationSpec,
    DecayingParams,
    DecayingProduct,
    DerivedParams,
    Exchangeable,
    ExchangeableParams,
    General,
    KDependent,
    KDepParams,
    MarginalVector,
    OneDepM1Params,
    OneDepM2Params,
    OneDependent,
    SampleMatrix,
    spec_digest,
)
from .rng import RandomStream, nb_child_seed, nb_uniform


def _inapplicable(alg: Algorithm, name: str, index: int, value: float, extra: str = ""):
    report = FeasibilityReport(
        Verdict.ALGORITHM_INAPPLICABLE,
        [Violation((index,), f"{name}[{index}]", float(value), (0.0, 1.0))],
        alg,
        f"{alg.value} is not applicable: {name}[{index}]={value:.6g} lies outside [0, 1]{extra}",
    )
    return FeasibilityError(report)


def _clamp_unit(values: np.ndarray, alg: Algorithm, name: str, first_index: int = 1) -> np.ndarray:
    """Snap values within EPS of [0, 1] onto it; raise on anything further out."""
    values = np.asarray(values, dtype=float)
    bad = np.flatnonzero(~((values >= -EPS) & (values <= 1.0 + EPS)))
    if bad.size:
        k = int(bad[0])
        raise _inapplicable(alg, name, k + first_index, values[k])
    out = np.clip(values, 0.0, 1.0)
    out.setflags(write=False)
    return out


def _require_prentice(p: MarginalVector, spec: CorrelationSpec, alg: Algorithm) -> None:
    report = check_prentice(p, spec)
    if not report.feasible:
        report.checked_algorithm = alg
        raise FeasibilityError(report)


# ---------------------------------------------------------------------------
# Derivations


def derive_exchangeable(p: MarginalVector, rho) -> ExchangeableParams:
    alg = Algorithm.EXCHANGEABLE
    spec = rho if isinstance(rho, Exchangeable) else Exchangeable(rho)
    _require_prentice(p, spec, alg)
    q = p.p
    lo, hi = p.p_min, p.p_max
    num = np.sqrt(lo * hi)
    gamma = float(num / (num + np.sqrt((1 - lo) * (1 - hi))))
    alpha = _clamp_unit(np.sqrt(spec.rho * q * (1 - q) / (gamma * (1 - gamma))), alg, "alpha")
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(np.abs(1.0 - alpha) <= EPS, 0.0, (q - alpha * gamma) / (1.0 - alpha))
    return ExchangeableParams(gamma, alpha, _clamp_unit(beta, alg, "beta"))


def derive_decaying(p: MarginalVector, rho) -> DecayingParams:
    alg = Algorithm.DECAYING
    spec = rho if isinstance(rho, DecayingProduct) else DecayingProduct(rho)
    _require_prentice(p, spec, alg)
    q = p.p
    var = q * (1 - q)
    alpha = _clamp_unit(spec.rho * np.sqrt(var[1:] / var[:-1]), alg, "alpha", first_index=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(
            np.abs(1.0 - alpha) <= EPS, 0.0, (q[1:] - alpha * q[:-1]) / (1.0 - alpha)
        )
    return DecayingParams(alpha, _clamp_unit(beta, alg, "beta", first_index=2))


def _one_dep_spec(rho) -> OneDependent:
    if isinstance(rho, OneDependent):
        return rho
    if isinstance(rho, KDependent) and rho.k == 1:
        return OneDependent(rho.bands[0])
    return OneDependent(rho)


def derive_one_dep_m1(p: MarginalVector, rho) -> OneDepM1Params:
    alg = Algorithm.ONE_DEP_M1
    spec = _one_dep_spec(rho)
    _require_prentice(p, spec, alg)
    q, m = p.p, p.m
    root = np.sqrt(q[:-1] * q[1:])
    inner = root / (root + spec.rho * np.sqrt((1 - q[:-1]) * (1 - q[1:])))
    beta = np.empty(m + 1)
    beta[0] = 1.0
    beta[1:m] = inner
    alpha = np.empty(m)
    alpha[: m - 1] = q[:-1] / (beta[1:m] * beta[: m - 1])
    tail = np.sqrt(q[-1] / beta[m - 1])
    alpha[m - 1] = tail
    beta[m] = tail
    alpha = _clamp_unit(alpha, alg, "alpha")
    beta = _clamp_unit(beta, alg, "beta", first_index=0)
    return OneDepM1Params(alpha, beta)


def derive_one_dep_m2(p: MarginalVector, rho) -> OneDepM2Params:
    alg = Algorithm.ONE_DEP_M2
    spec = _one_dep_spec(rho)
    _require_prentice(p, spec, alg)
    p_max = p.p_max
    alpha = p.p / p_max
    alpha.setflags(write=False)
    rho_prime = alg4_rho_prime(p, spec.rho)
    r, first_bad = _r_recursion(rho_prime, EPS)
    if first_bad:
        raise _inapplicable(alg, "r", int(first_bad), r[first_bad - 1])
    rho_prime.setflags(write=False)
    r.setflags(write=False)
    return OneDepM2Params(alpha, rho_prime, r, p_max)


def _bands_for(spec: CorrelationSpec, m: int) -> KDependent:
    if isinstance(spec, KDependent):
        return spec
    if isinstance(spec, General):
        return spec.to_bands()
    if isinstance(spec, OneDependent):
        return KDependent([spec.rho])
    if isinstance(spec, Exchangeable):
        return KDependent([np.full(m - i, spec.rho) for i in range(1, m)])
    if isinstance(spec, DecayingProduct):
        bands = [np.asarray(spec.rho, dtype=float)]
        for lag in range(2, m):
            bands.append(bands[-1][:-1] * spec.rho[lag - 1 :])
        return KDependent(bands)
    raise TypeError(f"unsupported correlation spec {type(spec).__name__}")


def derive_k_dep(p: MarginalVector, bands: CorrelationSpec) -> KDepParams:
    alg = Algorithm.K_DEP
    spec = _bands_for(bands, p.m)
    spec.check_dimension(p.m)
    _require_prentice(p, spec, alg)
    q, m, k = p.p, p.m, spec.k
    padded_p = np.concatenate([q, np.full(k, q[-1])])
    rho = np.zeros((k, m))
    for lag, band in enumerate(spec.bands, start=1):
        rho[lag - 1, : m - lag] = band
    lags = np.arange(1, k + 1)[:, None]
    cols = np.arange(m)[None, :]
    pj = q[None, :]
    pij = padded_p[cols + lags]
    prod = pj * pij
    beta = prod / (prod + rho * np.sqrt(prod * (1 - pj) * (1 - pij)))
    forward = beta.prod(axis=0)
    backward = np.ones(m)
    for lag in range(1, k + 1):
        backward[lag:] *= beta[lag - 1, : m - lag]
    alpha = _clamp_unit(q / (forward * backward), alg, "alpha")
    beta = _clamp_unit(beta, alg, "beta")
    k_prime = np.minimum(np.arange(m), k)
    k_prime.setflags(write=False)
    return KDepParams(alpha, beta, k_prime)


_DERIVE = {
    Algorithm.EXCHANGEABLE: derive_exchangeable,
    Algorithm.DECAYING: derive_decaying,
    Algorithm.ONE_DEP_M1: derive_one_dep_m1,
    Algorithm.ONE_DEP_M2: derive_one_dep_m2,
    Algorithm.K_DEP: derive_k_dep,
}

_COMPATIBLE = {
    Algorithm.EXCHANGEABLE: (Exchangeable,),
    Algorithm.DECAYING: (DecayingProduct,),
    Algorithm.ONE_DEP_M1: (OneDependent, KDependent),
    Algorithm.ONE_DEP_M2: (OneDependent, KDependent),
    Algorithm.K_DEP: (Exchangeable, DecayingProduct, OneDependent, KDependent, General),
}


def derive(p: MarginalVector, spec: CorrelationSpec, alg: Algorithm | str) -> DerivedParams:
    alg = Algorithm.parse(alg)
    spec.check_dimension(p.m)
    ok = isinstance(spec, _COMPATIBLE[alg])
    if isinstance(spec, KDependent) and alg in (Algorithm.ONE_DEP_M1, Algorithm.ONE_DEP_M2):
        ok = spec.k == 1
    if not ok:
        raise ValueError(f"{alg.value} cannot generate a {spec.kind} structure")
    return _DERIVE[alg](p, spec)


# ---------------------------------------------------------------------------
# Plans


@dataclass(frozen=True, eq=False)
class GenerationPlan:
    algorithm: Algorithm
    params: DerivedParams
    p: MarginalVector
    spec: CorrelationSpec

    @property
    def m(self) -> int:
        return self.p.m

    @property
    def draws_per_row(self) -> int:
        m = self.m
        return {
            Algorithm.EXCHANGEABLE: 2 * m + 1,
            Algorithm.DECAYING: 2 * m - 1,
            Algorithm.ONE_DEP_M1: 2 * m,
            Algorithm.ONE_DEP_M2: 3 * m - 1,
        }.get(self.algorithm, (getattr(self.params, "k", 0) + 1) * m)

    @property
    def digest(self) -> str:
        return spec_digest(self.p, self.spec, self.algorithm)


def dispatch_one_dep(p: MarginalVector, rho) -> GenerationPlan:
    """Prefer Algorithm 4; fall back to Algorithm 3; fail if neither applies."""
    spec = _one_dep_spec(rho)
    _require_prentice(p, spec, Algorithm.ONE_DEP_M2)
    try:
        return GenerationPlan(Algorithm.ONE_DEP_M2, derive_one_dep_m2(p, spec), p, spec)
    except FeasibilityError as exc4:
        first = exc4
    try:
        return GenerationPlan(Algorithm.ONE_DEP_M1, derive_one_dep_m1(p, spec), p, spec)
    except FeasibilityError as exc3:
        violations = first.report.violations + exc3.report.violations
        report = FeasibilityReport(
            Verdict.ALGORITHM_INAPPLICABLE,
            violations,
            None,
            f"neither 1-dependent construction applies ({first.report.notes}; {exc3.report.notes})",
            hints=_one_dep_hints(p),
        )
        raise FeasibilityError(report) from None


def make_plan(
    p: MarginalVector, spec: CorrelationSpec, algorithm: Algorithm | str | None = None
) -> GenerationPlan:
    """Derive parameters once; ``algorithm=None`` or ``"auto"`` picks one by structure."""
    spec.check_dimension(p.m)
    if algorithm is None or str(algorithm).lower() == "auto":
        if isinstance(spec, Exchangeable):
            algorithm = Algorithm.EXCHANGEABLE
        elif isinstance(spec, DecayingProduct):
            algorithm = Algorithm.DECAYING
        elif isinstance(spec, OneDependent):
            return dispatch_one_dep(p, spec)
        else:
            algorithm = Algorithm.K_DEP
    alg = Algorithm.parse(algorithm)
    return GenerationPlan(alg, derive(p, spec, alg), p, spec)


# ---------------------------------------------------------------------------
# Row kernels.  Common signature (a, b, s, state, out) -> state; ``out`` is
# also used as scratch where a construction needs per-coordinate memory.


@numba.njit(cache=True)
def _row_alg1(alpha, beta, gamma, state, out):
    state, u = nb_uniform(state)
    z = 1 if u < gamma else 0
    for i in range(out.size):
        state, u = nb_uniform(state)
        state, v = nb_uniform(state)
        if u < alpha[i]:
            out[i] = z
        else:
            out[i] = 1 if v < beta[i] else 0
    return state


@numba.njit(cache=True)
def _row_alg2(alpha, beta, p1, state, out):
    state, u = nb_uniform(state)
    prev = 1 if u < p1 else 0
    out[0] = prev
    for i in range(1, out.size):
        state, u = nb_uniform(state)
        state, v = nb_uniform(state)
        if not u < alpha[i - 1]:
            prev = 1 if v < beta[i - 1] else 0
        out[i] = prev
    return state


@numba.njit(cache=True)
def _row_alg3(alpha, beta, unused, state, out):
    y_prev = 1
    for i in range(out.size):
        state, u = nb_uniform(state)
        state, v = nb_uniform(state)
        y = 1 if v < beta[i + 1] else 0
        out[i] = 1 if (u < alpha[i] and y == 1 and y_prev == 1) else 0
        y_prev = y
    return state


@numba.njit(cache=True)
def _row_alg4(alpha, r, p_max, state, out):
    m = out.size
    state, v = nb_uniform(state)
    y_prev = 1 if v < p_max else 0
    out[0] = y_prev
    for i in range(1, m):
        state, u = nb_uniform(state)
        state, v = nb_uniform(state)
        y = 1 if v < p_max else 0
        out[i] = y_prev if u < r[i] else y
        y_prev = y
    for i in range(m):
        state, u = nb_uniform(state)
        if not u < alpha[i]:
            out[i] = 0
    return state


@numba.njit(cache=True)
def _row_alg5(alpha, beta_flat, k_float, state, out):
    m = out.size
    k = int(k_float)
    for j in range(m):
        out[j] = 1
    for lag in range(1, k + 1):
        base = (lag - 1) * m
        for j in range(m):
            state, v = nb_uniform(state)
            if not v < beta_flat[base + j]:
                out[j] = 0
                if j + lag < m:
                    out[j + lag] = 0
    for j in range(m):
        state, u = nb_uniform(state)
        if not u < alpha[j]:
            out[j] = 0
    return state


def _make_batch(row_fn, parallel: bool):
    loop = numba.prange if parallel else range

    @numba.njit(parallel=parallel)
    def batch(a, b, s, seed, row0, out):
        for r in loop(out.shape[0]):
            row_fn(a, b, s, nb_child_seed(seed, row0 + r), out[r])

    return batch


_ROW = {
    Algorithm.EXCHANGEABLE: _row_alg1,
    Algorithm.DECAYING: _row_alg2,
    Algorithm.ONE_DEP_M1: _row_alg3,
    Algorithm.ONE_DEP_M2: _row_alg4,
    Algorithm.K_DEP: _row_alg5,
}
_BATCH = {alg: (_make_batch(fn, False), _make_batch(fn, True)) for alg, fn in _ROW.items()}
_EMPTY = np.empty(0)


def kernel_args(plan: GenerationPlan):
    prm = plan.params
    alg = plan.algorithm
    if alg is Algorithm.EXCHANGEABLE:
        return prm.alpha, prm.beta, float(prm.gamma)
    if alg is Algorithm.DECAYING:
        return prm.alpha, prm.beta, float(plan.p.p[0])
    if alg is Algorithm.ONE_DEP_M1:
        return prm.alpha, prm.beta, 0.0
    if alg is Algorithm.ONE_DEP_M2:
        return prm.alpha, prm.r, float(prm.p_max)
    return prm.alpha, np.ascontiguousarray(prm.beta).ravel(), float(prm.k)


def sample_row(plan: GenerationPlan, stream: RandomStream) -> np.ndarray:
    """One row drawn from ``stream``, advancing it by ``plan.draws_per_row`` draws."""
    out = np.empty(plan.m, dtype=np.uint8)
    a, b, s = kernel_args(plan)
    stream.state = int(_ROW[plan.algorithm](a, b, s, np.uint64(stream.state), out))
    return out


def _sampler(alg: Algorithm):
    def sample(plan: GenerationPlan, stream: RandomStream) -> np.ndarray:
        if plan.algorithm is not alg:
            raise ValueError(f"plan uses {plan.algorithm.value}, expected {alg.value}")
        return sample_row(plan, stream)

    sample.__name__ = f"sample_{alg.name.lower()}"
    return sample


sample_exchangeable = _sampler(Algorithm.EXCHANGEABLE)
sample_decaying = _sampler(Algorithm.DECAYING)
sample_one_dep_m1 = _sampler(Algorithm.ONE_DEP_M1)
sample_one_dep_m2 = _sampler(Algorithm.ONE_DEP_M2)
sample_k_dep = _sampler(Algorithm.K_DEP)


def fill_rows(plan: GenerationPlan, seed: int, out: np.ndarray, row0: int = 0, parallel: bool = True) -> None:
    """Write rows ``row0 .. row0 + len(out) - 1`` of the run with ``seed`` into ``out``."""
    a, b, s = kernel_args(plan)
    _BATCH[plan.algorithm][1 if parallel else 0](a, b, s, np.uint64(seed), np.int64(row0), out)


def generate_from_plan(plan: GenerationPlan, n: int, seed: int = 0, parallel: bool = True) -> SampleMatrix:
    if int(n) < 1:
        raise ValueError("n must be at least 1")
    data = np.empty((int(n), plan.m), dtype=np.uint8)
    fill_rows(plan, int(seed), data, 0, parallel)
    return SampleMatrix(data, int(seed), plan.digest, plan.algorithm)


def generate(
    p: MarginalVector,
    spec: CorrelationSpec,
    n: int,
    seed: int | RandomStream = 0,
    algorithm: Algorithm | str | None = None,
    parallel: bool = True,
) -> SampleMatrix:
    """Derive once, then draw ``n`` independent rows (row r uses ``child_seed(seed, r)``).

    Feasibility errors surface before any randomness is consumed.
    """
    if int(n) < 1:
        raise ValueError("n must be at least 1")
    if isinstance(seed, RandomStream):
        seed = seed.seed
    plan = make_plan(p, spec, algorithm)
    return generate_from_plan(plan, n, seed, parallel)

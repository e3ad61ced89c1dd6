"""Exact finite-alphabet probability and information kernels.

All information quantities are in nats.  Pmfs are computed through
log-gamma accumulation so they stay stable up to ~10^4 trials and
population sizes around 10^6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .channels import Channel
from .errors import DomainError, ParameterError

_SUM_TOL = 1e-12


class Distribution:
    """Finite pmf on a contiguous integer support starting at `offset`."""

    __slots__ = ("offset", "probs")

    def __init__(self, probs, offset: int = 0):
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ParameterError("probs must be a nonempty 1-D array")
        if np.any(arr < 0):
            raise ParameterError("probabilities must be nonnegative")
        total = arr.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise ParameterError(f"probabilities sum to {total!r}, not 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "offset", int(offset))

    def __setattr__(self, name, value):
        raise AttributeError("Distribution is immutable")

    def __len__(self) -> int:
        return len(self.probs)

    def support(self) -> range:
        return range(self.offset, self.offset + len(self.probs))

    def prob(self, value: int) -> float:
        i = value - self.offset
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        return 0.0

    @classmethod
    def point_mass(cls, value: int) -> "Distribution":
        return cls([1.0], offset=value)

    @classmethod
    def bernoulli(cls, q: float) -> "Distribution":
        if not 0 <= q <= 1:
            raise ParameterError(f"Bernoulli parameter must be in [0,1], got {q}")
        return cls([1.0 - q, q], offset=0)

    def __repr__(self) -> str:
        return f"Distribution(offset={self.offset}, probs={self.probs!r})"


@dataclass(frozen=True)
class BinomialSpec:
    trials: int
    success_prob: float

    def __post_init__(self):
        if self.trials < 0:
            raise ParameterError("trials must be nonnegative")
        if not 0 <= self.success_prob <= 1:
            raise ParameterError("success probability must be in [0, 1]")


@dataclass(frozen=True)
class HypergeometricSpec:
    draws: int
    specials: int
    population: int

    def __post_init__(self):
        if min(self.draws, self.specials, self.population) < 0:
            raise DomainError("hypergeometric parameters must be nonnegative")
        if self.specials > self.population or self.draws > self.population:
            raise DomainError(
                f"infeasible hypergeometric spec: draws={self.draws}, "
                f"specials={self.specials}, population={self.population}"
            )


def log_binom(n: int, k: int) -> float:
    """log C(n, k) via log-gamma; -inf for infeasible (n, k)."""
    if k < 0 or k > n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def binomial_pmf(spec: BinomialSpec) -> Distribution:
    n, q = spec.trials, spec.success_prob
    if n == 0:
        return Distribution.point_mass(0)
    i = np.arange(n + 1)
    logc = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
    with np.errstate(divide="ignore"):
        logpmf = logc + xlogy(i, q) + xlogy(n - i, 1.0 - q)
    pmf = np.exp(logpmf)
    pmf /= pmf.sum()
    return Distribution(pmf, offset=0)


def hypergeometric_pmf(spec: HypergeometricSpec) -> Distribution:
    k, m, p = spec.draws, spec.specials, spec.population
    lo = max(0, k + m - p)
    hi = min(k, m)
    i = np.arange(lo, hi + 1)
    logpmf = (
        gammaln(m + 1)
        - gammaln(i + 1)
        - gammaln(m - i + 1)
        + gammaln(p - m + 1)
        - gammaln(k - i + 1)
        - gammaln(p - m - k + i + 1)
        - log_binom(p, k)
    )
    pmf = np.exp(logpmf)
    pmf /= pmf.sum()
    return Distribution(pmf, offset=lo)


def _aligned(P: Distribution, Q: Distribution) -> tuple[np.ndarray, np.ndarray]:
    lo = min(P.offset, Q.offset)
    hi = max(P.offset + len(P), Q.offset + len(Q))
    a = np.zeros(hi - lo)
    b = np.zeros(hi - lo)
    a[P.offset - lo : P.offset - lo + len(P)] = P.probs
    b[Q.offset - lo : Q.offset - lo + len(Q)] = Q.probs
    return a, b


def tv_distance(P: Distribution, Q: Distribution) -> float:
    """(1/2) sum_i |P(i) - Q(i)|, with missing mass treated as zero."""
    a, b = _aligned(P, Q)
    return float(0.5 * np.abs(a - b).sum())


def entropy(P: Distribution) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    return float(-xlogy(P.probs, P.probs).sum())


def kl_divergence(P: Distribution, Q: Distribution) -> float:
    """sum P log(P/Q) in nats; +inf if Q misses mass where P has some."""
    a, b = _aligned(P, Q)
    mask = a > 0
    if np.any(b[mask] == 0):
        return math.inf
    return float(np.sum(a[mask] * np.log(a[mask] / b[mask])))


def binary_entropy(q) -> float | np.ndarray:
    """H2(q) in nats, elementwise."""
    q = np.asarray(q, dtype=float)
    out = -(xlogy(q, q) + xlogy(1.0 - q, 1.0 - q))
    if out.ndim == 0:
        return float(out)
    return out


def conditional_mi(
    channel: Channel,
    ell: int,
    dif_dist: Distribution,
    eq_dist: Distribution,
) -> float:
    """Exact I(V_dif; Y | V_eq) by dense summation.

    Y given (v_dif, v_eq) follows the channel at v = v_dif + v_eq, and
    V_dif, V_eq are independent.
    """
    if not 1 <= ell <= channel.k:
        raise DomainError(f"ell must be in 1..{channel.k}, got {ell}")
    max_sum = (dif_dist.offset + len(dif_dist) - 1) + (eq_dist.offset + len(eq_dist) - 1)
    if dif_dist.offset < 0 or eq_dist.offset < 0 or max_sum > channel.k:
        raise DomainError(
            f"support overflow: v_dif + v_eq can reach {max_sum} > k={channel.k}"
        )
    q = channel.prob_one_array()
    dif_vals = np.arange(dif_dist.offset, dif_dist.offset + len(dif_dist))
    total = 0.0
    for v_eq, w in zip(eq_dist.support(), eq_dist.probs):
        if w == 0.0:
            continue
        p1 = q[dif_vals + v_eq]
        py1 = float(dif_dist.probs @ p1)
        mi = binary_entropy(py1) - float(dif_dist.probs @ binary_entropy(p1))
        total += w * mi
    return max(0.0, total)


def conditional_mi_bernoulli_design(channel: Channel, ell: int, nu: float) -> float:
    """I(X_dif; Y | X_eq) under an i.i.d. Bernoulli(nu/k) design."""
    k = channel.k
    if not 0 <= nu <= k:
        raise ParameterError(f"nu must be in [0, k={k}], got {nu}")
    if not 1 <= ell <= k:
        raise DomainError(f"ell must be in 1..{k}, got {ell}")
    dif = binomial_pmf(BinomialSpec(ell, nu / k))
    eq = binomial_pmf(BinomialSpec(k - ell, nu / k))
    return conditional_mi(channel, ell, dif, eq)

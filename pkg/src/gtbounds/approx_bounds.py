"""Approximation bounds behind the weak converse: hypergeometric-to-binomial
total-variation bounds, the binomial-comparison bound, and continuity bounds
for mutual information under TV perturbations, each paired with exact
computations so they can be verified numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DomainError, ParameterError
from .infomath import (
    BinomialSpec,
    HypergeometricSpec,
    binary_entropy,
    binomial_pmf,
    hypergeometric_pmf,
    tv_distance,
)
from .rng import substream

# Constant in the binomial-comparison bound: (2*pi)^(1/4) * e^(1/24) / sqrt(2).
ROOS_C = (2.0 * math.pi) ** 0.25 * math.exp(1.0 / 24.0) / math.sqrt(2.0)


@dataclass(frozen=True)
class TvBoundReport:
    step: str
    exact_tv: float
    bound: float
    params: dict
    satisfied: bool

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RoosParams:
    delta_gap: float
    ell: int
    eta_roos: float
    c_const: float

    @classmethod
    def make(cls, ell: int, delta_gap: float) -> "RoosParams":
        return cls(
            delta_gap=delta_gap,
            ell=ell,
            eta_roos=delta_gap**2 * ell * (ell + 2),
            c_const=ROOS_C,
        )


def soon_bound_eq(k: int, ell: int, p: int) -> float:
    """TV bound between Hg(k-l, m, p) and Bin(k-l, m/p): (k-l-1)/(p-1)."""
    if not 1 <= ell <= k < p:
        raise DomainError(f"need 1 <= ell <= k < p, got ell={ell}, k={k}, p={p}")
    return max(0.0, (k - ell - 1) / (p - 1))


def soon_bound_dif(ell: int, k: int, p: int) -> float:
    """TV bound for the conditional draw: (l-1)/(p-k+l-1)."""
    if not 1 <= ell <= k < p:
        raise DomainError(f"need 1 <= ell <= k < p, got ell={ell}, k={k}, p={p}")
    if p - k + ell < 2:
        raise DomainError("population after revealing must be at least 2")
    return max(0.0, (ell - 1) / (p - k + ell - 1))


def roos_bound(ell: int, delta_gap: float) -> float:
    """TV bound between Bin(l, q) and Bin(l, q + delta_gap), clamped at 1."""
    if ell < 1:
        raise DomainError(f"ell must be >= 1, got {ell}")
    params = RoosParams.make(ell, delta_gap)
    eta = params.eta_roos
    if eta >= 1.0:
        # The unclamped expression already exceeds 1 here (and would
        # overflow for large eta), so return the trivial bound directly.
        return 1.0
    raw = ROOS_C * math.sqrt(eta) * (1.0 + math.sqrt(2.0 * eta)) * math.exp(2.0 * eta)
    return min(1.0, raw)


def verify_tv_chain(p: int, k: int, ell: int, m: int, v_eq: int) -> list[TvBoundReport]:
    """Exact TV distances for the three binomial-approximation steps,
    paired with their closed-form bounds."""
    if not 1 <= ell <= k < p:
        raise DomainError(f"need 1 <= ell <= k < p, got ell={ell}, k={k}, p={p}")
    if not 0 <= m <= p:
        raise DomainError(f"row weight m={m} outside 0..{p}")
    if not 0 <= v_eq <= min(k - ell, m):
        raise DomainError(f"v_eq={v_eq} outside 0..min(k-ell, m)")
    if m - v_eq > p - k + ell:
        raise DomainError("remaining ones exceed remaining population")

    reports = []
    base = {"p": p, "k": k, "ell": ell, "m": m, "v_eq": v_eq}

    hg_eq = hypergeometric_pmf(HypergeometricSpec(k - ell, m, p))
    bin_eq = binomial_pmf(BinomialSpec(k - ell, m / p))
    tv1 = tv_distance(hg_eq, bin_eq)
    b1 = soon_bound_eq(k, ell, p)
    reports.append(
        TvBoundReport("eq_hypergeometric_vs_binomial", tv1, b1, base, tv1 <= b1 + 1e-12)
    )

    q_cond = (m - v_eq) / (p - k + ell)
    hg_dif = hypergeometric_pmf(HypergeometricSpec(ell, m - v_eq, p - k + ell))
    bin_dif = binomial_pmf(BinomialSpec(ell, q_cond))
    tv2 = tv_distance(hg_dif, bin_dif)
    b2 = soon_bound_dif(ell, k, p)
    reports.append(
        TvBoundReport("dif_hypergeometric_vs_binomial", tv2, b2, base, tv2 <= b2 + 1e-12)
    )

    delta_gap = m / p - q_cond
    bin_uncond = binomial_pmf(BinomialSpec(ell, m / p))
    tv3 = tv_distance(bin_dif, bin_uncond)
    b3 = roos_bound(ell, delta_gap)
    reports.append(
        TvBoundReport(
            "dif_conditional_vs_unconditional_binomial",
            tv3,
            b3,
            {**base, "delta_gap": delta_gap},
            tv3 <= b3 + 1e-12,
        )
    )
    return reports


def run_tv_grid(
    ps=(50, 100, 500), ks=range(2, 11), m_fractions=(0, 4, 2)
) -> list[TvBoundReport]:
    """Full verification grid; m values are 0, p//4, p//2 by default."""
    reports = []
    for p in ps:
        ms = sorted({0 if f == 0 else p // f for f in m_fractions})
        for k in ks:
            for ell in range(1, k + 1):
                for m in ms:
                    for v_eq in range(0, min(k - ell, m) + 1):
                        reports.extend(verify_tv_chain(p, k, ell, m, v_eq))
    return reports


def mi_perturb_bound_eq(delta1: float) -> float:
    """Bound on the conditional-MI change from swapping the conditioning law."""
    if not 0 <= delta1 <= 1:
        raise ParameterError(f"delta1 must be in [0,1], got {delta1}")
    return delta1 * math.log(2.0)


def mi_perturb_bound_dif(delta2: float) -> float:
    """Bound on the MI change from a TV perturbation of the input law."""
    if not 0 <= delta2 <= 1:
        raise ParameterError(f"delta2 must be in [0,1], got {delta2}")
    if delta2 == 0:
        return 0.0
    return delta2 * math.log(4.0 / delta2)


def _mi_binary_output(px: np.ndarray, w: np.ndarray) -> float:
    """I(X;Y) for input pmf px and binary channel P(Y=1|x) = w[x]."""
    py1 = float(px @ w)
    return float(binary_entropy(py1) - px @ binary_entropy(w))


@dataclass(frozen=True)
class MiContinuityReport:
    trials: int
    seed: int
    checks: int
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "checks": self.checks,
            "passed": self.passed,
            "violations": self.violations,
        }


def verify_mi_continuity(trials: int, seed: int) -> MiContinuityReport:
    """Randomized check of the MI/entropy continuity inequalities.

    Per trial: random input pmfs P, Q on a common alphabet and a random
    binary-output channel W.  Checks the delta*log(4/delta) MI bound, the
    data-processing contraction of TV, and the log(2)-scaled bound for
    swapping the conditioning marginal of a conditional MI.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    tol = 1e-12
    violations = []
    checks = 0
    for t in range(trials):
        rng = substream(seed, t)
        a = int(rng.integers(2, 12))
        px = rng.dirichlet(np.ones(a))
        qx = rng.dirichlet(np.ones(a))
        w = rng.random(a)
        i_p = _mi_binary_output(px, w)
        i_q = _mi_binary_output(qx, w)
        dtv = 0.5 * float(np.abs(px - qx).sum())
        bound = dtv * math.log(4.0 / dtv) if dtv > 0 else 0.0
        checks += 1
        if abs(i_p - i_q) > bound + tol:
            violations.append(
                {"trial": t, "check": "mi_tv_bound", "diff": abs(i_p - i_q), "bound": bound}
            )
        # Data processing: TV of output marginals never exceeds TV of inputs.
        out_tv = abs(float(px @ w) - float(qx @ w))
        checks += 1
        if out_tv > dtv + tol:
            violations.append(
                {"trial": t, "check": "tv_data_processing", "diff": out_tv, "bound": dtv}
            )
        # Conditioning-marginal swap: per-condition MIs are in [0, log 2].
        b = int(rng.integers(2, 8))
        pa = rng.dirichlet(np.ones(b))
        pa2 = rng.dirichlet(np.ones(b))
        pd = rng.dirichlet(np.ones(3))
        wa = rng.random((b, 3))
        mis = np.array([_mi_binary_output(pd, wa[j]) for j in range(b)])
        diff = abs(float(pa @ mis) - float(pa2 @ mis))
        tv_a = 0.5 * float(np.abs(pa - pa2).sum())
        checks += 1
        if diff > tv_a * math.log(2.0) + tol:
            violations.append(
                {
                    "trial": t,
                    "check": "conditional_marginal_swap",
                    "diff": diff,
                    "bound": tv_a * math.log(2.0),
                }
            )
    return MiContinuityReport(trials=trials, seed=seed, checks=checks, violations=violations)

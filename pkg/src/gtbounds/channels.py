"""Observation models: the channel from the defective count in a test to
the binary test outcome, for the standard noise families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

VARIANTS = ("noiseless", "symmetric", "zchannel", "zchannel-mirrored", "dilution")


@dataclass(frozen=True)
class NoiseModelSpec:
    """Named noise family plus its parameter (None for noiseless)."""

    variant: str
    parameter: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown noise model {self.variant!r}")
        if self.variant == "noiseless":
            if self.parameter is not None:
                raise ParameterError("noiseless model takes no parameter")
            return
        rho = self.parameter
        if rho is None:
            raise ParameterError(f"{self.variant} requires a parameter")
        if self.variant == "symmetric" and not 0 <= rho < 0.5:
            raise ParameterError(f"symmetric crossover must be in [0, 0.5), got {rho}")
        if self.variant in ("zchannel", "zchannel-mirrored") and not 0 <= rho < 1:
            raise ParameterError(f"z-channel crossover must be in [0, 1), got {rho}")
        if self.variant == "dilution" and not 0 <= rho < 1:
            raise ParameterError(f"dilution probability must be in [0, 1), got {rho}")

    @classmethod
    def from_string(cls, text: str) -> "NoiseModelSpec":
        """Parse "noiseless", "symmetric:0.11", "zchannel:0.11", "dilution:0.5"."""
        name, sep, param = text.partition(":")
        name = name.strip()
        if not sep:
            return cls(name, None)
        try:
            value = float(param)
        except ValueError:
            raise ParameterError(f"bad parameter in channel spec {text!r}") from None
        return cls(name, value)

    def __str__(self) -> str:
        if self.parameter is None:
            return self.variant
        return f"{self.variant}:{self.parameter:g}"


@dataclass(frozen=True)
class Channel:
    """Conditional law P(Y=1 | V=v) for v = 0..k, stored as a dense table."""

    k: int
    table: tuple[float, ...]

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"defective-set size must be >= 1, got {self.k}")
        if len(self.table) != self.k + 1:
            raise ParameterError(
                f"table must have k+1={self.k + 1} entries, got {len(self.table)}"
            )
        if any(not 0 <= q <= 1 for q in self.table):
            raise ParameterError("channel table entries must lie in [0, 1]")

    def prob_one(self, v: int) -> float:
        """P(Y = 1 | V = v)."""
        if not 0 <= v <= self.k:
            raise DomainError(f"defective count {v} outside 0..{self.k}")
        return self.table[v]

    def row(self, v: int) -> np.ndarray:
        """Output pmf (P(Y=0|v), P(Y=1|v))."""
        q = self.prob_one(v)
        return np.array([1.0 - q, q])

    def prob_one_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=float)


def make_channel(spec: NoiseModelSpec, k: int) -> Channel:
    """Build the P(Y|V) table for a noise family at defective-set size k."""
    if k < 1:
        raise DomainError(f"defective-set size must be >= 1, got {k}")
    rho = spec.parameter
    if spec.variant == "noiseless":
        table = [0.0] + [1.0] * k
    elif spec.variant == "symmetric":
        table = [rho] + [1.0 - rho] * k
    elif spec.variant == "zchannel":
        # The 1-output is flipped to 0 with probability rho; 0 is never flipped.
        table = [0.0] + [1.0 - rho] * k
    elif spec.variant == "zchannel-mirrored":
        table = [rho] + [1.0] * k
    elif spec.variant == "dilution":
        # Each defective is independently diluted (erased) with probability rho.
        table = [1.0 - rho**v for v in range(k + 1)]
    else:  # pragma: no cover - rejected in NoiseModelSpec
        raise ParameterError(f"unknown noise model {spec.variant!r}")
    return Channel(k=k, table=tuple(table))


def sample_output(channel: Channel, v: int, rng: np.random.Generator) -> int:
    """Draw one test outcome given the defective count v."""
    q = channel.prob_one(v)
    return int(rng.random() < q)

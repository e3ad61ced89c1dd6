import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gtbounds.channels import Channel, NoiseModelSpec, make_channel, sample_output
from gtbounds.errors import DomainError, ParameterError
from gtbounds.rng import substream


def test_noiseless_table():
    ch = make_channel(NoiseModelSpec("noiseless"), 2)
    assert ch.table == (0.0, 1.0, 1.0)


def test_symmetric_table():
    ch = make_channel(NoiseModelSpec("symmetric", 0.11), 1)
    assert ch.table == (0.11, 0.89)


def test_zchannel_table():
    ch = make_channel(NoiseModelSpec("zchannel", 0.11), 3)
    assert ch.table == (0.0, 0.89, 0.89, 0.89)


def dilution_oracle(q, v):
    # Brute force over the 2^v erasure patterns: output 1 iff any defective
    # survives dilution.
    total = 0.0
    for pattern in itertools.product([0, 1], repeat=v):
        prob = 1.0
        for erased in pattern:
            prob *= q if erased else (1 - q)
        if any(x == 0 for x in pattern):
            total += prob
    return total


def test_dilution_against_erasure_enumeration():
    ch = make_channel(NoiseModelSpec("dilution", 0.5), 2)
    assert ch.table == (0.0, 0.5, 0.75)
    ch = make_channel(NoiseModelSpec("dilution", 0.3), 4)
    for v in range(5):
        assert ch.table[v] == pytest.approx(dilution_oracle(0.3, v), abs=1e-12)


@pytest.mark.parametrize(
    "variant,param",
    [("symmetric", 0.5), ("symmetric", -0.1), ("zchannel", 1.0), ("dilution", 1.0)],
)
def test_parameter_ranges_rejected(variant, param):
    with pytest.raises(ParameterError):
        NoiseModelSpec(variant, param)


def test_k_zero_rejected():
    with pytest.raises(DomainError):
        make_channel(NoiseModelSpec("noiseless"), 0)


def test_spec_string_roundtrip():
    for text in ["noiseless", "symmetric:0.11", "zchannel:0.11", "dilution:0.5"]:
        spec = NoiseModelSpec.from_string(text)
        assert str(spec) == text
    with pytest.raises(ParameterError):
        NoiseModelSpec.from_string("symmetric:oops")
    with pytest.raises(ParameterError):
        NoiseModelSpec.from_string("nonsense")


@given(q=st.floats(0.0, 0.99), k=st.integers(1, 8))
def test_dilution_monotone_in_v(q, k):
    ch = make_channel(NoiseModelSpec("dilution", q), k)
    assert all(a <= b for a, b in zip(ch.table, ch.table[1:]))
    assert all(0 <= x <= 1 for x in ch.table)


@given(rho=st.floats(0.0, 0.49), k=st.integers(1, 8))
def test_symmetric_consistency(rho, k):
    ch = make_channel(NoiseModelSpec("symmetric", rho), k)
    assert ch.table[0] + ch.table[1] == pytest.approx(1.0)
    assert len(set(ch.table[1:])) == 1


def test_sample_output_deterministic_extremes():
    ch = make_channel(NoiseModelSpec("noiseless"), 2)
    rng = substream(123, 0)
    assert sample_output(ch, 0, rng) == 0
    assert sample_output(ch, 2, rng) == 1
    with pytest.raises(DomainError):
        sample_output(ch, 3, rng)


def test_sample_output_frequency():
    ch = make_channel(NoiseModelSpec("symmetric", 0.11), 1)
    rng = substream(7, 0)
    draws = 10**5
    hits = sum(sample_output(ch, 1, rng) for _ in range(draws))
    se = np.sqrt(0.89 * 0.11 / draws)
    assert abs(hits / draws - 0.89) < 4 * se


def test_channel_invariants_enforced():
    with pytest.raises(ParameterError):
        Channel(k=1, table=(0.0, 1.5))
    with pytest.raises(ParameterError):
        Channel(k=2, table=(0.0, 1.0))

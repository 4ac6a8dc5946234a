"""Deterministic seeding.

Every random stream in the package is drawn from numpy's ``Philox`` bit
generator (Philox-4x64-10, counter based) keyed directly with a 64-bit
integer; the counter starts at zero. Gaussian variates come from
``Generator.standard_normal`` (numpy's ziggurat). The ziggurat uses
rejection, so bitwise identity of streams holds per numpy implementation
of that sampler, not across arbitrary libraries.

Per-run seeds of an ensemble are derived as::

    stream_seed(base, run, stream) = base XOR splitmix64((run << 8) | tag)

with ``tag`` = 1 for the input stream and 2 for the noise stream, so each
stream depends only on ``(base, run, stream)``.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
STREAM_TAGS = {"input": 1, "noise": 2}


def splitmix64(value):
    """One output of the SplitMix64 finalizer for the given 64-bit state."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream_seed(base_seed, run, stream):
    base_seed = check_seed(base_seed)
    try:
        tag = STREAM_TAGS[stream]
    except KeyError:
        raise ValueError(f"unknown stream {stream!r}") from None
    return base_seed ^ splitmix64(((int(run) << 8) | tag) & _MASK64)


def make_generator(seed):
    """Return a ``numpy.random.Generator`` over Philox keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=check_seed(seed)))

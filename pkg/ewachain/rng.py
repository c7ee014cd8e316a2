"""
rng.py

Seedable, splittable random streams. Every stochastic operation in the package takes an
explicit `numpy.random.Generator`; these helpers build them on the counter-based Philox
bit generator so that runs are bit-reproducible for a given seed.
"""
import numpy as np


def make_rng(seed):
    """A Philox-backed generator for `seed` (an int or a `SeedSequence`)."""
    return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed, count):
    """`count` statistically independent generators derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]

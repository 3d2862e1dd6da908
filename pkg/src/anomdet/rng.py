"""Deterministic random streams.

Every stochastic consumer (weight init, shuffling, noise injection,
synthetic rendering, z sampling) pulls its own stream derived from one
root seed, so adding a consumer never perturbs the draws of another.
Derivation is splitmix64 over the root seed mixed with an FNV-1a hash
of the stream label.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _fnv1a(label: str) -> int:
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(root_seed: int, label: str) -> int:
    """64-bit seed for the stream `label`, stable in root_seed and label."""
    return _splitmix64((root_seed & _MASK64) ^ _fnv1a(label))


def stream(root_seed: int, label: str) -> np.random.Generator:
    """Independent generator for one named consumer."""
    return np.random.Generator(np.random.PCG64(derive_seed(root_seed, label)))

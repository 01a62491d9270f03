"""Deterministic 64-bit seed derivation.

Every random decision in the package is keyed by a seed derived with
``derive_seed`` from a master seed plus integer indices (config index,
repetition index, snapshot epoch, ...). The mixing function is the
splitmix64 finalizer, so the derivation is reproducible from this file
alone and results are independent of worker count or scheduling order.
"""

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step: golden-ratio increment, then finalize."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(*components: int) -> int:
    """Fold integer components into one 64-bit seed.

    ``derive_seed(master, i, j)`` with distinct index tuples yields
    statistically independent seeds; the fold is order-sensitive.
    """
    state = 0
    for c in components:
        state = splitmix64(state ^ (int(c) & _MASK64))
    return state

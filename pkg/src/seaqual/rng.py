"""Deterministic seed derivation.

Every stochastic component (tree bootstraps, per-run experiment seeds,
per-station synthesis) receives its own derived seed so that work units
can run in any order, or in parallel, without changing results.

Derivation is a splitmix64 step: the master seed is advanced by
``(index + 1)`` times the golden-ratio increment and the resulting state
is passed through the splitmix64 output mix.  The forest kernels
(see forest.py) inline the same mix in compiled code; ``test_rng.py``
pins both against each other.
"""

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state once; return (new_state, output)."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def derive_seed(master: int, index: int) -> int:
    """Derive the seed of sub-stream ``index`` from ``master``.

    Independent of how many other sub-streams exist and of the order in
    which they are derived.
    """
    if index < 0:
        raise ValueError(f"stream index must be non-negative, got {index}")
    state = (master + index * GOLDEN_GAMMA) & MASK64
    _, out = splitmix64(state)
    return out

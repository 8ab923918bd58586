"""Counter-based uniform generator.

Each uniform is a pure function of (master seed, trial index, counter):
the SplitMix64 output function applied to a per-trial key advanced by the
counter.  Nothing is stateful, so any subset of draws can be produced in
any order, on any thread, with identical results.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TRIAL_SALT = np.uint64(0xD1B54A32D192ED03)
_U53 = 1.0 / (1 << 53)
MASK64 = (1 << 64) - 1


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def trial_keys(seed: int, trials) -> np.ndarray:
    """64-bit stream key for each trial index."""
    seed = np.uint64(int(seed) & MASK64)
    t = np.asarray(trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix64(np.asarray(seed ^ _GOLDEN, dtype=np.uint64))
        return _mix64(_mix64(base + t * _TRIAL_SALT) ^ base)


def uniform(seed: int, trials, counters) -> np.ndarray:
    """U[0, 1) doubles for broadcast arrays of trial indices and counters."""
    keys = trial_keys(seed, trials)
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = _mix64(keys + (c + np.uint64(1)) * _GOLDEN)
    return (x >> np.uint64(11)).astype(np.float64) * _U53


def uniform_block(seed: int, trial_start: int, n_trials: int, counter_start: int,
                  n_counters: int) -> np.ndarray:
    """(n_trials, n_counters) array of uniforms for a rectangular block."""
    t = np.arange(trial_start, trial_start + n_trials, dtype=np.uint64)[:, None]
    c = np.arange(counter_start, counter_start + n_counters, dtype=np.uint64)[None, :]
    return uniform(seed, t, c)

"""Built-in demonstration instances used by the CLI and the test suite."""

from __future__ import annotations

import numpy as np

from .chain_core import TransitionMatrix, validate_transition_matrix

# 4-state pair-hopping chain: irreducible with uniform invariant law, yet
# its absolute spectral gap is exactly 0 (two unit singular values), while
# the symmetric and iterated Poincare gaps stay positive.
ZERO_ABSOLUTE_GAP_ROWS = [
    [0.5, 0.5, 0.0, 0.0],
    [0.0, 0.0, 0.5, 0.5],
    [0.5, 0.5, 0.0, 0.0],
    [0.0, 0.0, 0.5, 0.5],
]

# deterministic 2-state alternator: IP gap 2 (the cap), absolute gap 0,
# and every truncation of the pseudo gap is 0
FLIP_ROWS = [[0.0, 1.0], [1.0, 0.0]]

# skew-symmetric matrix whose real numerical radius is 0 while the radius
# of its square is 1: the numerical-radius power inequality fails over the
# reals (it holds over the complex field)
SKEW_ROWS = [[0.0, 1.0], [-1.0, 0.0]]


def zero_absolute_gap_chain() -> TransitionMatrix:
    return validate_transition_matrix(ZERO_ABSOLUTE_GAP_ROWS)


def flip_chain() -> TransitionMatrix:
    return validate_transition_matrix(FLIP_ROWS)


def skew_matrix() -> np.ndarray:
    return np.asarray(SKEW_ROWS, dtype=float)

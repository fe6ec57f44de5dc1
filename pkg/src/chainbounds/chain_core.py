"""Validated Markov chain primitives.

Transition matrices, generator (rate) matrices, probability distributions
and bounded observables over a finite labelled state space, together with
stationary-distribution, time-reversal and density-norm computations. All
types are immutable after validation; every operation is a pure function
of its inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDistribution,
    InvalidP,
    NegativeEntry,
    NegativeOffDiagonal,
    NotAbsolutelyContinuous,
    NotCentered,
    NotInvariant,
    NotIrreducible,
    RowSumViolation,
    SchemaError,
    SolverFailure,
    ZeroMass,
)

ROW_SUM_TOLERANCE = 1e-9
POST_NORMALIZATION_TOLERANCE = 1e-12
CENTERING_TOLERANCE = 1e-10
INVARIANCE_TOLERANCE = 1e-9
STATIONARY_RESIDUAL_TOLERANCE = 1e-12
DIRECT_SOLVE_SIZE_LIMIT = 2000


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def _as_square(raw, what: str = "matrix") -> np.ndarray:
    a = np.asarray(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{what} must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise DimensionMismatch(f"{what} contains non-finite entries")
    return a


@dataclass(frozen=True)
class StateSpace:
    """Ordered finite set of distinct state labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 1:
            raise DimensionMismatch("state space must contain at least one state")
        if len(set(self.labels)) != len(self.labels):
            raise DimensionMismatch("state labels must be distinct")

    @property
    def size(self) -> int:
        return len(self.labels)

    @classmethod
    def indexed(cls, n: int) -> "StateSpace":
        """State space with labels "0", "1", ..., "n-1"."""
        return cls(tuple(str(i) for i in range(n)))


def _make_space(labels, n: int) -> StateSpace:
    if labels is None:
        return StateSpace.indexed(n)
    if isinstance(labels, StateSpace):
        space = labels
    else:
        space = StateSpace(tuple(str(x) for x in labels))
    if space.size != n:
        raise DimensionMismatch(
            f"matrix is {n}x{n} but {space.size} labels were given"
        )
    return space


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix over a finite state space.

    Validated and row-renormalized; construct via
    :func:`validate_transition_matrix`.
    """

    space: StateSpace
    entries: np.ndarray
    row_sum_tolerance: float = ROW_SUM_TOLERANCE

    @property
    def n_states(self) -> int:
        return self.space.size


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Rate matrix of a Markov jump process (zero row sums, units 1/time).

    Validated via :func:`validate_generator`; the diagonal is set to minus
    the off-diagonal row sum.
    """

    space: StateSpace
    entries: np.ndarray

    @property
    def n_states(self) -> int:
        return self.space.size


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over a state space, with recorded support."""

    space: StateSpace
    weights: np.ndarray
    support: tuple[int, ...]

    @property
    def n_states(self) -> int:
        return self.space.size


@dataclass(frozen=True, eq=False)
class Observable:
    """Real function on states with moments under a reference distribution.

    ``M`` is the sup-norm of the (possibly centered) values, ``sigma2`` the
    exact variance under ``mu``. ``centered`` records whether the stored
    values have mean zero under mu within the centering tolerance.
    """

    space: StateSpace
    values: np.ndarray
    mean_mu: float
    M: float
    sigma2: float
    centered: bool


ChainOperator = Union[TransitionMatrix, GeneratorMatrix]


def validate_transition_matrix(
    raw, labels=None, row_sum_tolerance: float = ROW_SUM_TOLERANCE
) -> TransitionMatrix:
    """Validate and row-renormalize a candidate transition matrix.

    Parameters
    ----------
    raw : array_like
        Square matrix of nonnegative reals.
    labels : sequence of str, optional
        State labels; defaults to "0", "1", ....
    row_sum_tolerance : float
        Maximum allowed deviation of each input row sum from 1.

    Returns
    -------
    TransitionMatrix
        Rows renormalized to sum to 1 in working precision.

    Raises
    ------
    NegativeEntry, RowSumViolation, DimensionMismatch
    """
    a = _as_square(raw, "transition matrix")
    n = a.shape[0]
    space = _make_space(labels, n)
    neg = np.argwhere(a < 0)
    if neg.size:
        i, j = map(int, neg[0])
        raise NegativeEntry(i, j, float(a[i, j]))
    sums = a.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > row_sum_tolerance)
    if bad.size:
        i = int(bad[0])
        raise RowSumViolation(i, float(sums[i]), 1.0)
    a = a / sums[:, None]
    return TransitionMatrix(space, _freeze(a), row_sum_tolerance)


def validate_generator(
    raw, labels=None, row_sum_tolerance: float = ROW_SUM_TOLERANCE
) -> GeneratorMatrix:
    """Validate a candidate rate matrix.

    Off-diagonal entries must be nonnegative and each row must sum to zero
    within tolerance; the diagonal is then reset to minus the off-diagonal
    row sum so row sums are exactly zero in working precision.
    """
    a = _as_square(raw, "generator matrix").copy()
    n = a.shape[0]
    space = _make_space(labels, n)
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    neg = np.argwhere(off < 0)
    if neg.size:
        i, j = map(int, neg[0])
        raise NegativeOffDiagonal(i, j, float(a[i, j]))
    scale = max(1.0, float(np.abs(a).max()))
    sums = a.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums) > row_sum_tolerance * scale)
    if bad.size:
        i = int(bad[0])
        raise RowSumViolation(i, float(sums[i]), 0.0)
    np.fill_diagonal(a, -off.sum(axis=1))
    return GeneratorMatrix(space, _freeze(a))


def make_distribution(weights, space=None, tolerance: float = ROW_SUM_TOLERANCE) -> Distribution:
    """Validate a probability vector and record its support."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise DimensionMismatch("distribution weights must be a vector")
    if space is None:
        space = StateSpace.indexed(w.size)
    elif not isinstance(space, StateSpace):
        space = _make_space(space, w.size)
    if space.size != w.size:
        raise DimensionMismatch(
            f"distribution has {w.size} weights for {space.size} states"
        )
    if (w < 0).any():
        i = int(np.argmin(w))
        raise InvalidDistribution(f"negative weight {w[i]!r} at index {i}")
    total = float(w.sum())
    if abs(total - 1.0) > tolerance:
        raise InvalidDistribution(f"weights sum to {total!r}, expected 1")
    w = w / total
    support = tuple(int(i) for i in np.flatnonzero(w > 0))
    return Distribution(space, _freeze(w), support)


def uniform_distribution(space: StateSpace) -> Distribution:
    return make_distribution(np.full(space.size, 1.0 / space.size), space)


def _support_graph(op: ChainOperator) -> np.ndarray:
    a = op.entries > 0
    if isinstance(op, GeneratorMatrix):
        a = a.copy()
        np.fill_diagonal(a, False)
    return a


def _reaches_all(adj: np.ndarray, start: int = 0) -> bool:
    n = adj.shape[0]
    visited = np.zeros(n, dtype=bool)
    visited[start] = True
    frontier = np.array([start])
    while frontier.size:
        reachable = adj[frontier].any(axis=0) & ~visited
        frontier = np.flatnonzero(reachable)
        visited |= reachable
    return bool(visited.all())


def is_irreducible(op: ChainOperator) -> bool:
    """True iff the directed support graph is strongly connected.

    Edges are taken where entries are exactly positive (off-diagonal for
    generators); validated matrices keep exact zeros from the input.
    """
    adj = _support_graph(op)
    # strongly connected <=> node 0 reaches all nodes in both orientations
    return _reaches_all(adj) and _reaches_all(adj.T)


def _stationary_direct(A: np.ndarray) -> np.ndarray:
    # A is the balance operator acting on row vectors, transposed:
    # solve A w = 0 with one equation replaced by normalization.
    n = A.shape[0]
    B = A.copy()
    B[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    w = np.linalg.solve(B, b)
    # one step of iterative refinement
    w += np.linalg.solve(B, b - B @ w)
    return w


def _stationary_power(P: np.ndarray, tol: float, max_iter: int = 20000) -> np.ndarray:
    n = P.shape[0]
    w = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = w @ P
        nxt /= nxt.sum()
        if np.abs(nxt - w).max() <= 0.1 * tol:
            return nxt
        w = nxt
    raise SolverFailure("power iteration did not converge")


def stationary_distribution(op: ChainOperator) -> Distribution:
    """Unique invariant distribution of an irreducible chain or jump process.

    Solves mu P = mu (resp. mu Q = 0) by a direct linear solve with the
    normalization sum(mu) = 1 replacing one balance equation; falls back to
    power iteration above ``DIRECT_SOLVE_SIZE_LIMIT`` states. The result
    satisfies the balance equation to max-norm residual 1e-12.

    Raises
    ------
    NotIrreducible
        When the support graph is not strongly connected.
    SolverFailure
        When the residual or positivity requirement cannot be met.
    """
    if not is_irreducible(op):
        raise NotIrreducible("support graph is not strongly connected")
    n = op.space.size
    if n == 1:
        return make_distribution([1.0], op.space)
    discrete = isinstance(op, TransitionMatrix)
    if discrete:
        A = op.entries.T - np.eye(n)
    else:
        A = op.entries.T
    if n <= DIRECT_SOLVE_SIZE_LIMIT:
        w = _stationary_direct(A)
    elif discrete:
        w = _stationary_power(op.entries, STATIONARY_RESIDUAL_TOLERANCE)
    else:
        # uniformize the generator into a stochastic kernel with the same mu
        lam = 1.05 * max(float(-op.entries.diagonal().min()), 1e-300)
        w = _stationary_power(
            np.eye(n) + op.entries / lam, STATIONARY_RESIDUAL_TOLERANCE
        )
    w = w / w.sum()
    if w.min() <= 0:
        raise SolverFailure("stationary solve produced nonpositive mass")
    residual = float(np.abs(w @ op.entries - (w if discrete else 0.0)).max())
    if residual > STATIONARY_RESIDUAL_TOLERANCE:
        raise SolverFailure(f"stationary residual {residual!r} above tolerance")
    return make_distribution(w, op.space)


def _check_mu_positive(mu: Distribution, n: int) -> np.ndarray:
    if mu.n_states != n:
        raise DimensionMismatch("distribution does not match operator dimensions")
    w = mu.weights
    zero = np.flatnonzero(w <= 0)
    if zero.size:
        raise ZeroMass(int(zero[0]))
    return w


def check_invariant(op: ChainOperator, mu: Distribution,
                    tolerance: float = INVARIANCE_TOLERANCE) -> None:
    """Raise NotInvariant unless mu P = mu (resp. mu Q = 0) within tolerance."""
    w = mu.weights
    if isinstance(op, TransitionMatrix):
        residual = float(np.abs(w @ op.entries - w).max())
        scale = 1.0
    else:
        residual = float(np.abs(w @ op.entries).max())
        scale = max(1.0, float(np.abs(op.entries).max()))
    if residual > tolerance * scale:
        raise NotInvariant(
            f"distribution is not invariant (residual {residual!r})"
        )


def adjoint(P: TransitionMatrix, mu: Distribution) -> TransitionMatrix:
    """Time reversal of ``P`` under the mu-weighted inner product.

    ``P*(i, j) = mu(j) P(j, i) / mu(i)``. Requires mu strictly positive and
    invariant; the result is row-stochastic with the same invariant mu and
    satisfies <P f, g>_mu = <f, P* g>_mu for all f, g.
    """
    w = _check_mu_positive(mu, P.n_states)
    check_invariant(P, mu)
    star = (w[None, :] * P.entries.T) / w[:, None]
    return validate_transition_matrix(star, P.space, P.row_sum_tolerance)


def additive_symmetrization(P: TransitionMatrix, mu: Distribution) -> TransitionMatrix:
    """The self-adjoint average (P + P*)/2, row-stochastic with invariant mu."""
    star = adjoint(P, mu)
    return validate_transition_matrix(
        0.5 * (P.entries + star.entries), P.space, P.row_sum_tolerance
    )


def radon_nikodym_norm(nu: Distribution, mu: Distribution, p: float) -> float:
    """p-moment norm of the density d(nu)/d(mu).

    Returns ``(sum_i mu(i) (nu(i)/mu(i))^p)^(1/p)`` for finite p and
    ``max_i nu(i)/mu(i)`` for p = inf. Always >= 1, with equality iff
    nu = mu.

    Raises
    ------
    InvalidP
        For p <= 1 (the paired exponent q = p/(p-1) would make the
        tail bound vacuous at p = 1; see module docs).
    NotAbsolutelyContinuous
        When nu puts mass where mu has none.
    """
    if not p > 1:
        raise InvalidP(
            f"p = {p!r} rejected: p must lie in (1, inf]; at p = 1 the "
            "Hoelder exponent q is infinite and the tail bound is vacuous"
        )
    if nu.n_states != mu.n_states:
        raise DimensionMismatch("distributions live on different state spaces")
    wn, wm = nu.weights, mu.weights
    bad = np.flatnonzero((wn > 0) & (wm == 0))
    if bad.size:
        raise NotAbsolutelyContinuous(int(bad[0]))
    mask = wm > 0
    ratio = wn[mask] / wm[mask]
    if np.isinf(p):
        return float(ratio.max())
    return float((wm[mask] @ ratio**p) ** (1.0 / p))


def make_observable(
    values,
    mu: Distribution,
    auto_center: bool = True,
    tolerance: float = CENTERING_TOLERANCE,
) -> Observable:
    """Build an observable with exact moments under ``mu``.

    With ``auto_center`` the values are shifted by -E_mu[values]; otherwise
    a mean beyond ``tolerance`` raises :class:`NotCentered`. ``M`` is the
    sup-norm of the stored values and ``sigma2`` their exact variance
    under mu.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size != mu.n_states:
        raise DimensionMismatch("observable values do not match the state space")
    w = mu.weights
    mean = float(w @ v)
    if auto_center:
        v = v - mean
    elif abs(mean) > tolerance:
        raise NotCentered(f"E_mu[f] = {mean!r} exceeds tolerance {tolerance!r}")
    mean_stored = float(w @ v)
    m_bound = float(np.abs(v).max())
    sigma2 = max(float(w @ v**2) - mean_stored**2, 0.0)
    return Observable(
        space=mu.space,
        values=_freeze(v),
        mean_mu=mean_stored,
        M=m_bound,
        sigma2=sigma2,
        centered=abs(mean_stored) <= tolerance,
    )


def observable_values(f) -> np.ndarray:
    """Accept an Observable or a plain vector and return the value array."""
    if isinstance(f, Observable):
        return f.values
    v = np.asarray(f, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch("observable must be a vector of reals")
    return v


# ---------------------------------------------------------------------------
# Chain JSON schema
#
# { "labels": ["a", "b", ...], "P": [[...], ...] }   discrete chain, or
# { "labels": [...], "Q": [[...], ...] }             jump process,
# plus optional "mu", "f", "nu" vectors. Unknown keys are rejected.
# ---------------------------------------------------------------------------

_CHAIN_KEYS = {"labels", "P", "Q", "mu", "f", "nu"}


@dataclass(frozen=True, eq=False)
class ChainData:
    """Parsed contents of a chain JSON document."""

    transition: TransitionMatrix | None
    generator: GeneratorMatrix | None
    mu: Distribution | None
    nu: Distribution | None
    f_values: np.ndarray | None

    @property
    def operator(self) -> ChainOperator:
        return self.transition if self.transition is not None else self.generator

    @property
    def space(self) -> StateSpace:
        return self.operator.space

    @property
    def kind(self) -> str:
        return "discrete" if self.transition is not None else "continuous"


def _schema_vector(obj, key: str, n: int) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != n:
        raise SchemaError(f'"{key}" must be a list of {n} numbers')
    try:
        v = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f'"{key}" must contain only numbers') from exc
    if v.ndim != 1:
        raise SchemaError(f'"{key}" must be a flat list of numbers')
    return v


def parse_chain(obj) -> ChainData:
    """Validate a decoded chain JSON object against the schema."""
    if not isinstance(obj, dict):
        raise SchemaError("chain document must be a JSON object")
    unknown = set(obj) - _CHAIN_KEYS
    if unknown:
        raise SchemaError(f"unknown keys in chain document: {sorted(unknown)}")
    if "labels" not in obj:
        raise SchemaError('chain document requires a "labels" list')
    labels = obj["labels"]
    if (
        not isinstance(labels, list)
        or not labels
        or not all(isinstance(x, str) for x in labels)
    ):
        raise SchemaError('"labels" must be a nonempty list of strings')
    n = len(labels)
    has_p, has_q = "P" in obj, "Q" in obj
    if has_p == has_q:
        raise SchemaError('chain document requires exactly one of "P" or "Q"')
    matrix_key = "P" if has_p else "Q"
    rows = obj[matrix_key]
    if not isinstance(rows, list) or len(rows) != n:
        raise SchemaError(f'"{matrix_key}" must be a list of {n} rows')
    mat = [_schema_vector(row, matrix_key, n) for row in rows]
    transition = generator = None
    if has_p:
        transition = validate_transition_matrix(np.array(mat), labels)
    else:
        generator = validate_generator(np.array(mat), labels)
    space = (transition or generator).space
    mu = nu = None
    f_values = None
    if "mu" in obj:
        mu = make_distribution(_schema_vector(obj["mu"], "mu", n), space)
    if "nu" in obj:
        nu = make_distribution(_schema_vector(obj["nu"], "nu", n), space)
    if "f" in obj:
        f_values = _freeze(_schema_vector(obj["f"], "f", n))
    return ChainData(transition, generator, mu, nu, f_values)


def load_chain(path) -> ChainData:
    """Read and validate a chain JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    return parse_chain(obj)

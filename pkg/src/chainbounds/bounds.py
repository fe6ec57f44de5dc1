"""Closed-form Bernstein-type moment and tail bounds with exact constants.

Evaluates, for a chain or jump process with iterated Poincare gap eta_p
and a centered observable with |f| <= M and Var <= sigma^2:

* the exponential-moment bounds
  ``exp(n sigma M theta^2 (2 + 6 eta_p) / (c(theta) eta_p))`` (discrete) and
  ``exp(2 sigma M theta^2 t / (c(theta) eta_p))`` (continuous), valid for
  ``|theta| < eta_p / (2 M)`` with ``c(theta) = sqrt(1 - 4 theta^2 M^2 / eta_p^2)``;
* the assembled two-sided tail bounds
  ``2 ||nu/mu||_{L_p,mu} exp(-n eta_p delta^2 / (4 q M sqrt((2+6 eta_p)^2 sigma^2 + delta^2)))``
  and its continuous-time analogue with ``sqrt(4 sigma^2 + delta^2)``,
  where q = p/(p-1).

Exponents are computed first and exponentiated last; bounds at or above 1
are returned with a ``vacuous`` flag, never clamped.
"""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass

from .errors import InvalidQuery, ThetaOutOfRange

SWEEP_CSV_HEADER = "axis,value,exponent,bound,theta,c_theta,vacuous"
_SWEEP_AXES = ("n", "t", "delta", "eta_p")


def _exp(x: float) -> float:
    # exponentiation happens last; saturate instead of raising on overflow
    return math.exp(x) if x < 709.0 else math.inf


def _q_from_p(p: float) -> float:
    if not p > 1:
        raise InvalidQuery(
            f"p = {p!r} rejected: p must lie in (1, inf]; p = 1 gives "
            "q = infinity and a vacuous (zero) tail exponent"
        )
    return 1.0 if math.isinf(p) else p / (p - 1.0)


@dataclass(frozen=True)
class BoundQuery:
    """Inputs of one tail-bound evaluation.

    ``mode`` selects the discrete (horizon ``n`` steps) or continuous
    (horizon ``t`` time units) form. ``q = p/(p-1)`` is derived at
    construction; p = inf maps to q = 1 exactly.
    """

    mode: str
    delta: float
    M: float
    sigma2: float
    eta_p: float
    p: float = math.inf
    nu_norm: float = 1.0
    n: int | None = None
    t: float | None = None
    q: float = dataclasses.field(init=False)

    def __post_init__(self):
        if self.mode not in ("discrete", "continuous"):
            raise InvalidQuery(f"unknown mode {self.mode!r}")
        if self.mode == "discrete":
            if self.t is not None or self.n is None or self.n < 1:
                raise InvalidQuery("discrete queries need a horizon n >= 1")
        else:
            if self.n is not None or self.t is None or self.t < 0:
                raise InvalidQuery("continuous queries need a horizon t >= 0")
        if not self.delta >= 0:
            raise InvalidQuery("delta must be >= 0")
        if not self.M > 0:
            raise InvalidQuery("M must be > 0")
        if not 0 <= self.sigma2 <= self.M**2 * (1 + 1e-12):
            raise InvalidQuery("sigma2 must lie in [0, M^2]")
        if not self.eta_p > 0:
            raise InvalidQuery("eta_p must be > 0")
        if not self.nu_norm >= 1:
            raise InvalidQuery("nu_norm must be >= 1")
        for name in ("delta", "M", "sigma2", "eta_p", "nu_norm"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidQuery(f"{name} must be finite")
        object.__setattr__(self, "q", _q_from_p(self.p))

    @property
    def horizon(self) -> float:
        return self.n if self.mode == "discrete" else self.t

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "t": self.t,
            "delta": self.delta,
            "M": self.M,
            "sigma2": self.sigma2,
            "eta_p": self.eta_p,
            "p": self.p,
            "nu_norm": self.nu_norm,
            "q": self.q,
        }


@dataclass(frozen=True)
class BoundResult:
    """One evaluated tail bound.

    ``probability_bound = 2 nu_norm exp(exponent)`` (0.0 when the exponent
    underflows; the exponent is kept). ``boundary_limit`` marks the
    sigma = 0, delta > 0 case where the optimal theta sits on the validity
    boundary and the bound is evaluated as the (well-defined) limit, with
    c_theta = 0.
    """

    probability_bound: float
    exponent: float
    theta_used: float
    c_theta: float
    vacuous: bool
    boundary_limit: bool = False

    def to_dict(self) -> dict:
        return {
            "probability_bound": self.probability_bound,
            "exponent": self.exponent,
            "theta_used": self.theta_used,
            "c_theta": self.c_theta,
            "vacuous": self.vacuous,
            "boundary_limit": self.boundary_limit,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundResult":
        return cls(
            probability_bound=float(d["probability_bound"]),
            exponent=float(d["exponent"]),
            theta_used=float(d["theta_used"]),
            c_theta=float(d["c_theta"]),
            vacuous=bool(d["vacuous"]),
            boundary_limit=bool(d.get("boundary_limit", False)),
        )


def c_theta(theta: float, M: float, eta_p: float) -> float:
    """sqrt(1 - 4 theta^2 M^2 / eta_p^2), defined for |theta| < eta_p / (2M)."""
    limit = eta_p / (2.0 * M)
    if abs(theta) >= limit:
        raise ThetaOutOfRange(theta, limit)
    return math.sqrt(1.0 - (2.0 * theta * M / eta_p) ** 2)


def mgf_bound_discrete(theta: float, n: int, M: float, sigma: float, eta_p: float) -> float:
    """Exponential-moment bound for the n-step sum of a centered observable.

    ``sigma`` is the standard-deviation bound (sqrt of the variance proxy).
    Always >= 1; equals 1 at theta = 0.
    """
    if n < 1:
        raise InvalidQuery("n must be >= 1")
    c = c_theta(theta, M, eta_p)
    return _exp(n * sigma * M * theta**2 * (2.0 + 6.0 * eta_p) / (c * eta_p))


def mgf_bound_continuous(theta: float, t: float, M: float, sigma: float, eta_p: float) -> float:
    """Exponential-moment bound for the time integral over [0, t]."""
    if t < 0:
        raise InvalidQuery("t must be >= 0")
    c = c_theta(theta, M, eta_p)
    return _exp(2.0 * sigma * M * theta**2 * t / (c * eta_p))


def optimal_theta_discrete(delta: float, M: float, sigma: float, eta_p: float, q: float) -> float:
    """Chernoff parameter minimizing the assembled discrete tail bound.

    ``delta eta_p / (2 q M sqrt((2 + 6 eta_p)^2 sigma^2 + delta^2))``;
    zero at delta = 0, on the validity boundary when sigma = 0.
    """
    if delta == 0.0:
        return 0.0
    radical = math.sqrt((2.0 + 6.0 * eta_p) ** 2 * sigma**2 + delta**2)
    return delta * eta_p / (2.0 * q * M * radical)


def optimal_theta_continuous(delta: float, M: float, sigma: float, eta_p: float, q: float) -> float:
    """Continuous-time analogue, with radical sqrt(4 sigma^2 + delta^2)."""
    if delta == 0.0:
        return 0.0
    radical = math.sqrt(4.0 * sigma**2 + delta**2)
    return delta * eta_p / (2.0 * q * M * radical)


def _assemble(query: BoundQuery, exponent: float, theta: float, c: float,
              boundary: bool) -> BoundResult:
    bound = 2.0 * query.nu_norm * math.exp(exponent)  # underflows to 0.0 cleanly
    return BoundResult(
        probability_bound=bound,
        exponent=exponent,
        theta_used=theta,
        c_theta=c,
        vacuous=bound >= 1.0,
        boundary_limit=boundary,
    )


def tail_bound_discrete(query: BoundQuery) -> BoundResult:
    """Two-sided tail bound P(|1/n sum f(Z_k)| >= delta) for discrete time."""
    if query.mode != "discrete":
        raise InvalidQuery("query mode must be 'discrete'")
    sigma = math.sqrt(query.sigma2)
    delta, M, eta, q = query.delta, query.M, query.eta_p, query.q
    theta = optimal_theta_discrete(delta, M, sigma, eta, q)
    if delta == 0.0:
        return _assemble(query, 0.0, 0.0, 1.0, False)
    radical = math.sqrt((2.0 + 6.0 * eta) ** 2 * query.sigma2 + delta**2)
    exponent = -query.n * eta * delta**2 / (4.0 * q * M * radical)
    c = (2.0 + 6.0 * eta) * sigma / radical
    return _assemble(query, exponent, theta, c, boundary=sigma == 0.0)


def tail_bound_continuous(query: BoundQuery) -> BoundResult:
    """Two-sided tail bound P(|1/t int f(Z_s) ds| >= delta) for continuous time."""
    if query.mode != "continuous":
        raise InvalidQuery("query mode must be 'continuous'")
    sigma = math.sqrt(query.sigma2)
    delta, M, eta, q = query.delta, query.M, query.eta_p, query.q
    theta = optimal_theta_continuous(delta, M, sigma, eta, q)
    if delta == 0.0:
        return _assemble(query, 0.0, 0.0, 1.0, False)
    radical = math.sqrt(4.0 * query.sigma2 + delta**2)
    exponent = -query.t * eta * delta**2 / (4.0 * q * M * radical)
    c = 2.0 * sigma / radical
    return _assemble(query, exponent, theta, c, boundary=sigma == 0.0)


def tail_bound(query: BoundQuery) -> BoundResult:
    """Dispatch on the query mode."""
    if query.mode == "discrete":
        return tail_bound_discrete(query)
    return tail_bound_continuous(query)


def bound_sweep(query_template: BoundQuery, sweep_axis: str, values) -> list[BoundResult]:
    """Evaluate the tail bound along one axis, order preserved.

    ``sweep_axis`` is one of n, t, delta, eta_p. Invalid elements are
    reported per row in a single InvalidQuery naming the offending indices.
    """
    if sweep_axis not in _SWEEP_AXES:
        raise InvalidQuery(f"sweep axis must be one of {_SWEEP_AXES}")
    values = list(values)
    if not values:
        raise InvalidQuery("sweep needs at least one value")
    results, row_errors = [], []
    for idx, value in enumerate(values):
        try:
            if sweep_axis == "n":
                q = dataclasses.replace(query_template, n=int(value))
            elif sweep_axis == "t":
                q = dataclasses.replace(query_template, t=float(value))
            else:
                q = dataclasses.replace(query_template, **{sweep_axis: float(value)})
            results.append(tail_bound(q))
        except InvalidQuery as exc:
            row_errors.append(f"row {idx} (value {value!r}): {exc}")
    if row_errors:
        raise InvalidQuery("; ".join(row_errors))
    return results


def sweep_to_csv(sweep_axis: str, values, results: list[BoundResult]) -> str:
    """Render sweep results as CSV with round-trip float precision."""
    out = io.StringIO()
    out.write(SWEEP_CSV_HEADER + "\n")
    for value, res in zip(values, results):
        out.write(
            f"{sweep_axis},{value!r},{res.exponent!r},{res.probability_bound!r},"
            f"{res.theta_used!r},{res.c_theta!r},{'true' if res.vacuous else 'false'}\n"
        )
    return out.getvalue()

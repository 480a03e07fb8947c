"""Encoding weight, recovery thresholds, and the channel divergence.

The reveal intensity t has a critical value t_c below which exact recovery of
the communities is impossible and above which it is achievable.  In the
symmetric case (p1 = p2 = p) the threshold has the closed form

    t_c(p, q) = 2 / ((sqrt(p) - sqrt(q))^2 + (sqrt(1-q) - sqrt(1-p))^2),

and in general it is obtained from a 1-D convex minimization over the pair of
length-4 observation channels c1 = (p1, 1-p1, q, 1-q), c2 = (q, 1-q, p2, 1-p2).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Reject inputs this close to a singular configuration instead of returning
# huge finite values.
SINGULAR_TOL = 1e-12

DEFAULT_X_TOL = 1e-10


def _check_open_unit(name: str, value: float) -> float:
    value = float(value)
    if not (SINGULAR_TOL < value < 1.0 - SINGULAR_TOL):
        raise DomainError(
            f"{name} must lie strictly inside (0, 1) (margin {SINGULAR_TOL}), got {value}"
        )
    return value


def encoding_weight(p: float, q: float) -> float:
    """Relative weight y of an absent vs. a present observation.

    y(p, q) = log((1-q)/(1-p)) / log(p/q); strictly positive and symmetric in
    (p, q).  When p + q = 1 the two observation types are equally informative
    and y = 1.
    """
    p = _check_open_unit("p", p)
    q = _check_open_unit("q", q)
    if abs(p - q) <= SINGULAR_TOL:
        raise DomainError(f"encoding weight undefined for p == q (p={p}, q={q})")
    return math.log((1.0 - q) / (1.0 - p)) / math.log(p / q)


def threshold_symmetric(p: float, q: float) -> float:
    """Critical reveal intensity for the symmetric model (p1 = p2 = p)."""
    p = _check_open_unit("p", p)
    q = _check_open_unit("q", q)
    if abs(p - q) <= SINGULAR_TOL:
        raise DomainError(f"threshold undefined for p == q (p={p}, q={q})")
    denom = (math.sqrt(p) - math.sqrt(q)) ** 2 + (
        math.sqrt(1.0 - q) - math.sqrt(1.0 - p)
    ) ** 2
    return 2.0 / denom


@dataclass(frozen=True)
class ChannelPair:
    """A pair of length-4 nonnegative observation channels."""

    c1: tuple[float, float, float, float]
    c2: tuple[float, float, float, float]

    def __post_init__(self):
        for name in ("c1", "c2"):
            c = tuple(float(x) for x in getattr(self, name))
            if len(c) != 4:
                raise DomainError(f"{name} must have length 4, got {len(c)}")
            if any(x < 0.0 for x in c):
                raise DomainError(f"{name} entries must be nonnegative, got {c}")
            object.__setattr__(self, name, c)

    @classmethod
    def from_rates(cls, p1: float, p2: float, q: float) -> "ChannelPair":
        """Channels of the two hypotheses for one vertex's label given the
        rest: c1 = (p1, 1-p1, q, 1-q), c2 = (q, 1-q, p2, 1-p2)."""
        p1 = _check_open_unit("p1", p1)
        p2 = _check_open_unit("p2", p2)
        q = _check_open_unit("q", q)
        return cls((p1, 1.0 - p1, q, 1.0 - q), (q, 1.0 - q, p2, 1.0 - p2))


def _golden_section_min(f, lo: float, hi: float, tol: float) -> float:
    """Minimizer of a unimodal f on [lo, hi] to within tol in x."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def hellinger_ch_min(
    pair: ChannelPair, tol: float = DEFAULT_X_TOL
) -> tuple[float, float]:
    """Minimize f(x) = sum_i c1_i^x * c2_i^(1-x) over x in [0, 1].

    f is convex, so golden-section search is guaranteed to converge.  Returns
    (x_star, f(x_star)).  Identical channels make f constant; x_star is then
    reported as 0.5 by convention.
    """
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    c1 = np.asarray(pair.c1)
    c2 = np.asarray(pair.c2)
    if np.any(c1 <= 0.0) or np.any(c2 <= 0.0):
        raise DomainError("channel entries must be strictly positive")
    if np.array_equal(c1, c2):
        return 0.5, float(np.sum(c1))
    log_ratio = np.log(c1 / c2)

    def f(x):
        return float(np.sum(c2 * np.exp(x * log_ratio)))

    x_star = _golden_section_min(f, 0.0, 1.0, tol)
    return x_star, f(x_star)


def threshold_general(
    p1: float, p2: float, q: float, tol: float = DEFAULT_X_TOL
) -> float:
    """Critical reveal intensity for general (p1, p2, q).

    Equals ``threshold_symmetric(p, q)`` when p1 = p2 = p.  Undefined when
    p1 = p2 = q (the two hypotheses are indistinguishable).
    """
    pair = ChannelPair.from_rates(p1, p2, q)
    if abs(p1 - q) <= SINGULAR_TOL and abs(p2 - q) <= SINGULAR_TOL:
        raise DomainError(
            f"threshold infinite for identical channels (p1={p1}, p2={p2}, q={q})"
        )
    _, value = hellinger_ch_min(pair, tol)
    denom = 1.0 - 0.5 * value
    if denom <= SINGULAR_TOL:
        raise DomainError("channels too close; threshold would overflow")
    return 1.0 / denom


def ch_divergence(c1_prime, c2_prime, tol: float = DEFAULT_X_TOL) -> float:
    """max over x in [0,1] of sum_i (x*c1'_i + (1-x)*c2'_i - c1'_i^x c2'_i^(1-x)).

    The objective is concave in x (affine part minus a convex term) and equals
    0 at both endpoints, so the maximum is nonnegative.  For the model
    channels scaled by t/2 this value equals t / t_c(p1, p2, q).
    """
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    c1 = np.asarray(c1_prime, dtype=float)
    c2 = np.asarray(c2_prime, dtype=float)
    if c1.shape != (4,) or c2.shape != (4,):
        raise DomainError("channel vectors must have length 4")
    if np.any(c1 <= 0.0) or np.any(c2 <= 0.0):
        raise DomainError("channel entries must be strictly positive")
    if np.array_equal(c1, c2):
        return 0.0
    s1 = float(np.sum(c1))
    s2 = float(np.sum(c2))
    log_ratio = np.log(c1 / c2)

    def neg_objective(x):
        mix = float(np.sum(c2 * np.exp(x * log_ratio)))
        return mix - (x * s1 + (1.0 - x) * s2)

    x_star = _golden_section_min(neg_objective, 0.0, 1.0, tol)
    return max(0.0, -neg_objective(x_star))


def scaled_channels(
    p1: float, p2: float, q: float, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """The model channels scaled by t/2, the form taken by ch_divergence."""
    pair = ChannelPair.from_rates(p1, p2, q)
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    return 0.5 * t * np.asarray(pair.c1), 0.5 * t * np.asarray(pair.c2)

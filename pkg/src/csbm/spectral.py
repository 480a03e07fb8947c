"""Signed adjacency matrix, sparse eigensolver, and spectral estimators.

A revealed present pair contributes +1, a revealed absent pair contributes -y,
and censored pairs contribute 0.  With y chosen as the encoding weight, the
top eigenvector of this matrix carries the community split: thresholding its
signs recovers the labels above the critical reveal intensity.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import csr_matrix

from .errors import ConvergenceError, DomainError, ParameterError
from .model import ModelParams, ObservedGraph
from .thresholds import encoding_weight

_BREAKDOWN_REL = 1e-13
_CHECK_EVERY = 8


def sign_labels(x: np.ndarray) -> np.ndarray:
    """Entrywise sign with sign(0) = +1, as int8 labels."""
    return np.where(np.asarray(x) >= 0, 1, -1).astype(np.int8)


class SignedMatrix:
    """Sparse symmetric matrix with entries +1 (present) and -y (absent).

    Stored as two 0/1 CSR matrices so the same graph can be re-encoded with a
    different y without resampling.  ``sign=-1`` holds the negated matrix,
    used when p < q.  Immutable; matvec is reentrant.
    """

    __slots__ = ("n", "y", "sign", "_pres", "_abs")

    def __init__(self, graph: ObservedGraph, y: float, sign: int = 1):
        if not y > 0.0:
            raise DomainError(f"encoding weight y must be positive, got {y}")
        if sign not in (1, -1):
            raise ParameterError(f"sign must be +1 or -1, got {sign}")
        self.n = graph.n
        self.y = float(y)
        self.sign = int(sign)
        self._pres = self._half(graph, True)
        self._abs = self._half(graph, False)

    def _half(self, graph: ObservedGraph, status: bool) -> csr_matrix:
        mask = graph.present if status else ~graph.present
        u = graph.us[mask]
        v = graph.vs[mask]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(rows.size)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @property
    def nnz(self) -> int:
        return self._pres.nnz + self._abs.nnz

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ParameterError(
                f"vector must have shape ({self.n},), got {v.shape}"
            )
        out = self._pres @ v - self.y * (self._abs @ v)
        return out if self.sign == 1 else -out

    def negated(self) -> "SignedMatrix":
        m = object.__new__(SignedMatrix)
        m.n, m.y, m.sign = self.n, self.y, -self.sign
        m._pres, m._abs = self._pres, self._abs
        return m

    def to_dense(self) -> np.ndarray:
        dense = self._pres.toarray() - self.y * self._abs.toarray()
        return dense if self.sign == 1 else -dense


def build_signed_adjacency(graph: ObservedGraph, y: float) -> SignedMatrix:
    """Encode a graph as the signed adjacency matrix with weight y."""
    return SignedMatrix(graph, y)


def signed_adjacency_for_rates(
    graph: ObservedGraph, p: float, q: float
) -> SignedMatrix:
    """Signed adjacency with y = encoding_weight(p, q), negated when p < q so
    that the community signal sits in the algebraically largest eigenvalues."""
    y = encoding_weight(p, q)
    return SignedMatrix(graph, y, sign=1 if p > q else -1)


def matvec(m: SignedMatrix, v: np.ndarray) -> np.ndarray:
    """Sparse symmetric multiply; cost O(number of revealed pairs)."""
    return m.matvec(v)


@dataclass
class EigenPair:
    """An eigenvalue and its unit eigenvector; ``iterations`` counts the
    matrix-vector products spent by the solve that produced it."""

    value: float
    vector: np.ndarray
    iterations: int = 0


def _random_unit(rng, n, against):
    for _ in range(20):
        v = rng.standard_normal(n)
        if against is not None:
            v -= against @ (against.T @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise ConvergenceError("could not draw a start vector outside locked space")


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    # deterministic orientation: largest-magnitude entry made positive
    k = int(np.argmax(np.abs(u)))
    return -u if u[k] < 0 else u


class _Sweep:
    """One Lanczos run with full reorthogonalization against its own basis and
    any locked (already converged) eigenvectors."""

    def __init__(self, op: SignedMatrix, k_want: int, tol: float, budget: int,
                 rng, locked: list[np.ndarray]):
        self.op = op
        self.k_want = k_want
        self.tol = tol
        self.budget = budget
        self.rng = rng
        self.locked = np.stack(locked, axis=1) if locked else None
        self.matvecs = 0
        self.best_residual = math.inf

    def _verify(self, q_mat, s_cols, thetas):
        """Form Ritz vectors and check true residuals against the contract."""
        good = []
        for col in range(len(thetas) - 1, -1, -1):  # descending eigenvalue
            u = q_mat @ s_cols[:, col]
            norm = np.linalg.norm(u)
            if norm < 1e-8:
                continue
            u /= norm
            mu = self.op.matvec(u)
            self.matvecs += 1
            theta = float(u @ mu)
            resid = float(np.linalg.norm(mu - theta * u))
            self.best_residual = min(self.best_residual, resid)
            if resid <= self.tol * max(1.0, abs(theta)):
                good.append((theta, _canonical_sign(u), resid))
        return good

    def run(self):
        """Returns (verified pairs, stagnated flag)."""
        op, n = self.op, self.op.n
        cap = min(128, self.budget)
        q_mat = np.empty((n, cap))
        q_mat[:, 0] = _random_unit(self.rng, n, self.locked)
        alphas = np.empty(self.budget)
        betas = np.empty(self.budget)
        scale = 0.0
        j = 0
        while True:
            w = op.matvec(q_mat[:, j])
            self.matvecs += 1
            a = float(q_mat[:, j] @ w)
            alphas[j] = a
            w -= a * q_mat[:, j]
            if j > 0:
                w -= betas[j - 1] * q_mat[:, j - 1]
            for _ in range(2):
                w -= q_mat[:, : j + 1] @ (q_mat[:, : j + 1].T @ w)
                if self.locked is not None:
                    w -= self.locked @ (self.locked.T @ w)
            b = float(np.linalg.norm(w))
            scale = max(scale, abs(a), b)
            m = j + 1
            stagnated = b <= max(scale, 1.0) * _BREAKDOWN_REL
            last = m == self.budget
            if m >= self.k_want and (
                stagnated or last or m <= 3 or m % _CHECK_EVERY == 0
            ):
                k_eff = min(self.k_want, m)
                thetas, s_cols = eigh_tridiagonal(
                    alphas[:m], betas[: m - 1],
                    select="i", select_range=(m - k_eff, m - 1),
                )
                bounds = np.abs(b * s_cols[m - 1, :])
                tight = np.all(
                    bounds <= 0.25 * self.tol * np.maximum(1.0, np.abs(thetas))
                )
                if tight or stagnated or last:
                    good = self._verify(q_mat[:, :m], s_cols, thetas)
                    if len(good) == k_eff == self.k_want:
                        return good, False
                    if stagnated:
                        return good, True
                    if last:
                        return good, False
            if stagnated or last:
                return [], stagnated
            betas[j] = b
            if m == cap:
                cap = min(2 * cap, self.budget)
                grown = np.empty((n, cap))
                grown[:, :m] = q_mat[:, :m]
                q_mat = grown
            q_mat[:, m] = w / b
            j += 1


def top_eigenpairs(
    m: SignedMatrix,
    k: int = 1,
    tol: float = 1e-8,
    max_iter: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[EigenPair]:
    """The k algebraically largest eigenpairs, largest eigenvalue first.

    Lanczos with full reorthogonalization; on stagnation (invariant subspace
    reached) the converged pairs are locked and the iteration restarts with a
    fresh random vector orthogonal to them.  Each returned pair satisfies
    ||M u - lambda u||_2 <= tol * max(1, |lambda|); eigenvector orientation is
    canonical (largest-magnitude entry positive).

    Raises :class:`ConvergenceError`, carrying the best residual seen, if the
    budget of ``max_iter`` total Lanczos steps is exhausted first.
    """
    if k not in (1, 2):
        raise ParameterError(f"k must be 1 or 2, got {k}")
    if m.n < k:
        raise ParameterError(f"need n >= k, got n={m.n}, k={k}")
    if tol <= 0.0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if m.nnz == 0:
        raise ConvergenceError(
            "matrix has no revealed entries; spectrum is degenerate"
        )
    if max_iter is None:
        max_iter = int(10 * math.sqrt(m.n)) + 200
    if max_iter < 1:
        raise ParameterError(f"max_iter must be positive, got {max_iter}")
    rng = np.random.default_rng() if rng is None else rng

    budget = min(m.n, max_iter)
    locked: list[tuple[float, np.ndarray]] = []
    total_matvecs = 0
    best_residual = math.inf
    restarts = 0
    while len(locked) < k:
        sweep = _Sweep(
            m, k - len(locked), tol, budget, rng, [u for _, u in locked]
        )
        pairs, stagnated = sweep.run()
        total_matvecs += sweep.matvecs
        best_residual = min(best_residual, sweep.best_residual)
        locked.extend((theta, u) for theta, u, _ in pairs)
        if len(locked) >= k:
            break
        restarts += 1
        if not stagnated or restarts > 3:
            raise ConvergenceError(
                f"eigensolver did not reach tol={tol} within budget "
                f"(best residual {best_residual:.3e})",
                best_residual=best_residual,
            )
    locked.sort(key=lambda p: p[0], reverse=True)
    return [
        EigenPair(value=theta, vector=u, iterations=total_matvecs)
        for theta, u in locked[:k]
    ]


def spectral_estimate(
    graph: ObservedGraph,
    p: float,
    q: float,
    tol: float = 1e-8,
    max_iter: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Labels from the signs of the top eigenvector of the signed adjacency.

    The encoding weight is y(p, q); for p < q the matrix is negated so the
    community direction is still the top eigenvector.
    """
    mat = signed_adjacency_for_rates(graph, p, q)
    top = top_eigenpairs(mat, k=1, tol=tol, max_iter=max_iter, rng=rng)
    return sign_labels(top[0].vector)


def spectral_general(
    graph: ObservedGraph,
    y: float,
    r: float,
    gamma1: float,
    gamma2: float,
    tol: float = 1e-8,
    max_iter: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Labels sgn(gamma1*u1 + gamma2*u2 - r) from the top two eigenvectors of
    the y-encoded signed adjacency (sign(0) = +1)."""
    if gamma1 == 0.0 and gamma2 == 0.0:
        raise ParameterError("(gamma1, gamma2) must not both be zero")
    mat = build_signed_adjacency(graph, y)
    pairs = top_eigenpairs(mat, k=2, tol=tol, max_iter=max_iter, rng=rng)
    score = gamma1 * pairs[0].vector + gamma2 * pairs[1].vector - r
    return sign_labels(score)


@dataclass(frozen=True)
class ExpectedSpectrum:
    """Exact spectrum of the two-valued expectation matrix.

    ``same_entry``/``cross_entry`` are the matrix values on same-community and
    cross-community positions; the matrix is constant on each block (diagonal
    included), hence rank 2 with the block-constant eigenvectors below.
    """

    lambda1_star: float
    lambda2_star: float
    u1_star: np.ndarray = field(repr=False)
    u2_star: np.ndarray = field(repr=False)
    same_entry: float
    cross_entry: float


def _bernoulli_kl(a: float, b: float) -> float:
    return a * math.log(a / b) + (1.0 - a) * math.log((1.0 - a) / (1.0 - b))


def expected_matrix_spectrum(
    params: ModelParams, labels: np.ndarray
) -> ExpectedSpectrum:
    """Eigenvalues/eigenvectors of the expectation matrix, exactly.

    Only the symmetric case p1 = p2 = p is supported.  The two distinct matrix
    entries are alpha*KL(p||q)/log(p/q) on same-community positions and
    -alpha*KL(q||p)/log(p/q) on cross positions (standard Bernoulli KL, nats).
    With community sizes n1, n2 the spectrum reduces to a symmetric 2x2
    problem which is solved in closed form, exact for any split.
    """
    if not params.symmetric:
        raise ParameterError(
            f"expected spectrum requires p1 == p2, got {params.p1} != {params.p2}"
        )
    p, q = params.p1, params.q
    if abs(p - q) <= 1e-12:
        raise DomainError(f"expected spectrum undefined for p == q ({p})")
    labels = np.asarray(labels)
    if labels.shape != (params.n,):
        raise ParameterError(
            f"labels must have length {params.n}, got {labels.shape}"
        )
    n1 = int(np.count_nonzero(labels == 1))
    n2 = int(np.count_nonzero(labels == -1))
    if n1 + n2 != params.n or min(n1, n2) < 1:
        raise ParameterError("labels must be +/-1 with both communities present")

    alpha = params.alpha
    log_ratio = math.log(p / q)
    a = alpha * _bernoulli_kl(p, q) / log_ratio
    b = -alpha * _bernoulli_kl(q, p) / log_ratio

    # eigenproblem of [[a*n1, b*g], [b*g, a*n2]], g = sqrt(n1*n2)
    g = math.sqrt(n1 * n2)
    half_tr = 0.5 * a * (n1 + n2)
    disc = math.sqrt((0.5 * a * (n1 - n2)) ** 2 + (b * g) ** 2)
    mus = (half_tr + disc, half_tr - disc)
    vectors = []
    for mu in mus:
        w = np.array([b * g, mu - a * n1])
        w /= np.linalg.norm(w)
        x1 = w[0] / math.sqrt(n1)
        x2 = w[1] / math.sqrt(n2)
        if x1 < 0:
            x1, x2 = -x1, -x2
        u = np.where(labels == 1, x1, x2)
        vectors.append(u)
    return ExpectedSpectrum(
        lambda1_star=mus[0],
        lambda2_star=mus[1],
        u1_star=vectors[0],
        u2_star=vectors[1],
        same_entry=a,
        cross_entry=b,
    )


def entrywise_residual(
    u: np.ndarray, m: SignedMatrix, u_star: np.ndarray, lambda_star: float
) -> float:
    """min over s in {+1,-1} of ||u - s * M u_star / lambda_star||_inf."""
    if lambda_star == 0.0:
        raise DomainError("lambda_star must be nonzero")
    w = m.matvec(np.asarray(u_star, dtype=float)) / lambda_star
    u = np.asarray(u, dtype=float)
    if u.shape != w.shape:
        raise ParameterError("u and u_star must have the same length")
    return float(min(np.max(np.abs(u - w)), np.max(np.abs(u + w))))

"""Model parameters, label/graph sampling, and graph serialization.

The observation model has n vertices with hidden +/-1 community labels.  Each
unordered vertex pair is revealed independently with probability
``alpha = min(1, t*log(n)/n)``; a revealed pair is an edge (present) with
probability p1, p2, or q depending on whether both endpoints are labeled +1,
both -1, or mixed.  Unrevealed pairs are censored and never stored.
``log`` is the natural logarithm throughout the package.
"""

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import GraphParseError, ParameterError

PRESENT = 1
ABSENT = 0

# Above this reveal probability it is cheaper to flip a coin for every pair
# than to skip over censored pairs geometrically.
_DENSE_SAMPLING_CUTOFF = 0.05


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie strictly inside (0, 1), got {value}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """Parameter tuple (n, p1, p2, q, t) of the censored block model.

    The reveal probability is ``alpha = t*log(n)/n``, clamped to 1.0 when the
    raw value exceeds 1 (possible for small n combined with large t); the
    ``alpha_clamped`` property reports whether clamping occurred.
    """

    n: int
    p1: float
    p2: float
    q: float
    t: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ParameterError(f"n must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ParameterError(f"n must be at least 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("p1", "p2", "q"):
            object.__setattr__(self, name, _check_prob(name, getattr(self, name)))
        if not float(self.t) > 0.0:
            raise ParameterError(f"t must be positive, got {self.t}")
        object.__setattr__(self, "t", float(self.t))

    @property
    def alpha(self) -> float:
        return min(1.0, self.t * math.log(self.n) / self.n)

    @property
    def alpha_clamped(self) -> bool:
        return self.t * math.log(self.n) / self.n > 1.0

    @property
    def symmetric(self) -> bool:
        return self.p1 == self.p2


class ObservedGraph:
    """Immutable list of revealed pairs with present/absent status.

    Pairs are stored canonically (u < v, sorted row-major).  ``neighbors(u)``
    iterates over every vertex whose pair with u was revealed, present or
    absent, in O(deg) time.
    """

    __slots__ = ("n", "us", "vs", "present", "_indptr", "_nbr", "_nbr_present")

    def __init__(self, n: int, us: np.ndarray, vs: np.ndarray, present: np.ndarray):
        if n < 1:
            raise ParameterError(f"vertex count must be positive, got {n}")
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        present = np.asarray(present, dtype=bool)
        if not (us.shape == vs.shape == present.shape):
            raise ParameterError("pair arrays must have equal length")
        lo = np.minimum(us, vs)
        hi = np.maximum(us, vs)
        if lo.size:
            if lo.min() < 0 or hi.max() >= n:
                raise ParameterError("vertex id out of range")
            if np.any(lo == hi):
                raise ParameterError("self-pairs are not allowed")
        order = np.lexsort((hi, lo))
        lo, hi, present = lo[order], hi[order], present[order]
        if lo.size > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if np.any(dup):
                k = int(np.flatnonzero(dup)[0])
                raise ParameterError(f"duplicate pair ({lo[k]}, {hi[k]})")
        self.n = int(n)
        self.us = lo
        self.vs = hi
        self.present = present
        self._indptr = None
        self._nbr = None
        self._nbr_present = None

    @property
    def num_revealed(self) -> int:
        return self.us.size

    @property
    def num_present(self) -> int:
        return int(np.count_nonzero(self.present))

    def _build_adjacency(self):
        ends_u = np.concatenate([self.us, self.vs])
        ends_v = np.concatenate([self.vs, self.us])
        ends_s = np.concatenate([self.present, self.present])
        order = np.lexsort((ends_v, ends_u))
        ends_u, ends_v, ends_s = ends_u[order], ends_v[order], ends_s[order]
        counts = np.bincount(ends_u, minlength=self.n)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._nbr = ends_v
        self._nbr_present = ends_s

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (neighbor ids, present flags) of every revealed pair at u."""
        if not 0 <= u < self.n:
            raise ParameterError(f"vertex {u} out of range for n={self.n}")
        if self._indptr is None:
            self._build_adjacency()
        lo, hi = self._indptr[u], self._indptr[u + 1]
        return self._nbr[lo:hi], self._nbr_present[lo:hi]

    def degree_present(self) -> np.ndarray:
        """Per-vertex count of present pairs."""
        pu = self.us[self.present]
        pv = self.vs[self.present]
        return np.bincount(pu, minlength=self.n) + np.bincount(pv, minlength=self.n)

    def degree_revealed(self) -> np.ndarray:
        """Per-vertex count of revealed pairs (present or absent)."""
        return np.bincount(self.us, minlength=self.n) + np.bincount(
            self.vs, minlength=self.n
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObservedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.us.shape == other.us.shape
            and bool(
                np.all(self.us == other.us)
                and np.all(self.vs == other.vs)
                and np.all(self.present == other.present)
            )
        )

    def __repr__(self) -> str:
        return (
            f"ObservedGraph(n={self.n}, revealed={self.num_revealed}, "
            f"present={self.num_present})"
        )


def sample_labels(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n independent uniform +/-1 community labels."""
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")
    return (rng.integers(0, 2, size=n) * 2 - 1).astype(np.int8)


def _validate_labels(labels: np.ndarray, n: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ParameterError(f"labels must have length {n}, got shape {labels.shape}")
    if not np.all(np.abs(labels) == 1):
        raise ParameterError("labels must be +1 or -1")
    return labels.astype(np.int8, copy=False)


def _row_offset(i: np.ndarray, n: int) -> np.ndarray:
    # Linear index of pair (i, i+1) in the row-major enumeration of pairs u < v.
    return i * (n - 1) - (i * (i - 1)) // 2


def _decode_pair_index(ks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map row-major linear pair indices to (u, v) with u < v."""
    b = 2.0 * n - 1.0
    i = np.floor((b - np.sqrt(b * b - 8.0 * ks)) / 2.0).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    # float rounding can land one row off; fix with two bounded corrections
    for _ in range(2):
        i = np.where(_row_offset(i, n) > ks, i - 1, i)
        i = np.where(_row_offset(i + 1, n) <= ks, i + 1, i)
    off = _row_offset(i, n)
    if ks.size and (np.any(off > ks) or np.any(_row_offset(i + 1, n) <= ks)):
        raise RuntimeError("pair index decoding failed")
    return i, i + 1 + (ks - off)


def _sample_revealed_indices(
    total: int, alpha: float, rng: np.random.Generator
) -> np.ndarray:
    """Indices of an independent Bernoulli(alpha) subset of range(total).

    Uses geometric gap skipping so the cost is O(alpha*total) draws instead of
    one coin per pair.
    """
    chunks = []
    pos = -1
    while pos < total:
        batch = max(1024, int(alpha * (total - pos) * 1.2) + 16)
        gaps = rng.geometric(alpha, size=batch)
        cum = pos + np.cumsum(gaps)
        cut = int(np.searchsorted(cum, total, side="left"))
        if cut < batch:
            chunks.append(cum[:cut])
            break
        chunks.append(cum)
        pos = int(cum[-1])
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def sample_graph(
    params: ModelParams, labels: np.ndarray, rng: np.random.Generator
) -> ObservedGraph:
    """Sample a censored graph given labels.

    Every unordered pair is revealed independently with probability
    ``params.alpha``; revealed pairs get a present/absent status from the
    rate matching the endpoint labels.  Deterministic given the generator
    state.
    """
    n = params.n
    labels = _validate_labels(labels, n)
    alpha = params.alpha
    if alpha > _DENSE_SAMPLING_CUTOFF:
        us_parts, vs_parts = [], []
        for i in range(n - 1):
            hits = np.flatnonzero(rng.random(n - 1 - i) < alpha)
            if hits.size:
                us_parts.append(np.full(hits.size, i, dtype=np.int64))
                vs_parts.append(i + 1 + hits.astype(np.int64))
        if us_parts:
            us = np.concatenate(us_parts)
            vs = np.concatenate(vs_parts)
        else:
            us = np.empty(0, dtype=np.int64)
            vs = np.empty(0, dtype=np.int64)
    else:
        total = n * (n - 1) // 2
        ks = _sample_revealed_indices(total, alpha, rng)
        us, vs = _decode_pair_index(ks, n)
    ssum = labels[us].astype(np.int64) + labels[vs].astype(np.int64)
    p_edge = np.where(ssum == 2, params.p1, np.where(ssum == -2, params.p2, params.q))
    present = rng.random(us.size) < p_edge
    return ObservedGraph(n, us, vs, present)


def _open_sink(sink):
    if hasattr(sink, "write"):
        return sink, False
    return open(sink, "w", encoding="utf-8"), True


def _open_source(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8"), True


def write_graph(graph: ObservedGraph, sink) -> None:
    """Write a graph as text: header ``n <n>``, then one ``u v s`` line per
    revealed pair with u < v and s = 1 (present) or 0 (absent)."""
    fh, close = _open_sink(sink)
    try:
        fh.write(f"n {graph.n}\n")
        for u, v, s in zip(graph.us, graph.vs, graph.present):
            fh.write(f"{u} {v} {1 if s else 0}\n")
    finally:
        if close:
            fh.close()


def read_graph(source) -> ObservedGraph:
    """Parse a graph file written by :func:`write_graph`.

    Raises :class:`GraphParseError` with a line number on malformed input:
    bad header, non-integer fields, u >= v, self-loops, out-of-range ids,
    duplicates, or statuses outside {0, 1}.
    """
    fh, close = _open_source(source)
    try:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2 or parts[0] != "n":
            raise GraphParseError("expected header 'n <count>'", line=1)
        try:
            n = int(parts[1])
        except ValueError:
            raise GraphParseError(f"bad vertex count {parts[1]!r}", line=1) from None
        if n < 1:
            raise GraphParseError(f"vertex count must be positive, got {n}", line=1)
        us, vs, ps = [], [], []
        seen = set()
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            fields = raw.split()
            if len(fields) != 3:
                raise GraphParseError(f"expected 'u v s', got {raw!r}", line=lineno)
            try:
                u, v, s = int(fields[0]), int(fields[1]), int(fields[2])
            except ValueError:
                raise GraphParseError(
                    f"non-integer field in {raw!r}", line=lineno
                ) from None
            if u == v:
                raise GraphParseError(f"self-loop at vertex {u}", line=lineno)
            if not u < v:
                raise GraphParseError(f"pairs must satisfy u < v, got {u} {v}", line=lineno)
            if v >= n or u < 0:
                raise GraphParseError(f"vertex id out of range in {u} {v}", line=lineno)
            if s not in (0, 1):
                raise GraphParseError(f"status must be 0 or 1, got {s}", line=lineno)
            if (u, v) in seen:
                raise GraphParseError(f"duplicate pair ({u}, {v})", line=lineno)
            seen.add((u, v))
            us.append(u)
            vs.append(v)
            ps.append(bool(s))
        return ObservedGraph(
            n,
            np.array(us, dtype=np.int64),
            np.array(vs, dtype=np.int64),
            np.array(ps, dtype=bool),
        )
    finally:
        if close:
            fh.close()


def write_labels(labels: np.ndarray, sink) -> None:
    """Write labels as one ``i l`` line per vertex, l in {+1, -1}."""
    labels = np.asarray(labels)
    fh, close = _open_sink(sink)
    try:
        for i, l in enumerate(labels):
            fh.write(f"{i} {'+1' if l > 0 else '-1'}\n")
    finally:
        if close:
            fh.close()


def read_labels(source) -> np.ndarray:
    """Parse a label file written by :func:`write_labels`."""
    fh, close = _open_source(source)
    try:
        entries = {}
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            fields = raw.split()
            if len(fields) != 2:
                raise GraphParseError(f"expected 'i l', got {raw!r}", line=lineno)
            try:
                i, l = int(fields[0]), int(fields[1])
            except ValueError:
                raise GraphParseError(
                    f"non-integer field in {raw!r}", line=lineno
                ) from None
            if l not in (1, -1):
                raise GraphParseError(f"label must be +1 or -1, got {l}", line=lineno)
            if i in entries:
                raise GraphParseError(f"duplicate vertex id {i}", line=lineno)
            entries[i] = l
        if not entries:
            raise GraphParseError("empty label file", line=1)
        n = len(entries)
        if set(entries) != set(range(n)):
            raise GraphParseError(f"vertex ids must be exactly 0..{n - 1}")
        return np.array([entries[i] for i in range(n)], dtype=np.int8)
    finally:
        if close:
            fh.close()


def graph_to_string(graph: ObservedGraph) -> str:
    buf = io.StringIO()
    write_graph(graph, buf)
    return buf.getvalue()

"""Graph instances, stream orderings and the one-pass vertex stream.

Vertices are integer ids ``1..n`` and cluster labels are ``1..l``. Internally
every per-vertex array has length ``n + 1`` with slot 0 unused so that ids
index directly.

Offline generators always produce simple graphs. Parallel edges are only
representable (``Graph`` stores a multiplicity per pair) so that edge lists
carrying multiplicities round-trip and so that the coupled processes can be
compared against concrete instances.

Sparse sampling uses geometric skipping over the linearised pair index space
when the probability is below ``SKIP_THRESHOLD``; denser blocks are drawn pair
by pair.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .seeding import make_rng

SKIP_THRESHOLD = 0.1
_DENSE_CHUNK = 1 << 22


class Graph:
    """Immutable undirected graph with integer edge multiplicities.

    ``edges`` is either an iterable of ``(u, v)`` / ``(u, v, mult)`` tuples or a
    triple of arrays ``(us, vs, mults)``. Repeated pairs are merged by summing
    their multiplicities.
    """

    def __init__(self, n, edges=(), labels=None, multi_edge=False):
        n = int(n)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        self.n = n
        self.multi_edge = bool(multi_edge)

        us, vs, ms = _edge_arrays(edges)
        if us.size:
            if us.min() < 1 or vs.min() < 1 or us.max() > n or vs.max() > n:
                raise ValueError("edge endpoint outside 1..n")
            if np.any(us == vs):
                raise ValueError("self-loops are not allowed")
            if ms.min() < 1:
                raise ValueError("edge multiplicity must be >= 1")
        lo = np.minimum(us, vs)
        hi = np.maximum(us, vs)
        if lo.size:
            key = lo * (n + 1) + hi
            uniq, inverse = np.unique(key, return_inverse=True)
            ms = np.bincount(inverse, weights=ms).astype(np.int64)
            lo, hi = uniq // (n + 1), uniq % (n + 1)
        self._src = lo
        self._dst = hi
        self._mult = ms

        # CSR over both directions
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        mult = np.concatenate([ms, ms])
        perm = np.lexsort((dst, src))
        self._nbr = dst[perm]
        self._nbr_mult = mult[perm]
        counts = np.bincount(src, minlength=n + 1)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._degree = np.zeros(n + 1, dtype=np.int64)
        if src.size:
            self._degree[:] = np.bincount(src, weights=mult, minlength=n + 1)

        self.labels = None
        self.num_clusters = 0
        if labels is not None:
            lab = np.zeros(n + 1, dtype=np.int64)
            if isinstance(labels, dict):
                if set(labels) != set(range(1, n + 1)):
                    raise ValueError("labels must cover every vertex exactly once")
                for v, c in labels.items():
                    lab[v] = c
            else:
                arr = np.asarray(labels, dtype=np.int64)
                if arr.shape == (n + 1,):
                    arr = arr[1:]
                if arr.shape != (n,):
                    raise ValueError("labels must have one entry per vertex")
                lab[1:] = arr
            l = int(lab[1:].max())
            if lab[1:].min() < 1 or np.unique(lab[1:]).size != l:
                raise ValueError("cluster ids must form the contiguous range 1..l")
            self.labels = lab
            self.num_clusters = l

        for arr in (self._src, self._dst, self._mult, self._nbr, self._nbr_mult,
                    self._indptr, self._degree, self.labels):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def m(self):
        """Number of distinct adjacent pairs."""
        return int(self._src.size)

    @property
    def total_multiplicity(self):
        return int(self._mult.sum())

    def neighbors(self, v):
        """Return ``(ids, multiplicities)`` of the neighbours of ``v``."""
        a, b = self._indptr[v], self._indptr[v + 1]
        return self._nbr[a:b], self._nbr_mult[a:b]

    def degree(self, v):
        return int(self._degree[v])

    def multiplicity(self, u, v):
        ids, mult = self.neighbors(u)
        i = np.searchsorted(ids, v)
        if i < ids.size and ids[i] == v:
            return int(mult[i])
        return 0

    def edge_arrays(self):
        """``(u, v, mult)`` arrays with ``u < v``, sorted lexicographically."""
        return self._src, self._dst, self._mult

    def edges(self):
        for u, v, c in zip(self._src.tolist(), self._dst.tolist(), self._mult.tolist()):
            yield u, v, c

    def cluster_members(self, c):
        if self.labels is None:
            raise ValueError("graph has no cluster labels")
        return np.flatnonzero(self.labels == c)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None and other.labels is not None
            and np.array_equal(self.labels, other.labels))
        return (self.n == other.n and same_labels
                and np.array_equal(self._src, other._src)
                and np.array_equal(self._dst, other._dst)
                and np.array_equal(self._mult, other._mult))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, clusters={self.num_clusters})"


def _edge_arrays(edges):
    if isinstance(edges, tuple) and len(edges) == 3 and all(
            isinstance(e, np.ndarray) for e in edges):
        us, vs, ms = (np.asarray(e, dtype=np.int64) for e in edges)
        return us, vs, ms
    rows = [tuple(e) for e in edges]
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    us = np.array([r[0] for r in rows], dtype=np.int64)
    vs = np.array([r[1] for r in rows], dtype=np.int64)
    ms = np.array([r[2] if len(r) > 2 else 1 for r in rows], dtype=np.int64)
    return us, vs, ms


@dataclass(frozen=True)
class PlantedParams:
    n: int
    l: int
    p: float
    q: float
    sizes: tuple = None

    def __post_init__(self):
        if self.n < 1 or self.l < 1:
            raise ValueError("n and l must be positive")
        _check_prob(self.p)
        _check_prob(self.q)
        sizes = self.sizes
        if sizes is None:
            if self.l > self.n:
                raise ValueError("more clusters than vertices")
            base, extra = divmod(self.n, self.l)
            sizes = tuple(base + (1 if i < extra else 0) for i in range(self.l))
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) != self.l or min(sizes) < 1 or sum(sizes) != self.n:
            raise ValueError(f"cluster sizes {sizes} inconsistent with n={self.n}, l={self.l}")
        object.__setattr__(self, "sizes", sizes)


@dataclass(frozen=True)
class StreamOrder:
    """Arrival order: ``order[t]`` is the vertex arriving at step ``t`` (0-based)."""

    order: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.order, dtype=np.int64)
        n = arr.size
        if n == 0 or not np.array_equal(np.sort(arr), np.arange(1, n + 1)):
            raise ValueError("stream order must be a permutation of 1..n")
        arr.flags.writeable = False
        object.__setattr__(self, "order", arr)

    def __len__(self):
        return int(self.order.size)

    def __iter__(self):
        return iter(self.order.tolist())

    def tolist(self):
        return self.order.tolist()

    def positions(self):
        """``pos[v]`` = arrival step of ``v``; ``pos[0]`` is unused."""
        pos = np.empty(self.order.size + 1, dtype=np.int64)
        pos[0] = -1
        pos[self.order] = np.arange(self.order.size)
        return pos


@dataclass(frozen=True)
class StreamEvent:
    vertex: int
    neighbors: np.ndarray = field(repr=False)
    multiplicities: np.ndarray = field(repr=False)
    full_degree: int

    @property
    def revealed_count(self):
        """Revealed edges, counted with multiplicity."""
        return int(self.multiplicities.sum())

    @property
    def revealed_neighbors(self):
        return list(zip(self.neighbors.tolist(), self.multiplicities.tolist()))


def _check_prob(p):
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"probability {p} outside [0, 1]")


def _unrank_upper(r, m):
    """Map row-major ranks of pairs ``i < j < m`` back to ``(i, j)``."""
    r = np.asarray(r, dtype=np.int64)
    b = 2 * m - 1
    i = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * r, 0.0))) / 2).astype(np.int64)
    i = np.clip(i, 0, m - 2)

    def offset(x):
        return x * m - x * (x + 1) // 2

    for _ in range(3):
        up = offset(i + 1) <= r
        i = np.where(up, i + 1, i)
        down = offset(i) > r
        i = np.where(down, i - 1, i)
    j = r - offset(i) + i + 1
    return i, j


def _skip_positions(total, p, rng):
    """Positions in ``range(total)`` kept independently with probability ``p``."""
    if total <= 0 or p <= 0.0:
        return np.zeros(0, dtype=np.int64)
    mean = total * p
    batch = int(mean + 6 * math.sqrt(mean) + 16)
    chunks = []
    last = -1
    while True:
        # gaps saturate at int64 max for tiny p; any gap past ``total`` ends the scan
        gaps = np.minimum(rng.geometric(p, size=batch), total + 1)
        pos = last + np.cumsum(gaps)
        done = pos[-1] >= total
        if done:
            pos = pos[pos < total]
        chunks.append(pos)
        if done:
            break
        last = int(pos[-1])
    return np.concatenate(chunks)


def _sample_upper_pairs(m, p, rng):
    """Independent Bernoulli(p) over pairs ``0 <= i < j < m``."""
    if m < 2 or p <= 0.0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy()
    if p >= 1.0:
        i, j = np.triu_indices(m, k=1)
        return i.astype(np.int64), j.astype(np.int64)
    if p < SKIP_THRESHOLD:
        ranks = _skip_positions(m * (m - 1) // 2, p, rng)
        return _unrank_upper(ranks, m)
    rows_per_chunk = max(1, _DENSE_CHUNK // m)
    out_i, out_j = [], []
    cols = np.arange(m)
    for start in range(0, m - 1, rows_per_chunk):
        rows = np.arange(start, min(m - 1, start + rows_per_chunk))
        hit = rng.random((rows.size, m)) < p
        hit &= cols[None, :] > rows[:, None]
        ii, jj = np.nonzero(hit)
        out_i.append(rows[ii])
        out_j.append(jj)
    return np.concatenate(out_i).astype(np.int64), np.concatenate(out_j).astype(np.int64)


def generate_gnp(n, p, multi_edge=False, rng_seed=0):
    """Erdős–Rényi G(n, p); every pair included independently with probability p.

    ``multi_edge`` only tags the instance; offline draws are always simple.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_prob(p)
    rng = make_rng(rng_seed)
    i, j = _sample_upper_pairs(n, p, rng)
    return Graph(n, (i + 1, j + 1, np.ones(i.size, dtype=np.int64)), multi_edge=multi_edge)


def generate_planted(params, rng_seed=0):
    """Planted partition graph with intra-cluster probability p and inter-cluster q.

    Cluster 1 holds vertices ``1..sizes[0]``, cluster 2 the next block, etc.
    """
    rng = make_rng(rng_seed)
    sizes = np.asarray(params.sizes, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    labels = np.repeat(np.arange(1, params.l + 1), sizes)

    us, vs = [], []
    for c in range(params.l):
        i, j = _sample_upper_pairs(int(sizes[c]), params.p, rng)
        us.append(i + starts[c] + 1)
        vs.append(j + starts[c] + 1)
    # inter-cluster pairs: draw over all pairs at rate q, keep only the
    # cross-cluster ones (intra pairs were drawn above at rate p)
    if params.l > 1 and params.q > 0.0:
        i, j = _sample_upper_pairs(params.n, params.q, rng)
        keep = labels[i] != labels[j]
        us.append(i[keep] + 1)
        vs.append(j[keep] + 1)
    u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)
    return Graph(params.n, (u, v, np.ones(u.size, dtype=np.int64)), labels=labels)


def generate_cycle(n):
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    u = np.arange(1, n + 1, dtype=np.int64)
    v = u % n + 1
    return Graph(n, (u, v, np.ones(n, dtype=np.int64)))


def random_order(n, rng_seed=0):
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(rng_seed)
    return StreamOrder(rng.permutation(n) + 1)


def adversarial_cycle_order(n):
    """Odd vertices ascending, then even vertices ascending."""
    if n < 4 or n % 2:
        raise ValueError("adversarial cycle order needs an even n >= 4")
    return StreamOrder(np.concatenate([np.arange(1, n + 1, 2), np.arange(2, n + 1, 2)]))


def stream_events(g, order):
    """Yield one ``StreamEvent`` per arrival, revealing edges to earlier vertices."""
    if len(order) != g.n:
        raise ValueError(f"order has {len(order)} vertices, graph has {g.n}")
    pos = order.positions()
    for t, v in enumerate(order.order.tolist()):
        ids, mult = g.neighbors(v)
        seen = pos[ids] < t
        yield StreamEvent(v, ids[seen], mult[seen], g.degree(v))


def write_edgelist(g, fh):
    """Write ``g`` as text: ``n l`` header, ``u v mult`` lines, ``label v c`` lines."""
    fh.write(f"{g.n} {g.num_clusters}\n")
    for u, v, c in g.edges():
        fh.write(f"{u} {v} {c}\n")
    if g.labels is not None:
        for v in range(1, g.n + 1):
            fh.write(f"label {v} {int(g.labels[v])}\n")


def read_edgelist(fh):
    header = None
    us, vs, ms = [], [], []
    labels = {}
    for lineno, raw in enumerate(fh, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if header is None:
                header = (int(parts[0]), int(parts[1]))
            elif parts[0] == "label":
                labels[int(parts[1])] = int(parts[2])
            else:
                us.append(int(parts[0]))
                vs.append(int(parts[1]))
                ms.append(int(parts[2]) if len(parts) > 2 else 1)
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: cannot parse {line!r}") from exc
    if header is None:
        raise ValueError("missing 'n l' header line")
    n, l = header
    g = Graph(n, (np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64),
                  np.array(ms, dtype=np.int64)),
              labels=labels or None, multi_edge=any(c > 1 for c in ms))
    if labels and g.num_clusters != l:
        raise ValueError(f"header declares {l} clusters, labels use {g.num_clusters}")
    return g

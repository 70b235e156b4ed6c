"""Finite sinked multigraphs and their integer Laplacian linear algebra.

A :class:`SinkedMultigraph` is a connected undirected multigraph with a
distinguished absorbing sink.  Non-sink vertices are indexed 0..n-1 in a
canonical order (row-major over the box for grid graphs); the sink is
index n.  Incident edges of every vertex are laid out in CSR arrays,
sorted by target index with parallel copies consecutive and sink edges
last.  Every other module (toppling, burning, Wilson walks, rotors)
consumes this single layout, so tie-breaking rules agree across models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

SINK = "s"

#: vertex-count bound below which determinants default to exact integers
EXACT_DET_BOUND = 64


class SizeLimitError(Exception):
    """Raised when an exact/enumerative routine would exceed its budget."""


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned integer box with wired (identified) complement.

    ``lo``/``hi`` are inclusive per-axis bounds; ``gamma`` adds that many
    extra sink edges to every vertex (bulk dissipation), so all degrees
    equal ``2 d + gamma``.
    """

    lo: tuple
    hi: tuple
    gamma: int = 0

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("lo/hi must be nonempty and of equal length")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError("empty box")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @classmethod
    def box(cls, n: int, d: int = 2, gamma: int = 0) -> "GridSpec":
        """The centered box [-n, n]^d."""
        return cls(lo=(-n,) * d, hi=(n,) * d, gamma=gamma)

    @classmethod
    def interval(cls, n: int, gamma: int = 0) -> "GridSpec":
        """The 1D wired segment {1, ..., n}."""
        return cls(lo=(1,), hi=(n,), gamma=gamma)

    def points(self):
        ranges = [range(l, h + 1) for l, h in zip(self.lo, self.hi)]
        return list(product(*ranges))


class SinkedMultigraph:
    """Finite connected multigraph with a distinguished sink.

    Attributes
    ----------
    n : number of non-sink vertices; the sink has index ``n``.
    labels : canonical vertex labels (coordinates for grid graphs).
    indptr, targets : CSR layout of incident edges (both directions for
        vertex-vertex edges; sink edges appear once, at the owning vertex).
    deg : degree of each non-sink vertex (== indptr[x+1] - indptr[x]).
    """

    def __init__(self, labels, edges, grid: GridSpec | None = None):
        """`edges` is an iterable of (u_label, v_label, multiplicity);
        use the module constant SINK as a label for sink edges."""
        self.labels = list(labels)
        self.n = len(self.labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != self.n:
            raise ValueError("duplicate vertex labels")
        if SINK in self.index:
            raise ValueError("the sink label is reserved")
        self.grid = grid

        mult = {}
        for u, v, m in edges:
            if m < 0:
                raise ValueError("negative edge multiplicity")
            if m == 0:
                continue
            iu = self.n if u == SINK else self.index[u]
            iv = self.n if v == SINK else self.index[v]
            if iu == iv:
                raise ValueError("loop edges are not allowed")
            key = (min(iu, iv), max(iu, iv))
            mult[key] = mult.get(key, 0) + m
        self._mult = mult

        adj = [[] for _ in range(self.n)]
        for (iu, iv), m in mult.items():
            if iv < self.n:
                adj[iu].append((iv, m))
                adj[iv].append((iu, m))
            else:  # sink edge (sink has the largest index)
                adj[iu].append((self.n, m))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        targets = []
        for x in range(self.n):
            # neighbours in canonical order, parallel copies consecutive,
            # sink edges last
            row = sorted(adj[x], key=lambda t: (t[0] == self.n, t[0]))
            for y, m in row:
                targets.extend([y] * m)
            indptr[x + 1] = len(targets)
        self.indptr = indptr
        self.targets = np.asarray(targets, dtype=np.int64)
        self.deg = (self.indptr[1:] - self.indptr[:-1]).astype(np.int64)
        if self.n and self.deg.min() <= 0:
            raise ValueError("isolated vertex")
        self.sink_edges = np.array(
            [int(np.sum(self.targets[self.indptr[x]:self.indptr[x + 1]] == self.n))
             for x in range(self.n)],
            dtype=np.int64,
        )
        self._check_connected()

    # -- basic structure -------------------------------------------------

    def _check_connected(self):
        seen = np.zeros(self.n + 1, dtype=bool)
        stack = [self.n]
        seen[self.n] = True
        # sink's incidences are found by scanning rows (sink rows are not stored)
        sink_nbrs = [x for x in range(self.n) if self.sink_edges[x] > 0]
        if self.n > 0 and not sink_nbrs:
            raise ValueError("graph has no sink edges")
        for x in sink_nbrs:
            if not seen[x]:
                seen[x] = True
                stack.append(x)
        while stack:
            x = stack.pop()
            if x == self.n:
                continue
            for t in range(self.indptr[x], self.indptr[x + 1]):
                y = self.targets[t]
                if not seen[y]:
                    seen[y] = True
                    stack.append(y)
        if not seen.all():
            raise ValueError("graph is not connected through the sink")

    def multiplicity(self, u, v) -> int:
        iu = self.n if u == SINK else self.index[u]
        iv = self.n if v == SINK else self.index[v]
        return self._mult.get((min(iu, iv), max(iu, iv)), 0)

    def edge_slots(self, x: int):
        """CSR slot range of vertex index x."""
        return range(int(self.indptr[x]), int(self.indptr[x + 1]))

    def vertex_index(self, v) -> int:
        return self.n if v == SINK else self.index[v]

    # -- Laplacian linear algebra ----------------------------------------

    def reduced_laplacian(self, sparse: bool = False):
        """Graph Laplacian restricted to non-sink rows/columns (int64)."""
        if sparse:
            rows, cols, vals = [], [], []
            for x in range(self.n):
                rows.append(x)
                cols.append(x)
                vals.append(int(self.deg[x]))
            for (iu, iv), m in self._mult.items():
                if iv < self.n:
                    rows += [iu, iv]
                    cols += [iv, iu]
                    vals += [-m, -m]
            return scipy.sparse.csr_matrix(
                (vals, (rows, cols)), shape=(self.n, self.n), dtype=np.float64
            )
        L = np.zeros((self.n, self.n), dtype=np.int64)
        for x in range(self.n):
            L[x, x] = self.deg[x]
        for (iu, iv), m in self._mult.items():
            if iv < self.n:
                L[iu, iv] -= m
                L[iv, iu] -= m
        return L

    def integer_rows(self):
        """Reduced Laplacian as a list of python-int rows (overflow-free)."""
        L = self.reduced_laplacian()
        return [[int(v) for v in row] for row in L]

    def __repr__(self):
        return f"SinkedMultigraph(n={self.n}, edges={sum(self._mult.values())})"


def wired_box(spec: GridSpec) -> SinkedMultigraph:
    """Wired graph of a lattice box: the complement collapses to the sink.

    Every vertex ends with degree 2 d + gamma; boundary vertices make up
    the difference with sink edges, and gamma extra sink edges are added
    everywhere.
    """
    pts = spec.points()
    d = spec.dimension
    index = {p: i for i, p in enumerate(pts)}
    target_deg = 2 * d + spec.gamma
    edges = []
    for p in pts:
        lattice_inside = 0
        for axis in range(d):
            for step in (-1, 1):
                q = tuple(p[i] + (step if i == axis else 0) for i in range(d))
                if q in index:
                    lattice_inside += 1
                    if q > p:
                        edges.append((p, q, 1))
        sink_mult = target_deg - lattice_inside
        if sink_mult > 0:
            edges.append((p, SINK, sink_mult))
    return SinkedMultigraph(pts, edges, grid=spec)


# -- exact integer determinants and Smith form ---------------------------


def _bareiss_det(rows) -> int:
    """Fraction-free Gaussian elimination; exact over python ints."""
    a = [list(map(int, r)) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def det_reduced_laplacian(G: SinkedMultigraph, mode: str = "auto",
                          exact_bound: int = EXACT_DET_BOUND):
    """Determinant of the reduced Laplacian (= spanning tree count).

    mode "exact" returns a python int (requires n <= exact_bound);
    "log" returns the float log-determinant; "auto" picks by size.
    """
    if mode == "auto":
        mode = "exact" if G.n <= exact_bound else "log"
    if mode == "exact":
        if G.n > exact_bound:
            raise SizeLimitError(
                f"exact determinant limited to {exact_bound} vertices")
        val = _bareiss_det(G.integer_rows())
        if val <= 0:
            raise AssertionError("reduced Laplacian must be positive definite")
        return val
    if mode == "log":
        L = G.reduced_laplacian(sparse=True).tocsc()
        lu = scipy.sparse.linalg.splu(L, permc_spec="MMD_AT_PLUS_A")
        diag_u = lu.U.diagonal()
        logdet = float(np.sum(np.log(np.abs(diag_u))))
        return logdet
    raise ValueError(f"unknown mode {mode!r}")


def group_invariants(G: SinkedMultigraph) -> list[int]:
    """Nontrivial invariant factors d_1 | d_2 | ... of Z^V / Z^V L'.

    Smith normal form by elementary row/column reduction over python
    ints (no overflow).  The product of the factors equals det L'.
    """
    a = G.integer_rows()
    n = len(a)
    factors = []
    for k in range(n):
        # find a nonzero pivot of least absolute value in the remaining block
        piv = None
        best = None
        for i in range(k, n):
            for j in range(k, n):
                v = abs(a[i][j])
                if v and (best is None or v < best):
                    best, piv = v, (i, j)
        if piv is None:
            break
        pi, pj = piv
        a[k], a[pi] = a[pi], a[k]
        for row in a:
            row[k], row[pj] = row[pj], row[k]
        while True:
            # clear column k
            dirty = False
            for i in range(k + 1, n):
                if a[i][k]:
                    q = a[i][k] // a[k][k]
                    for j in range(k, n):
                        a[i][j] -= q * a[k][j]
                    if a[i][k]:
                        a[k], a[i] = a[i], a[k]
                        dirty = True
            # clear row k
            for j in range(k + 1, n):
                if a[k][j]:
                    q = a[k][j] // a[k][k]
                    for row in a:
                        row[j] -= q * row[k]
                    if a[k][j]:
                        for row in a:
                            row[k], row[j] = row[j], row[k]
                        dirty = True
            if not dirty:
                break
        factors.append(abs(a[k][k]))
    # enforce divisibility chain
    for i in range(len(factors)):
        for j in range(i + 1, len(factors)):
            g = math.gcd(factors[i], factors[j])
            l = factors[i] * factors[j] // g
            factors[i], factors[j] = g, l
    return [f for f in factors if f > 1]


# -- Green function -------------------------------------------------------


def _minor_det(rows, drop_row: int, drop_col: int) -> int:
    sub = [
        [v for j, v in enumerate(r) if j != drop_col]
        for i, r in enumerate(rows)
        if i != drop_row
    ]
    return _bareiss_det(sub)


def green(G: SinkedMultigraph, z, x, exact: bool | None = None):
    """Green function G(z, x) = (L')^{-1}_{zx}.

    Exact mode (default for small graphs) returns a Fraction via the
    cofactor formula; float mode solves with LU plus one step of
    iterative refinement.
    """
    iz, ix = G.vertex_index(z), G.vertex_index(x)
    if iz >= G.n or ix >= G.n:
        raise ValueError("green is defined on non-sink vertices")
    if exact is None:
        exact = G.n <= EXACT_DET_BOUND
    if exact:
        rows = G.integer_rows()
        det = _bareiss_det(rows)
        cof = _minor_det(rows, ix, iz)
        return Fraction((-1) ** (ix + iz) * cof, det)
    L = G.reduced_laplacian(sparse=True).tocsc()
    lu = scipy.sparse.linalg.splu(L)
    e = np.zeros(G.n)
    e[ix] = 1.0
    col = lu.solve(e)
    col += lu.solve(e - L @ col)  # one refinement step
    return float(col[iz])


def green_matrix(G: SinkedMultigraph) -> np.ndarray:
    """Dense float inverse of the reduced Laplacian."""
    L = G.reduced_laplacian().astype(np.float64)
    return np.linalg.inv(L)


def green_column(G: SinkedMultigraph, x) -> np.ndarray:
    """One column of the Green function via a sparse solve."""
    ix = G.vertex_index(x)
    L = G.reduced_laplacian(sparse=True).tocsc()
    lu = scipy.sparse.linalg.splu(L)
    e = np.zeros(G.n)
    e[ix] = 1.0
    col = lu.solve(e)
    col += lu.solve(e - L @ col)
    return col


# -- serialization --------------------------------------------------------


def dump_edge_list(G: SinkedMultigraph) -> str:
    """Text dump, one line per undirected edge: "u v multiplicity"."""
    lines = []
    for (iu, iv), m in sorted(G._mult.items()):
        lu = G.labels[iu] if iu < G.n else SINK
        lv = G.labels[iv] if iv < G.n else SINK
        lines.append(f"{_label_str(lu)} {_label_str(lv)} {m}")
    return "\n".join(lines) + "\n"


def _label_str(lab) -> str:
    if lab == SINK:
        return SINK
    if isinstance(lab, tuple):
        return ",".join(str(c) for c in lab)
    return str(lab)


def parse_edge_list(text: str) -> SinkedMultigraph:
    """Inverse of :func:`dump_edge_list` (labels become int tuples/ints)."""
    edges = []
    verts = []
    seen = set()

    def parse_label(tok):
        if tok == SINK:
            return SINK
        if "," in tok:
            return tuple(int(c) for c in tok.split(","))
        return int(tok)

    for line in text.strip().splitlines():
        u, v, m = line.split()
        lu, lv = parse_label(u), parse_label(v)
        for lab in (lu, lv):
            if lab != SINK and lab not in seen:
                seen.add(lab)
                verts.append(lab)
        edges.append((lu, lv, int(m)))
    verts.sort()
    return SinkedMultigraph(verts, edges)

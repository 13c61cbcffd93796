"""Node-centred median-dual grids built from triangulations.

Edge ``(j, k)`` always has ``j < k`` and its directed area vector points
from ``j`` towards ``k``.  Boundary faces are stored as half-faces: each
boundary segment contributes half of its outward normal to each end node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FREESTREAM, SLIP_WALL, NO_SLIP_WALL, OUTFLOW = 0, 1, 2, 3
BC_NAMES = {
    FREESTREAM: "freestream",
    SLIP_WALL: "slip_wall",
    NO_SLIP_WALL: "no_slip_wall",
    OUTFLOW: "outflow",
}
BC_CODES = {v: k for k, v in BC_NAMES.items()}


class GridError(ValueError):
    pass


@dataclass
class BoundaryPolyline:
    condition: str
    nodes: np.ndarray  # consecutive pairs form segments

    def __post_init__(self):
        if self.condition not in BC_CODES:
            raise GridError(f"unknown boundary condition {self.condition!r}")
        self.nodes = np.asarray(self.nodes, dtype=np.int64)


@dataclass
class Grid:
    nodes: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (T, 3), counter-clockwise
    boundaries: list[BoundaryPolyline]
    edges: np.ndarray = field(init=False)
    edge_normals: np.ndarray = field(init=False)
    volumes: np.ndarray = field(init=False)
    bnode: np.ndarray = field(init=False)
    bnormal: np.ndarray = field(init=False)
    btag: np.ndarray = field(init=False)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self._build_dual()
        self._build_boundary()
        self._build_adjacency()

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def triangle_areas(self) -> np.ndarray:
        x = self.nodes[self.triangles]
        d1 = x[:, 1] - x[:, 0]
        d2 = x[:, 2] - x[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def _build_dual(self):
        tri = self.triangles
        area = self.triangle_areas()
        bad = np.flatnonzero(~(area > 0.0))
        if bad.size:
            raise GridError(f"degenerate or inverted triangle {int(bad[0])} (area {area[bad[0]]!r})")
        n = self.n_nodes
        vol = np.zeros(n)
        np.add.at(vol, tri.ravel(), np.repeat(area / 3.0, 3))
        self.volumes = vol

        a = tri[:, [0, 1, 2]].ravel()
        b = tri[:, [1, 2, 0]].ravel()
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keys = lo * n + hi
        uniq, inv = np.unique(keys, return_inverse=True)
        self.edges = np.stack([uniq // n, uniq % n], axis=1)

        x = self.nodes
        cen = np.repeat(x[tri].mean(axis=1), 3, axis=0)
        mid = 0.5 * (x[a] + x[b])
        s = cen - mid
        nrm = np.stack([s[:, 1], -s[:, 0]], axis=1)
        d = x[hi] - x[lo]
        flip = (nrm * d).sum(axis=1) < 0.0
        nrm[flip] *= -1.0
        en = np.zeros((uniq.size, 2))
        np.add.at(en, inv, nrm)
        self.edge_normals = en

    def _build_boundary(self):
        n = self.n_nodes
        tri = self.triangles
        # map each edge key to its owning triangle's opposite vertex
        a = tri[:, [0, 1, 2]].ravel()
        b = tri[:, [1, 2, 0]].ravel()
        c = tri[:, [2, 0, 1]].ravel()
        keys = np.minimum(a, b) * n + np.maximum(a, b)
        opposite = dict(zip(keys.tolist(), c.tolist()))

        bnode, bnormal, btag = [], [], []
        x = self.nodes
        for line in self.boundaries:
            code = BC_CODES[line.condition]
            nodes = line.nodes
            for p, q in zip(nodes[:-1], nodes[1:]):
                key = min(p, q) * n + max(p, q)
                if key not in opposite:
                    raise GridError(f"boundary segment ({p}, {q}) is not a triangle edge")
                d = x[q] - x[p]
                nrm = np.array([d[1], -d[0]])
                if np.dot(nrm, x[opposite[key]] - 0.5 * (x[p] + x[q])) > 0.0:
                    nrm = -nrm
                for node in (p, q):
                    bnode.append(node)
                    bnormal.append(0.5 * nrm)
                    btag.append(code)
        self.bnode = np.array(bnode, dtype=np.int64)
        self.bnormal = np.array(bnormal, dtype=float).reshape(-1, 2)
        self.btag = np.array(btag, dtype=np.int64)

    def _build_adjacency(self):
        """CSR node-to-edge adjacency: for node j, neighbours and edge ids."""
        n = self.n_nodes
        j, k = self.edges.T
        eid = np.arange(self.n_edges)
        src = np.concatenate([j, k])
        nbr = np.concatenate([k, j])
        ids = np.concatenate([eid, eid])
        side = np.concatenate([np.zeros_like(eid), np.ones_like(eid)])
        order = np.lexsort((nbr, src))
        self.adj_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.adj_ptr, src + 1, 1)
        self.adj_ptr = np.cumsum(self.adj_ptr)
        self.adj_nbr = nbr[order]
        self.adj_edge = ids[order]
        self.adj_side = side[order]  # 0: node is edge's first node

    # --- checks -------------------------------------------------------
    def closure_defect(self) -> np.ndarray:
        """Sum of outward directed areas per node; zero for closed duals."""
        s = np.zeros((self.n_nodes, 2))
        np.add.at(s, self.edges[:, 0], self.edge_normals)
        np.add.at(s, self.edges[:, 1], -self.edge_normals)
        np.add.at(s, self.bnode, self.bnormal)
        return s

    def domain_area(self) -> float:
        return float(self.triangle_areas().sum())

    def mean_face_area(self) -> float:
        return float(np.hypot(*self.edge_normals.T).mean())

    def scaled(self, factor: float) -> "Grid":
        return Grid(self.nodes * factor, self.triangles.copy(),
                    [BoundaryPolyline(b.condition, b.nodes.copy()) for b in self.boundaries])

    def with_all_boundaries(self, condition: str = "freestream") -> "Grid":
        return Grid(self.nodes, self.triangles,
                    [BoundaryPolyline(condition, b.nodes.copy()) for b in self.boundaries])

    def boundary_nodes(self, condition: str) -> np.ndarray:
        return np.unique(self.bnode[self.btag == BC_CODES[condition]])


# --- file format --------------------------------------------------------------
#
#   NNODES NTRIA NQUAD
#   x y                        (NNODES lines, %.16e)
#   i j k                      (NTRIA lines, 1-based, counter-clockwise)
#   i j k l                    (NQUAD lines, 1-based, split along i-k on read)
#   NBOUND
#   condition NPOINTS          (per boundary block)
#   i                          (NPOINTS lines, 1-based polyline)

def _fmt(v: float) -> str:
    return format(float(v), ".16e")


def write_grid(grid: Grid, path) -> None:
    lines = [f"{grid.n_nodes} {grid.triangles.shape[0]} 0"]
    lines += [f"{_fmt(x)} {_fmt(y)}" for x, y in grid.nodes]
    lines += [f"{a + 1} {b + 1} {c + 1}" for a, b, c in grid.triangles]
    lines.append(str(len(grid.boundaries)))
    for line in grid.boundaries:
        lines.append(f"{line.condition} {line.nodes.size}")
        lines += [str(i + 1) for i in line.nodes]
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid(path) -> Grid:
    tokens = Path(path).read_text().split("\n")
    it = (ln for ln in tokens if ln.strip())
    try:
        nn, nt, nq = (int(t) for t in next(it).split())
        nodes = np.array([[float(t) for t in next(it).split()] for _ in range(nn)])
        tris = [[int(t) - 1 for t in next(it).split()] for _ in range(nt)]
        for _ in range(nq):
            a, b, c, d = (int(t) - 1 for t in next(it).split())
            tris += [[a, b, c], [a, c, d]]
        nb = int(next(it))
        bounds = []
        for _ in range(nb):
            name, npts = next(it).split()
            pts = [int(next(it)) - 1 for _ in range(int(npts))]
            bounds.append(BoundaryPolyline(name, np.array(pts)))
    except (StopIteration, ValueError) as exc:
        raise GridError(f"malformed grid file {path}: {exc}") from exc
    return Grid(nodes.reshape(nn, 2), np.array(tris, dtype=np.int64).reshape(-1, 3), bounds)

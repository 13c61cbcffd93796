"""Generators for the airfoil O-grid and the flat-plate grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BoundaryPolyline, Grid, GridError


@dataclass(frozen=True)
class JoukowskyGridSpec:
    """O-grid around a Joukowsky airfoil of unit chord.

    ``n_circumferential`` counts the closing point twice (129 means 128
    distinct points around the airfoil).  The circle centre in the mapping
    plane is ``(-thickness, camber)``.
    """

    n_circumferential: int = 129
    n_radial: int = 33
    thickness: float = 0.1
    camber: float = 0.0
    outer_radius: float = 20.0  # chords

    def validate(self):
        nc = self.n_circumferential - 1
        if nc < 8 or nc % 2:
            raise GridError("n_circumferential must give an even count >= 8 of distinct points")
        if self.n_radial < 4:
            raise GridError("n_radial must be >= 4")
        if not self.outer_radius > 5.0:
            raise GridError("outer radius must exceed 5 chords")
        if not self.thickness > 0.0:
            raise GridError("zero thickness offset maps the circle onto a flat segment")


@dataclass(frozen=True)
class FlatPlateGridSpec:
    nx: int = 137
    ny: int = 97
    plate_start: float = 0.0
    x_min: float = -0.3
    x_max: float = 1.2
    y_max: float = 1.0
    stretching: float = 1.04

    def validate(self):
        if self.nx < 4 or self.ny < 4:
            raise GridError("nx and ny must be >= 4")
        if not self.stretching >= 1.0:
            raise GridError("stretching factor must be >= 1")
        if not (self.x_min < self.plate_start < self.x_max):
            raise GridError("plate start must lie strictly inside the x extent")
        if not self.y_max > 0.0:
            raise GridError("y_max must be positive")


def _structured_triangles(ni, nj, periodic_i=False, nodes=None, orientation=1.0):
    """Split each (i, j) quad along its (i, j)-(i+1, j+1) diagonal.

    Node index is ``j * ni + i``; with ``periodic_i`` the last column wraps.
    Given ``nodes``, a quad whose fixed split would produce a triangle of the
    wrong ``orientation`` (a non-convex quad) is split along the other diagonal.
    """
    ci = ni if periodic_i else ni - 1
    i, j = np.meshgrid(np.arange(ci), np.arange(nj - 1), indexing="xy")
    i = i.ravel()
    j = j.ravel()
    ip = (i + 1) % ni
    a = j * ni + i
    b = j * ni + ip
    c = (j + 1) * ni + ip
    d = (j + 1) * ni + i
    t1 = np.stack([a, b, c], 1)
    t2 = np.stack([a, c, d], 1)
    if nodes is not None:
        def ok(t):
            return orientation * _signed_area2(nodes, t) > 0.0
        alt1 = np.stack([a, b, d], 1)
        alt2 = np.stack([b, c, d], 1)
        flip = ~(ok(t1) & ok(t2)) & ok(alt1) & ok(alt2)
        t1[flip] = alt1[flip]
        t2[flip] = alt2[flip]
    return np.concatenate([t1, t2])


def _signed_area2(nodes, tris):
    x = nodes[tris]
    d1 = x[:, 1] - x[:, 0]
    d2 = x[:, 2] - x[:, 0]
    return d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]


def _check_areas(nodes, tris):
    area = _signed_area2(nodes, tris)
    bad = np.flatnonzero(~(area > 0.0))
    if bad.size:
        raise GridError(f"degenerate cell {int(bad[0])} in generated grid")


def joukowsky_surface(spec: JoukowskyGridSpec, theta):
    """Map circle points to the unit-chord airfoil; also returns the affine map."""
    c = complex(-spec.thickness, spec.camber)
    rc = abs(1.0 - c)
    zeta = c + rc * np.exp(1j * theta)
    z = zeta + 1.0 / zeta
    return z, c, rc


def generate_joukowsky_ogrid(spec: JoukowskyGridSpec = JoukowskyGridSpec()) -> Grid:
    spec.validate()
    nt = spec.n_circumferential - 1
    nr = spec.n_radial
    theta = 2.0 * np.pi * np.arange(nt) / nt
    dense = np.linspace(0.0, 2.0 * np.pi, 4001)
    zs, c, rc = joukowsky_surface(spec, dense)
    x_le, x_te = zs.real.min(), zs.real.max()
    chord = x_te - x_le

    # geometric radial spacing in the circle plane (conformal => near-square cells)
    s_max = spec.outer_radius * chord / rc
    s = s_max ** (np.arange(nr) / (nr - 1))
    zeta = c + rc * s[:, None] * np.exp(1j * theta)[None, :]
    z = (zeta + 1.0 / zeta - x_le) / chord
    if spec.camber == 0.0:
        # exact mirror symmetry: theta and 2*pi - theta give conjugate points
        half = nt // 2
        z[:, nt - half + 1:] = np.conj(z[:, 1:half][:, ::-1])
        z[:, 0] = z[:, 0].real
        z[:, half] = z[:, half].real
    nodes = np.stack([z.real.ravel(), z.imag.ravel()], axis=1)

    # theta runs counter-clockwise and s outward, so reverse to get CCW cells
    tris = _structured_triangles(nt, nr, periodic_i=True, nodes=nodes,
                                 orientation=-1.0)[:, ::-1].copy()
    _check_areas(nodes, tris)
    wall = np.append(np.arange(nt), 0)
    outer = np.append(np.arange(nt), 0) + (nr - 1) * nt
    return Grid(nodes, tris, [BoundaryPolyline("slip_wall", wall),
                              BoundaryPolyline("freestream", outer)])


def _stretched(n, length, ratio):
    if ratio == 1.0:
        return length * np.arange(n) / (n - 1)
    d0 = length * (ratio - 1.0) / (ratio ** (n - 1) - 1.0)
    y = np.concatenate([[0.0], np.cumsum(d0 * ratio ** np.arange(n - 1))])
    y[-1] = length
    return y


def generate_flatplate_grid(spec: FlatPlateGridSpec = FlatPlateGridSpec()) -> Grid:
    spec.validate()
    nx, ny = spec.nx, spec.ny
    span = spec.x_max - spec.x_min
    i0 = int(round((spec.plate_start - spec.x_min) / span * (nx - 1)))
    i0 = min(max(i0, 1), nx - 2)
    x = np.concatenate([
        np.linspace(spec.x_min, spec.plate_start, i0 + 1)[:-1],
        np.linspace(spec.plate_start, spec.x_max, nx - i0),
    ])
    y = _stretched(ny, spec.y_max, spec.stretching)
    X, Y = np.meshgrid(x, y, indexing="xy")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    tris = _structured_triangles(nx, ny)
    _check_areas(nodes, tris)

    idx = np.arange(nx * ny).reshape(ny, nx)
    bounds = [
        BoundaryPolyline("slip_wall", idx[0, : i0 + 1]),
        BoundaryPolyline("no_slip_wall", idx[0, i0:]),
        BoundaryPolyline("outflow", idx[:, -1]),
        BoundaryPolyline("freestream", idx[-1, ::-1]),
        BoundaryPolyline("freestream", idx[::-1, 0]),
    ]
    return Grid(nodes, tris, bounds)


def generate_rectangle_grid(nx: int, ny: int, x_min=0.0, x_max=1.0, y_min=0.0, y_max=1.0,
                            condition: str = "freestream") -> Grid:
    """Uniform triangulated rectangle with a single boundary condition."""
    if nx < 2 or ny < 2:
        raise GridError("a rectangle grid needs at least 2 x 2 nodes")
    x = np.linspace(x_min, x_max, nx)
    y = np.linspace(y_min, y_max, ny)
    X, Y = np.meshgrid(x, y, indexing="xy")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    tris = _structured_triangles(nx, ny)
    _check_areas(nodes, tris)
    idx = np.arange(nx * ny).reshape(ny, nx)
    loop = np.concatenate([idx[0, :], idx[1:, -1], idx[-1, -2::-1], idx[-2::-1, 0]])
    return Grid(nodes, tris, [BoundaryPolyline(condition, loop)])

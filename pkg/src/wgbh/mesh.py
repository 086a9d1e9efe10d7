"""Conforming triangular meshes: generation, red refinement, text I/O.

Local edge ``i`` of a triangle is the edge opposite its vertex ``i``.  Every
global edge is stored as a sorted vertex pair ``(lo, hi)``; its tangent runs
from ``lo`` to ``hi`` and its global unit normal is the tangent rotated
clockwise.  ``tri_sign[k, i]`` is +1 when that global normal points out of
triangle ``k`` and -1 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class MeshError(ValueError):
    """Raised for malformed mesh input or broken topology."""


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counter-clockwise
    edges: np.ndarray = field(init=False)  # (ne, 2), sorted pairs
    tri_edges: np.ndarray = field(init=False)  # (nt, 3)
    tri_sign: np.ndarray = field(init=False)  # (nt, 3), +-1
    edge_tris: np.ndarray = field(init=False)  # (ne, 2), -1 marks no neighbour
    boundary_edge: np.ndarray = field(init=False)  # (ne,) bool

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=float)
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise MeshError("vertices must have shape (nv, 2)")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError("triangles must have shape (nt, 3)")
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise MeshError("triangle references a missing vertex")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

        # local edge i joins vertices i+1 and i+2
        a = tris[:, [1, 2, 0]]
        b = tris[:, [2, 0, 1]]
        lo = np.minimum(a, b).ravel()
        hi = np.maximum(a, b).ravel()
        keys = lo * len(verts) + hi
        uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("non-conforming mesh: an edge is shared by more than two triangles")
        edges = np.column_stack([uniq // len(verts), uniq % len(verts)])
        tri_edges = inverse.reshape(-1, 3)
        tri_sign = np.where(a < b, 1, -1).astype(np.int64)

        edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
        owner = np.repeat(np.arange(len(tris)), 3)
        order = np.argsort(inverse, kind="stable")
        sorted_edges = inverse[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = sorted_edges[1:] != sorted_edges[:-1]
        edge_tris[sorted_edges[first], 0] = owner[order[first]]
        edge_tris[sorted_edges[~first], 1] = owner[order[~first]]
        # an interior edge must be traversed in opposite directions by its two triangles
        flat_sign = tri_sign.ravel()
        both = sorted_edges[~first]
        if both.size:
            s0 = flat_sign[order[first]][np.searchsorted(sorted_edges[first], both)]
            s1 = flat_sign[order[~first]]
            if np.any(s0 == s1):
                raise MeshError("inconsistent orientation across an interior edge")

        for name, value in [
            ("edges", edges),
            ("tri_edges", tri_edges),
            ("tri_sign", tri_sign),
            ("edge_tris", edge_tris),
            ("boundary_edge", edge_tris[:, 1] < 0),
        ]:
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        verts.setflags(write=False)
        tris.setflags(write=False)

    # -- sizes -------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    # -- geometry ----------------------------------------------------------
    @cached_property
    def corners(self) -> np.ndarray:
        """Vertex coordinates per triangle, shape (nt, 3, 2)."""
        return self.vertices[self.triangles]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.corners
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Global unit normal of each edge (tangent lo->hi rotated clockwise)."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        n = np.column_stack([d[:, 1], -d[:, 0]])
        return n / np.hypot(n[:, 0], n[:, 1])[:, None]

    @cached_property
    def edge_h(self) -> np.ndarray:
        """Per-edge length scale: the largest h_K among adjacent triangles."""
        hk = self.h_per_tri
        h = hk[self.edge_tris[:, 0]]
        inner = self.edge_tris[:, 1] >= 0
        h[inner] = np.maximum(h[inner], hk[self.edge_tris[inner, 1]])
        return h

    @cached_property
    def h_per_tri(self) -> np.ndarray:
        return self.edge_lengths[self.tri_edges].max(axis=1)

    @property
    def h(self) -> float:
        return float(self.h_per_tri.max())

    def boundary_outward_normals(self) -> np.ndarray:
        """Outward unit normals for the boundary edges, in ``boundary_edge`` order."""
        idx = np.flatnonzero(self.boundary_edge)
        tri = self.edge_tris[idx, 0]
        local = np.argmax(self.tri_edges[tri] == idx[:, None], axis=1)
        sign = self.tri_sign[tri, local]
        return self.edge_normals[idx] * sign[:, None]

    # -- checks ------------------------------------------------------------
    def check(self) -> None:
        """Raise MeshError unless the mesh is a valid conforming triangulation."""
        if np.any(self.signed_areas <= 0):
            raise MeshError("triangle with non-positive signed area")
        counts = np.bincount(self.tri_edges.ravel(), minlength=self.n_edges)
        if np.any((counts < 1) | (counts > 2)):
            raise MeshError("edge multiplicity outside {1, 2}")
        _check_no_hanging_nodes(self)


def _check_no_hanging_nodes(mesh: Mesh, tol: float = 1e-10) -> None:
    # a hanging vertex always sits in the relative interior of some boundary edge
    bnd = mesh.edges[mesh.boundary_edge]
    if not len(bnd):
        return
    v = mesh.vertices
    for chunk in np.array_split(np.arange(len(bnd)), max(1, len(bnd) // 256)):
        a = v[bnd[chunk, 0]][:, None, :]
        d = v[bnd[chunk, 1]][:, None, :] - a
        rel = v[None, :, :] - a
        L2 = np.sum(d * d, axis=2)
        t = np.sum(rel * d, axis=2) / L2
        cross = rel[..., 0] * d[..., 1] - rel[..., 1] * d[..., 0]
        on_line = np.abs(cross) <= tol * L2
        inside = (t > tol) & (t < 1 - tol)
        if np.any(on_line & inside):
            raise MeshError("non-conforming mesh: hanging node on an edge")


def generate_unit_square(n: int, jitter: float = 0.0, seed: int = 0) -> Mesh:
    """Structured mesh of [0,1]^2 with 2n^2 triangles and jittered interior vertices.

    Each grid cell is split along its (i, j)-(i+1, j+1) diagonal.  Interior
    vertices move by at most ``jitter / n`` in a random direction; the
    generator is seeded so the result is reproducible.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= jitter <= 0.3:
        raise ValueError("jitter must lie in [0, 0.3]")
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    if jitter > 0 and n > 1:
        rng = np.random.default_rng(seed)
        ij = np.arange(len(verts))
        ix, iy = ij % (n + 1), ij // (n + 1)
        interior = (ix > 0) & (ix < n) & (iy > 0) & (iy < n)
        k = int(interior.sum())
        radius = jitter / n * np.sqrt(rng.uniform(0.0, 1.0, k))
        angle = rng.uniform(0.0, 2 * np.pi, k)
        verts[interior] += radius[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    v00 = (j * (n + 1) + i).ravel()
    v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
    tris = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    return Mesh(verts, tris)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: split every triangle into four through its edge midpoints."""
    v = mesh.vertices
    mid = 0.5 * (v[mesh.edges[:, 0]] + v[mesh.edges[:, 1]])
    verts = np.vstack([v, mid])
    m = mesh.tri_edges + mesh.n_vertices  # m[:, i] is the midpoint opposite vertex i
    t = mesh.triangles
    children = np.stack(
        [
            np.column_stack([t[:, 0], m[:, 2], m[:, 1]]),
            np.column_stack([m[:, 2], t[:, 1], m[:, 0]]),
            np.column_stack([m[:, 1], m[:, 0], t[:, 2]]),
            np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return Mesh(verts, children)


# -- text format -----------------------------------------------------------

def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _parse_header(lines, what: str):
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise MeshError(f"{what} file is empty") from None
    try:
        return [int(x) for x in head]
    except ValueError:
        raise MeshError(f"{what} header (line {lineno}) is not integer") from None


def load_mesh(node_text: str, ele_text: str, reorient: bool = True) -> Mesh:
    """Build a mesh from node/ele text (1-based, whitespace separated).

    Clockwise triangles are flipped when ``reorient`` is true and rejected
    otherwise.  Boundary markers in the node file are read but ignored;
    boundary edges come from adjacency.
    """
    lines = _data_lines(node_text)
    head = _parse_header(lines, "node")
    if len(head) < 2 or head[1] != 2:
        raise MeshError("node header must read '<nv> 2 0 <0|1>'")
    nv = head[0]
    verts = np.full((nv, 2), np.nan)
    for lineno, tok in lines:
        try:
            idx, x, y = int(tok[0]), float(tok[1]), float(tok[2])
        except (ValueError, IndexError):
            raise MeshError(f"malformed node line {lineno}") from None
        if not 1 <= idx <= nv:
            raise MeshError(f"node index {idx} out of range on line {lineno}")
        verts[idx - 1] = (x, y)
    if np.isnan(verts).any():
        raise MeshError("node file does not define every vertex")

    lines = _data_lines(ele_text)
    head = _parse_header(lines, "ele")
    if len(head) < 2 or head[1] != 3:
        raise MeshError("ele header must read '<nt> 3 0'")
    nt = head[0]
    tris = np.full((nt, 3), -1, dtype=np.int64)
    for lineno, tok in lines:
        try:
            idx, *vs = (int(x) for x in tok[:4])
        except ValueError:
            raise MeshError(f"malformed ele line {lineno}") from None
        if len(vs) != 3 or not 1 <= idx <= nt:
            raise MeshError(f"malformed ele line {lineno}")
        if min(vs) < 1 or max(vs) > nv:
            raise MeshError(f"ele line {lineno} references a missing vertex")
        tris[idx - 1] = np.array(vs) - 1
    if np.any(tris < 0):
        raise MeshError("ele file does not define every triangle")
    if len(np.unique(np.sort(tris, axis=1), axis=0)) != nt:
        raise MeshError("duplicate triangle")
    if np.any(np.array([len(set(t)) for t in tris.tolist()]) < 3):
        raise MeshError("triangle with repeated vertex")

    p = verts[tris]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(area == 0):
        raise MeshError("degenerate triangle")
    cw = area < 0
    if cw.any():
        if not reorient:
            raise MeshError(f"{int(cw.sum())} clockwise triangle(s)")
        tris[cw] = tris[cw][:, [0, 2, 1]]
    mesh = Mesh(verts, tris)
    mesh.check()
    return mesh


def dump_mesh(mesh: Mesh) -> tuple[str, str]:
    """Return (node_text, ele_text) for ``mesh`` in the format read by load_mesh."""
    node = [f"{mesh.n_vertices} 2 0 0"]
    node += [f"{i + 1} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.vertices)]
    ele = [f"{mesh.n_triangles} 3 0"]
    ele += [f"{i + 1} {a + 1} {b + 1} {c + 1}" for i, (a, b, c) in enumerate(mesh.triangles)]
    return "\n".join(node) + "\n", "\n".join(ele) + "\n"

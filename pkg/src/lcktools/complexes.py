"""Finite abstract simplicial 2-complexes, subcomplexes, covers and edge paths.

Everything here is immutable after construction and safe to share across
threads.  Vertices are the integers 0..n-1; edges are sorted pairs and
triangles sorted triples.  Face closure (every triangle has its three edges)
is enforced at build time.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class SimplicialComplex:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    triangles: tuple[tuple[int, int, int], ...]

    @property
    def vertices(self) -> range:
        return range(self.n_vertices)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + len(self.triangles)

    def has_edge(self, u: int, v: int) -> bool:
        return tuple(sorted((u, v))) in _edge_set(self)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return _adjacency(self).get(v, ())


@functools.lru_cache(maxsize=None)
def _edge_set(cx: SimplicialComplex) -> frozenset[tuple[int, int]]:
    return frozenset(cx.edges)


@functools.lru_cache(maxsize=None)
def _adjacency(cx: SimplicialComplex) -> dict[int, tuple[int, ...]]:
    adj: dict[int, list[int]] = {v: [] for v in cx.vertices}
    for u, v in cx.edges:
        adj[u].append(v)
        adj[v].append(u)
    return {v: tuple(sorted(ws)) for v, ws in adj.items()}


@functools.lru_cache(maxsize=None)
def _triangles_at(cx: SimplicialComplex) -> dict[int, tuple[tuple[int, int, int], ...]]:
    at: dict[int, list[tuple[int, int, int]]] = {v: [] for v in cx.vertices}
    for t in cx.triangles:
        for v in t:
            at[v].append(t)
    return {v: tuple(ts) for v, ts in at.items()}


def build_complex(
    vertex_count: int,
    edges: Iterable[Sequence[int]],
    triangles: Iterable[Sequence[int]] = (),
) -> SimplicialComplex:
    """Validate and build a complex; triangle edges are auto-inserted."""
    if vertex_count < 0:
        raise ValidationError("vertex count must be nonnegative")

    def check_vertex(i: int, simplex) -> None:
        if not isinstance(i, int) or not 0 <= i < vertex_count:
            raise ValidationError(f"vertex {i} of simplex {tuple(simplex)} out of range [0, {vertex_count})")

    edge_set: set[tuple[int, int]] = set()
    for e in edges:
        if len(e) != 2 or e[0] == e[1]:
            raise ValidationError(f"degenerate edge {tuple(e)}")
        for i in e:
            check_vertex(i, e)
        key = tuple(sorted(e))
        if key in edge_set:
            raise ValidationError(f"duplicate edge {key}")
        edge_set.add(key)

    tri_set: set[tuple[int, int, int]] = set()
    for t in triangles:
        if len(t) != 3 or len(set(t)) != 3:
            raise ValidationError(f"degenerate triangle {tuple(t)}")
        for i in t:
            check_vertex(i, t)
        key = tuple(sorted(t))
        if key in tri_set:
            raise ValidationError(f"duplicate triangle {key}")
        tri_set.add(key)
        a, b, c = key
        edge_set.update(((a, b), (a, c), (b, c)))

    return SimplicialComplex(vertex_count, tuple(sorted(edge_set)), tuple(sorted(tri_set)))


@dataclass(frozen=True)
class Subcomplex:
    """A subcomplex with explicit simplex sets.

    Not necessarily induced: a closed vertex star keeps only the simplices
    meeting the star, which on a hollow triangle is a proper subset of the
    induced subcomplex on the same vertices.
    """

    parent: SimplicialComplex
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    triangles: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        vs = set(self.vertices)
        if not vs:
            raise ValidationError("subcomplex must be nonempty")
        parent_edges = _edge_set(self.parent)
        parent_tris = set(self.parent.triangles)
        for v in vs:
            if not 0 <= v < self.parent.n_vertices:
                raise ValidationError(f"subcomplex vertex {v} not in parent")
        for e in self.edges:
            if e not in parent_edges:
                raise ValidationError(f"subcomplex edge {e} not in parent")
            if not set(e) <= vs:
                raise ValidationError(f"subcomplex edge {e} has endpoint outside vertex set")
        own_edges = set(self.edges)
        for t in self.triangles:
            if t not in parent_tris:
                raise ValidationError(f"subcomplex triangle {t} not in parent")
            a, b, c = t
            for e in ((a, b), (a, c), (b, c)):
                if e not in own_edges:
                    raise ValidationError(f"subcomplex triangle {t} missing edge {e}")

    def has_edge(self, u: int, v: int) -> bool:
        return tuple(sorted((u, v))) in set(self.edges)

    def neighbors_within(self, v: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return sorted(out)


def induced_subcomplex(parent: SimplicialComplex, vertices: Iterable[int]) -> Subcomplex:
    """The largest subcomplex on the given vertices (edge/triangle iff all vertices in)."""
    vs = frozenset(vertices)
    edges = tuple(e for e in parent.edges if set(e) <= vs)
    tris = tuple(t for t in parent.triangles if set(t) <= vs)
    return Subcomplex(parent, tuple(sorted(vs)), edges, tris)


def closed_star(parent: SimplicialComplex, v: int) -> Subcomplex:
    """Faces of all simplices containing v."""
    tris = _triangles_at(parent).get(v, ())
    verts = {v}
    edges: set[tuple[int, int]] = set()
    for w in parent.neighbors(v):
        verts.add(w)
        edges.add(tuple(sorted((v, w))))
    for t in tris:
        verts.update(t)
        a, b, c = t
        edges.update(((a, b), (a, c), (b, c)))
    return Subcomplex(parent, tuple(sorted(verts)), tuple(sorted(edges)), tuple(sorted(tris)))


def intersect_subcomplexes(a: Subcomplex, b: Subcomplex) -> Subcomplex | None:
    """Common simplices of two subcomplexes of the same parent; None if no vertices."""
    if a.parent != b.parent:
        raise ValidationError("subcomplexes live on different parents")
    vs = set(a.vertices) & set(b.vertices)
    if not vs:
        return None
    edges = tuple(sorted(set(a.edges) & set(b.edges)))
    tris = tuple(sorted(set(a.triangles) & set(b.triangles)))
    return Subcomplex(a.parent, tuple(sorted(vs)), edges, tris)


def connected_components(sub: Subcomplex) -> list[Subcomplex]:
    """Maximal edge-connected pieces, each as a subcomplex; ordered by least vertex."""
    adj: dict[int, list[int]] = {v: [] for v in sub.vertices}
    for u, v in sub.edges:
        adj[u].append(v)
        adj[v].append(u)
    seen: set[int] = set()
    components: list[Subcomplex] = []
    for start in sub.vertices:
        if start in seen:
            continue
        queue = [start]
        seen.add(start)
        comp = {start}
        while queue:
            u = queue.pop(0)
            for w in sorted(adj[u]):
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    queue.append(w)
        edges = tuple(e for e in sub.edges if set(e) <= comp)
        tris = tuple(t for t in sub.triangles if set(t) <= comp)
        components.append(Subcomplex(sub.parent, tuple(sorted(comp)), edges, tris))
    return components


@dataclass(frozen=True)
class Cover:
    parent: SimplicialComplex
    charts: tuple[Subcomplex, ...]

    def __post_init__(self):
        covered_vertices: set[int] = set()
        covered_edges: set[tuple[int, int]] = set()
        covered_tris: set[tuple[int, int, int]] = set()
        for chart in self.charts:
            if chart.parent != self.parent:
                raise ValidationError("chart belongs to a different parent complex")
            covered_vertices.update(chart.vertices)
            covered_edges.update(chart.edges)
            covered_tris.update(chart.triangles)
        if covered_vertices != set(self.parent.vertices):
            missing = sorted(set(self.parent.vertices) - covered_vertices)
            raise ValidationError(f"cover misses vertices {missing}")
        if covered_edges != set(self.parent.edges):
            missing = sorted(set(self.parent.edges) - covered_edges)
            raise ValidationError(f"cover misses edges {missing}")
        if covered_tris != set(self.parent.triangles):
            missing = sorted(set(self.parent.triangles) - covered_tris)
            raise ValidationError(f"cover misses triangles {missing}")

    def charts_with_edge(self, u: int, v: int) -> list[int]:
        e = tuple(sorted((u, v)))
        return [i for i, chart in enumerate(self.charts) if e in set(chart.edges)]


def star_cover(cx: SimplicialComplex) -> Cover:
    """One chart per vertex: its closed star."""
    return Cover(cx, tuple(closed_star(cx, v) for v in cx.vertices))


def single_chart_cover(cx: SimplicialComplex) -> Cover:
    return Cover(cx, (Subcomplex(cx, tuple(cx.vertices), cx.edges, cx.triangles),))


def refine_cover(cover: Cover) -> Cover:
    """Subdivide every chart into the closed stars of its vertices.

    Every simplex of a chart contains its own least vertex, hence lies in that
    vertex's star within the chart, so the result is again a cover.
    """
    charts: list[Subcomplex] = []
    for chart in cover.charts:
        edge_set = set(chart.edges)
        tris_at: dict[int, list[tuple[int, int, int]]] = {v: [] for v in chart.vertices}
        for t in chart.triangles:
            for v in t:
                tris_at[v].append(t)
        for v in chart.vertices:
            verts = {v}
            edges: set[tuple[int, int]] = set()
            for u, w in edge_set:
                if v in (u, w):
                    verts.update((u, w))
                    edges.add((u, w))
            tris = tuple(sorted(tris_at[v]))
            for t in tris:
                verts.update(t)
                a, b, c = t
                edges.update(((a, b), (a, c), (b, c)))
            charts.append(Subcomplex(chart.parent, tuple(sorted(verts)), tuple(sorted(edges)), tris))
    return Cover(cover.parent, tuple(charts))


@dataclass(frozen=True)
class EdgePath:
    """A vertex sequence whose consecutive pairs are edges; a single vertex is allowed."""

    complex: SimplicialComplex
    vertices: tuple[int, ...]

    def __post_init__(self):
        if not self.vertices:
            raise ValidationError("path must contain at least one vertex")
        for v in self.vertices:
            if not 0 <= v < self.complex.n_vertices:
                raise ValidationError(f"path vertex {v} out of range")
        for u, v in zip(self.vertices, self.vertices[1:]):
            if not self.complex.has_edge(u, v):
                raise ValidationError(f"consecutive path vertices ({u}, {v}) are not an edge")

    def __len__(self) -> int:
        return len(self.vertices) - 1

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def reversed(self) -> "EdgePath":
        return EdgePath(self.complex, tuple(reversed(self.vertices)))

    def concat(self, other: "EdgePath") -> "EdgePath":
        if other.complex != self.complex:
            raise ValidationError("paths live on different complexes")
        if self.end != other.start:
            raise ValidationError(f"cannot concatenate: path ends at {self.end}, next starts at {other.start}")
        return EdgePath(self.complex, self.vertices + other.vertices[1:])


def elementary_homotopy_moves(path: EdgePath, cx: SimplicialComplex) -> list[EdgePath]:
    """All paths one elementary move away, endpoints fixed.

    Moves: delete or insert a backtrack v,w,v; swap two sides of a triangle
    for the third, in either direction.  The move relation is symmetric.
    """
    if path.complex != cx:
        raise ValidationError("path does not live on the given complex")
    vs = path.vertices
    tri_set = set(cx.triangles)
    out: list[EdgePath] = []
    seen: set[tuple[int, ...]] = set()

    def emit(seq: tuple[int, ...]) -> None:
        if seq not in seen:
            seen.add(seq)
            out.append(EdgePath(cx, seq))

    # backtrack deletions v,w,v -> v
    for i in range(len(vs) - 2):
        if vs[i] == vs[i + 2]:
            emit(vs[: i + 1] + vs[i + 3 :])
    # backtrack insertions at every position
    for i in range(len(vs)):
        for w in cx.neighbors(vs[i]):
            emit(vs[: i + 1] + (w, vs[i]) + vs[i + 1 :])
    # triangle contraction: a,b,c -> a,c when {a,b,c} is a triangle
    for i in range(len(vs) - 2):
        a, b, c = vs[i], vs[i + 1], vs[i + 2]
        if len({a, b, c}) == 3 and tuple(sorted((a, b, c))) in tri_set:
            emit(vs[: i + 1] + vs[i + 2 :])
    # triangle expansion: a,c -> a,b,c for each triangle {a,b,c}
    for i in range(len(vs) - 1):
        a, c = vs[i], vs[i + 1]
        for t in tri_set:
            if a in t and c in t:
                (b,) = set(t) - {a, c}
                emit(vs[: i + 1] + (b,) + vs[i + 1 :])
    return out

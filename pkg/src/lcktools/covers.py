"""Universal covers of finite 2-complexes and their deck actions.

The cover's vertex set is (base vertex, fiber element).  Fiber elements are
deck-group elements: coset numbers when bounded coset enumeration closes the
group (the cover is then complete), or canonical reduced words of length at
most ``radius`` when it does not (the cover is then truncated and operations
that need missing cells raise TruncationError instead of guessing).

Traversing a base edge u -> v multiplies the fiber element on the right by
the edge label; deck transformations multiply on the left, so they commute
with the projection.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .complexes import EdgePath, SimplicialComplex, build_complex
from .errors import DegenerateCoverError, TruncationError, ValidationError
from .groups import (
    IDENTITY,
    CosetTable,
    PresentedGroup,
    Word,
    coset_enumeration,
    edge_path_group,
    reduce_word,
    shortlex_key,
    word_ball,
)

Cell = Union[int, tuple[int, ...]]


@dataclass(frozen=True)
class CoveringMap:
    base: SimplicialComplex
    total: SimplicialComplex
    presentation: PresentedGroup
    elements: tuple            # fiber tokens: ints (complete) or words (truncated)
    truncated: bool
    radius: Optional[int]
    coset_table: Optional[CosetTable]
    canonical: Optional[dict]  # word -> canonical word, truncated mode only

    @property
    def basepoint(self) -> int:
        return self.presentation.basepoint

    @property
    def n_base_vertices(self) -> int:
        return self.base.n_vertices

    @property
    def deck_order(self) -> Optional[int]:
        return None if self.truncated else len(self.elements)

    def vertex_index(self, base_vertex: int, element) -> int:
        return _element_pos(self)[element] * self.base.n_vertices + base_vertex

    def vertex_pair(self, total_vertex: int) -> tuple[int, object]:
        e, v = divmod(total_vertex, self.base.n_vertices)
        return v, self.elements[e]

    @property
    def basepoint_lift(self) -> int:
        identity = 0 if not self.truncated else IDENTITY
        return self.vertex_index(self.basepoint, identity)

    def project_vertex(self, total_vertex: int) -> int:
        return total_vertex % self.base.n_vertices

    def project_cell(self, cell: Cell) -> Cell:
        if isinstance(cell, int):
            return self.project_vertex(cell)
        return tuple(sorted(self.project_vertex(v) for v in cell))

    def fiber(self, base_vertex: int) -> tuple[int, ...]:
        n = self.base.n_vertices
        return tuple(e * n + base_vertex for e in range(len(self.elements)))

    # -- fiber element arithmetic -------------------------------------------

    def right_multiply(self, element, word: Word):
        """element * word, or None if it leaves the materialized region."""
        if self.truncated:
            target = reduce_word(tuple(element) + tuple(word))
            canonical = self.canonical.get(target)
            return canonical
        return self.coset_table.trace(element, word)

    def left_multiply(self, word: Word, element):
        """word * element, or None if it leaves the materialized region."""
        if self.truncated:
            target = reduce_word(tuple(word) + tuple(element))
            return self.canonical.get(target)
        rep = self.coset_table.representatives[element]
        return self.coset_table.trace(0, tuple(word) + rep)

    def lift_vertex(self, base_vertex: int, element) -> Optional[int]:
        pos = _element_pos(self).get(element)
        if pos is None:
            return None
        return pos * self.base.n_vertices + base_vertex


def _element_pos(cover: CoveringMap) -> dict:
    cache = cover.__dict__.get("_element_pos")
    if cache is None:
        cache = {e: i for i, e in enumerate(cover.elements)}
        object.__setattr__(cover, "_element_pos", cache)
    return cache


def universal_cover(
    cx: SimplicialComplex,
    radius: int = 0,
    basepoint: int = 0,
    max_cosets: int = 20000,
) -> CoveringMap:
    """Materialize the universal cover.

    If bounded coset enumeration closes the deck group the cover is complete
    and ``radius`` is ignored.  Otherwise fiber elements are canonical reduced
    words of length <= radius (identified by relator moves inside the ball)
    and the result is flagged truncated.
    """
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    pres = edge_path_group(cx, basepoint)

    table = None
    if pres.rank == 0 or pres.relations:
        table = coset_enumeration(pres.rank, pres.relations, max_cosets)

    if table is not None:
        elements: tuple = tuple(range(table.size))
        truncated = False
        canonical = None
    else:
        if radius == 0:
            raise DegenerateCoverError(
                "radius 0 with a deck group that bounded enumeration cannot close; "
                "a degenerate cover would not be a cover"
            )
        ball = word_ball(pres.rank, pres.relations, radius)
        canon_set = sorted(set(ball.values()), key=shortlex_key)
        elements = tuple(canon_set)
        truncated = True
        canonical = ball

    n = cx.n_vertices
    pos = {e: i for i, e in enumerate(elements)}

    def rmul(element, word: Word):
        if truncated:
            return canonical.get(reduce_word(tuple(element) + tuple(word)))
        return table.trace(element, word)

    edges: list[tuple[int, int]] = []
    for u, v in cx.edges:
        label = pres.edge_label(u, v)
        for e in elements:
            e2 = rmul(e, label)
            if e2 is None:
                continue
            edges.append(tuple(sorted((pos[e] * n + u, pos[e2] * n + v))))

    edge_lookup = set(edges)
    triangles: list[tuple[int, int, int]] = []
    for a, b, c in cx.triangles:
        lab_ab = pres.edge_label(a, b)
        lab_bc = pres.edge_label(b, c)
        for e in elements:
            eb = rmul(e, lab_ab)
            if eb is None:
                continue
            ec = rmul(eb, lab_bc)
            if ec is None:
                continue
            va, vb, vc = pos[e] * n + a, pos[eb] * n + b, pos[ec] * n + c
            tri = tuple(sorted((va, vb, vc)))
            if (
                tuple(sorted((va, vb))) in edge_lookup
                and tuple(sorted((vb, vc))) in edge_lookup
                and tuple(sorted((va, vc))) in edge_lookup
            ):
                triangles.append(tri)

    total = build_complex(n * len(elements), sorted(set(edges)), sorted(set(triangles)))
    return CoveringMap(cx, total, pres, elements, truncated, radius if truncated else None, table, canonical)


def deck_action(cover: CoveringMap, word: Word, cell: Cell) -> Cell:
    """Apply the deck transformation of ``word`` to a vertex/edge/triangle."""
    def move_vertex(tv: int) -> int:
        v, e = cover.vertex_pair(tv)
        e2 = cover.left_multiply(word, e)
        if e2 is None:
            raise TruncationError(
                f"deck image of vertex {tv} (base {v}) leaves the materialized region"
            )
        return cover.vertex_index(v, e2)

    if isinstance(cell, int):
        return move_vertex(cell)
    image = tuple(sorted(move_vertex(v) for v in cell))
    if len(image) == 2 and image not in set(cover.total.edges):
        raise TruncationError(f"deck image edge {image} not materialized")
    if len(image) == 3 and image not in set(cover.total.triangles):
        raise TruncationError(f"deck image triangle {image} not materialized")
    return image


def deck_vertex_permutation(cover: CoveringMap, word: Word) -> dict[int, Optional[int]]:
    """Total-vertex map of a deck word; None marks truncated images."""
    out: dict[int, Optional[int]] = {}
    for tv in range(cover.total.n_vertices):
        v, e = cover.vertex_pair(tv)
        e2 = cover.left_multiply(word, e)
        out[tv] = None if e2 is None else cover.vertex_index(v, e2)
    return out


def lift_subcomplex_components(cover: CoveringMap, sub) -> list:
    """Connected components of the preimage of a base subcomplex."""
    from .complexes import Subcomplex, connected_components

    total = cover.total
    sub_vertices = set(sub.vertices)
    sub_edges = set(sub.edges)
    sub_tris = set(sub.triangles)
    vertices = tuple(
        tv for tv in range(total.n_vertices) if cover.project_vertex(tv) in sub_vertices
    )
    edges = tuple(sorted(e for e in total.edges if cover.project_cell(e) in sub_edges))
    tris = tuple(sorted(t for t in total.triangles if cover.project_cell(t) in sub_tris))
    lifted = Subcomplex(total, vertices, edges, tris)
    return connected_components(lifted)


def component_is_complete(cover: CoveringMap, comp, base_sub) -> bool:
    """Whether a preimage component carries every cell of the base subcomplex lift."""
    if {cover.project_vertex(tv) for tv in comp.vertices} != set(base_sub.vertices):
        return False
    for tv in comp.vertices:
        v, e = cover.vertex_pair(tv)
        for edge in base_sub.edges:
            if v not in edge:
                continue
            w = edge[0] if edge[1] == v else edge[1]
            if cover.right_multiply(e, cover.presentation.edge_label(v, w)) is None:
                return False
    return True


def lift_path(cover: CoveringMap, path: EdgePath, start_element=None) -> EdgePath:
    """Lift a base path starting at the lift of its first vertex by ``start_element``."""
    if path.complex != cover.base:
        raise ValidationError("path does not live on the base complex")
    element = start_element
    if element is None:
        element = IDENTITY if cover.truncated else 0
    vertices = [cover.vertex_index(path.vertices[0], element)]
    for u, v in zip(path.vertices, path.vertices[1:]):
        element = cover.right_multiply(element, cover.presentation.edge_label(u, v))
        if element is None:
            raise TruncationError(f"path lift leaves the materialized region at base edge ({u}, {v})")
        vertices.append(cover.vertex_index(v, element))
    return EdgePath(cover.total, tuple(vertices))

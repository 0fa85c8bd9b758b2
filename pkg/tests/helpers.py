"""Shared oracles and random-instance factories for the test suite.

Random closed 1-forms are built from edge cocycles: z = dg + hol, where g is
a random vertex function and hol lives in the rational kernel of the
abelianized triangle-relation matrix.  Integration of the resulting star
form along a path equals the plain edge sum of z, which serves as an
independent oracle throughout; generator loop integrals equal hol exactly.
"""
from __future__ import annotations

import random
from fractions import Fraction

from lcktools.complexes import (
    Cover,
    SimplicialComplex,
    Subcomplex,
    build_complex,
    star_cover,
)
from lcktools.forms import ClosedOneForm, make_closed_one_form
from lcktools.groups import PresentedGroup, edge_path_group


def rational_nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Kernel basis of a rational matrix by Gaussian elimination; exact."""
    matrix = [list(map(Fraction, row)) for row in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = next((i for i in range(r, len(matrix)) if matrix[i][c] != 0), None)
        if pivot_row is None:
            continue
        matrix[r], matrix[pivot_row] = matrix[pivot_row], matrix[r]
        inv = Fraction(1) / matrix[r][c]
        matrix[r] = [x * inv for x in matrix[r]]
        for i in range(len(matrix)):
            if i != r and matrix[i][c] != 0:
                factor = matrix[i][c]
                matrix[i] = [a - factor * b for a, b in zip(matrix[i], matrix[r])]
        pivots.append(c)
        r += 1
        if r == len(matrix):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for row_idx, pc in enumerate(pivots):
            vec[pc] = -matrix[row_idx][fc]
        basis.append(vec)
    return basis


def abelianized_relation_matrix(pres: PresentedGroup) -> list[list[Fraction]]:
    rows = []
    for rel in pres.relations:
        row = [Fraction(0)] * pres.rank
        for x in rel:
            row[abs(x) - 1] += 1 if x > 0 else -1
        rows.append(row)
    return rows


def holonomy_kernel_basis(pres: PresentedGroup) -> list[list[Fraction]]:
    return rational_nullspace(abelianized_relation_matrix(pres), pres.rank)


class Cocycle:
    """Oriented edge values z(u -> v) with triangle sums zero."""

    def __init__(self, cx: SimplicialComplex, values: dict[tuple[int, int], Fraction]):
        self.complex = cx
        self.values = values

    def __call__(self, u: int, v: int) -> Fraction:
        key = (u, v) if u < v else (v, u)
        val = self.values[key]
        return val if u < v else -val

    def path_sum(self, vertices) -> Fraction:
        total = Fraction(0)
        for u, v in zip(vertices, vertices[1:]):
            total += self(u, v)
        return total


def random_fraction(rng: random.Random, span: int = 6) -> Fraction:
    return Fraction(rng.randint(-span, span), rng.randint(1, 4))


def random_cocycle(
    rng: random.Random, cx: SimplicialComplex, pres: PresentedGroup | None = None,
    holonomy: list[Fraction] | None = None,
) -> tuple[Cocycle, list[Fraction], PresentedGroup]:
    """z = dg + hol with hol a random kernel combination (or as prescribed).

    Returns (cocycle, generator holonomies, presentation).
    """
    if pres is None:
        pres = edge_path_group(cx, 0)
    if holonomy is None:
        basis = holonomy_kernel_basis(pres)
        holonomy = [Fraction(0)] * pres.rank
        for vec in basis:
            coeff = random_fraction(rng, 3)
            holonomy = [h + coeff * x for h, x in zip(holonomy, vec)]
    gen_index = {e: i for i, e in enumerate(pres.generators)}
    g = [random_fraction(rng) for _ in range(cx.n_vertices)]
    values = {}
    for u, v in cx.edges:
        hol = holonomy[gen_index[(u, v)]] if (u, v) in gen_index else Fraction(0)
        values[(u, v)] = g[v] - g[u] + hol
    return Cocycle(cx, values), list(holonomy), pres


def star_form(cx: SimplicialComplex, z: Cocycle, tol: float = 1e-12) -> ClosedOneForm:
    """Star-cover form with f_alpha(v) = z(alpha -> v); valid for any cocycle."""
    cover = star_cover(cx)
    potentials = []
    for alpha, chart in enumerate(cover.charts):
        pot = {}
        for v in chart.vertices:
            pot[v] = Fraction(0) if v == alpha else z(alpha, v)
        potentials.append(pot)
    return make_closed_one_form(cover, potentials, tol)


def refined_star_form(cx: SimplicialComplex, z: Cocycle, validate: bool = False) -> ClosedOneForm:
    """An equivalent representative on the star-within-chart refinement."""
    base = star_cover(cx)
    charts: list[Subcomplex] = []
    potentials: list[dict[int, Fraction]] = []
    for alpha, chart in enumerate(base.charts):
        tris_at: dict[int, list] = {v: [] for v in chart.vertices}
        for t in chart.triangles:
            for v in t:
                tris_at[v].append(t)
        for v in chart.vertices:
            verts = {v}
            edges = set()
            for e in chart.edges:
                if v in e:
                    verts.update(e)
                    edges.add(e)
            for t in tris_at[v]:
                verts.update(t)
                a, b, c = t
                edges.update(((a, b), (a, c), (b, c)))
            charts.append(
                Subcomplex(cx, tuple(sorted(verts)), tuple(sorted(edges)), tuple(sorted(tris_at[v])))
            )
            potentials.append({w: Fraction(0) if w == alpha else z(alpha, w) for w in sorted(verts)})
    cover = Cover(cx, tuple(charts))
    if validate:
        return make_closed_one_form(cover, potentials)
    overlaps = ()  # construction-guaranteed; validated on sampled instances
    return ClosedOneForm(cover, tuple(potentials), True, 1e-12, overlaps)


def random_connected_complex(
    rng: random.Random, max_vertices: int = 30, extra_edge_prob: float = 0.35,
    triangle_prob: float = 0.5,
) -> SimplicialComplex:
    n = rng.randint(4, max_vertices)
    edges = set()
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        a, b = order[rng.randrange(i)], order[i]
        edges.add((min(a, b), max(a, b)))
    n_extra = max(1, int(extra_edge_prob * n))
    for _ in range(n_extra):
        a, b = rng.sample(range(n), 2)
        edges.add((min(a, b), max(a, b)))
    triangles = set()
    edge_list = sorted(edges)
    for _ in range(int(triangle_prob * n)):
        u, v = edge_list[rng.randrange(len(edge_list))]
        w = rng.randrange(n)
        if w in (u, v):
            continue
        if (min(u, w), max(u, w)) in edges and (min(v, w), max(v, w)) in edges:
            triangles.add(tuple(sorted((u, v, w))))
    return build_complex(n, sorted(edges), sorted(triangles))


def cone_complex(rng: random.Random, max_base_vertices: int = 12) -> SimplicialComplex:
    """Cone over a random graph: contractible, hence simply connected."""
    n = rng.randint(3, max_base_vertices)
    base_edges = set()
    for i in range(1, n):
        j = rng.randrange(i)
        base_edges.add((j, i))
    for _ in range(n // 2):
        a, b = rng.sample(range(n), 2)
        base_edges.add((min(a, b), max(a, b)))
    apex = n
    edges = set(base_edges) | {(v, apex) for v in range(n)}
    triangles = {tuple(sorted((u, v, apex))) for u, v in base_edges}
    return build_complex(n + 1, sorted(edges), sorted(triangles))


def random_walk(rng: random.Random, cx: SimplicialComplex, length: int, start: int | None = None):
    if start is None:
        candidates = [v for v in cx.vertices if cx.neighbors(v)]
        start = rng.choice(candidates) if candidates else 0
    path = [start]
    for _ in range(length):
        nbrs = cx.neighbors(path[-1])
        if not nbrs:
            break
        path.append(rng.choice(nbrs))
    return tuple(path)


# -- fixed model complexes -----------------------------------------------------


def circle(n: int) -> SimplicialComplex:
    return build_complex(n, [(i, (i + 1) % n) for i in range(n)])


def single_triangle() -> SimplicialComplex:
    return build_complex(3, [], [(0, 1, 2)])


RP2_FACES = [
    (0, 1, 3), (0, 1, 5), (0, 2, 3), (0, 2, 4), (0, 4, 5),
    (1, 2, 4), (1, 2, 5), (1, 3, 4), (2, 3, 5), (3, 4, 5),
]


def projective_plane() -> SimplicialComplex:
    return build_complex(6, [], RP2_FACES)


def torus_seven() -> SimplicialComplex:
    faces = []
    for i in range(7):
        faces.append(tuple(sorted((i, (i + 1) % 7, (i + 3) % 7))))
        faces.append(tuple(sorted(((i + 1) % 7, (i + 3) % 7, (i + 4) % 7))))
    return build_complex(7, [], faces)


ICOSAHEDRON_FACES = [
    (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1),
    (11, 6, 7), (11, 7, 8), (11, 8, 9), (11, 9, 10), (11, 10, 6),
    (1, 6, 7), (1, 2, 7), (2, 7, 8), (2, 3, 8), (3, 8, 9),
    (3, 4, 9), (4, 9, 10), (4, 5, 10), (5, 10, 6), (5, 1, 6),
]


def icosahedron() -> SimplicialComplex:
    return build_complex(12, [], ICOSAHEDRON_FACES)

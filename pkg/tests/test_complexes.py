import random

import pytest

import helpers
from lcktools.complexes import (
    EdgePath,
    build_complex,
    closed_star,
    connected_components,
    elementary_homotopy_moves,
    induced_subcomplex,
    intersect_subcomplexes,
    refine_cover,
    star_cover,
)
from lcktools.errors import ValidationError


def test_circle_build(c3):
    assert c3.n_vertices == 3
    assert c3.edges == ((0, 1), (0, 2), (1, 2))
    assert c3.triangles == ()


def test_disk_build(disk):
    assert disk.edges == ((0, 1), (0, 2), (1, 2))
    assert disk.triangles == ((0, 1, 2),)


def test_triangle_edges_auto_inserted():
    cx = build_complex(4, [(0, 3)], [(0, 1, 2)])
    assert (0, 1) in cx.edges and (1, 2) in cx.edges and (0, 2) in cx.edges


def test_icosahedron_euler_characteristic(ico):
    assert ico.n_vertices == 12
    assert len(ico.edges) == 30
    assert len(ico.triangles) == 20
    assert ico.euler_characteristic() == 2


def test_out_of_range_vertex_rejected():
    with pytest.raises(ValidationError, match="out of range"):
        build_complex(3, [(0, 5)])


def test_duplicate_simplex_rejected_with_name():
    with pytest.raises(ValidationError, match=r"duplicate edge \(0, 1\)"):
        build_complex(3, [(0, 1), (1, 0)])
    with pytest.raises(ValidationError, match="duplicate triangle"):
        build_complex(4, [], [(0, 1, 2), (2, 1, 0)])


def test_degenerate_simplices_rejected():
    with pytest.raises(ValidationError):
        build_complex(3, [(1, 1)])
    with pytest.raises(ValidationError):
        build_complex(3, [], [(0, 1, 1)])


def test_connected_components_trivial(disk):
    sub = induced_subcomplex(disk, [0, 1, 2])
    comps = connected_components(sub)
    assert len(comps) == 1
    assert comps[0].vertices == (0, 1, 2)


def test_connected_components_isolated_vertices(c3):
    sub = induced_subcomplex(c3, [0, 1])  # edge 01 present
    assert len(connected_components(sub)) == 1
    cx = build_complex(4, [(0, 1)])
    sub2 = induced_subcomplex(cx, [2, 3])
    comps = connected_components(sub2)
    assert [c.vertices for c in comps] == [(2,), (3,)]


def test_connected_components_hexagon(c6):
    sub = induced_subcomplex(c6, [0, 1, 3, 4])
    comps = connected_components(sub)
    assert [c.vertices for c in comps] == [(0, 1), (3, 4)]


def test_star_cover_single_triangle(disk):
    cover = star_cover(disk)
    assert len(cover.charts) == 3
    for chart in cover.charts:
        assert chart.vertices == (0, 1, 2)
        assert chart.triangles == ((0, 1, 2),)


def test_star_cover_circle_charts_are_paths(c3):
    cover = star_cover(c3)
    for v, chart in enumerate(cover.charts):
        assert len(chart.edges) == 2
        assert all(v in e for e in chart.edges)
        assert chart.triangles == ()


def test_star_cover_icosahedron(ico):
    cover = star_cover(ico)
    assert len(cover.charts) == 12
    for chart in cover.charts:
        assert len(chart.triangles) == 5


def test_closed_star_not_induced(c3):
    star = closed_star(c3, 0)
    induced = induced_subcomplex(c3, star.vertices)
    assert len(star.edges) == 2
    assert len(induced.edges) == 3


def test_cover_invariant_rejects_missing_simplices(c3):
    from lcktools.complexes import Cover

    chart = closed_star(c3, 0)
    with pytest.raises(ValidationError, match="misses"):
        Cover(c3, (chart,))


def test_refine_cover_still_covers(ico):
    refined = refine_cover(star_cover(ico))
    assert refined.parent == ico  # Cover validation ran in the constructor


def test_intersect_subcomplexes_empty(c6):
    a = induced_subcomplex(c6, [0, 1])
    b = induced_subcomplex(c6, [3, 4])
    assert intersect_subcomplexes(a, b) is None


def test_edge_path_validation(c3):
    EdgePath(c3, (0, 1, 2, 0))
    EdgePath(c3, (1,))
    with pytest.raises(ValidationError):
        EdgePath(c3, ())
    with pytest.raises(ValidationError, match="not an edge"):
        EdgePath(build_complex(4, [(0, 1)]), (0, 1, 2))


def test_moves_on_single_vertex_path(c3):
    path = EdgePath(c3, (0,))
    moves = elementary_homotopy_moves(path, c3)
    assert sorted(m.vertices for m in moves) == [(0, 1, 0), (0, 2, 0)]


def test_triangle_move(disk):
    path = EdgePath(disk, (0, 1, 2))
    moves = elementary_homotopy_moves(path, disk)
    assert (0, 2) in {m.vertices for m in moves}


def test_moves_never_contract_essential_loop(c3):
    # no triangles: only backtracks; the loop class survives every move
    seen = {(0, 1, 2, 0)}
    frontier = [EdgePath(c3, (0, 1, 2, 0))]
    for _ in range(2):
        nxt = []
        for p in frontier:
            for q in elementary_homotopy_moves(p, c3):
                if q.vertices not in seen:
                    seen.add(q.vertices)
                    nxt.append(q)
        frontier = nxt
    assert (0,) not in seen
    assert all(len(p) >= 3 for p in seen)


def test_move_relation_symmetric():
    rng = random.Random(7)
    for _ in range(20):
        cx = helpers.random_connected_complex(rng, max_vertices=9)
        walk = helpers.random_walk(rng, cx, rng.randint(0, 4))
        p = EdgePath(cx, walk)
        for q in elementary_homotopy_moves(p, cx):
            back = {m.vertices for m in elementary_homotopy_moves(q, cx)}
            assert p.vertices in back


def test_moves_preserve_endpoints():
    rng = random.Random(11)
    for _ in range(20):
        cx = helpers.random_connected_complex(rng, max_vertices=9)
        p = EdgePath(cx, helpers.random_walk(rng, cx, rng.randint(1, 5)))
        for q in elementary_homotopy_moves(p, cx):
            assert q.start == p.start and q.end == p.end


def test_path_concat_and_reverse(c6):
    a = EdgePath(c6, (0, 1, 2))
    b = EdgePath(c6, (2, 3))
    assert a.concat(b).vertices == (0, 1, 2, 3)
    assert a.reversed().vertices == (2, 1, 0)

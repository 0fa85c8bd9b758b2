"""Closed 1-forms as validated Cech data, with integration and exactness.

A form is a cover together with per-chart vertex potentials whose pairwise
differences are constant on every connected component of every overlap.
Integration along an edge path sums per-edge potential increments, one chart
per edge; the overlap condition makes the result independent of every choice
made along the way.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Optional, Sequence

from .complexes import (
    Cover,
    EdgePath,
    SimplicialComplex,
    Subcomplex,
    connected_components,
    elementary_homotopy_moves,
    intersect_subcomplexes,
    single_chart_cover,
)
from .covers import CoveringMap
from .errors import OverlapConditionError, TruncationError, ValidationError
from .groups import Character, PresentedGroup, bounded_triviality, edge_path_group
from .scalars import OVERLAP_TOL, Scalar, all_exact, coerce, scalars_equal


@dataclass(frozen=True)
class GlobalFunction:
    complex: SimplicialComplex
    values: tuple[Scalar, ...]

    def __post_init__(self):
        if len(self.values) != self.complex.n_vertices:
            raise ValidationError("function must assign a value to every vertex")
        object.__setattr__(self, "values", tuple(coerce(v) for v in self.values))

    def __call__(self, v: int) -> Scalar:
        return self.values[v]


@dataclass(frozen=True)
class OverlapConstant:
    alpha: int
    beta: int
    component: tuple[int, ...]
    value: Scalar


@dataclass(frozen=True)
class ClosedOneForm:
    cover: Cover
    potentials: tuple[Mapping[int, Scalar], ...]
    exact_arithmetic: bool
    tol: float
    overlap_constants: tuple[OverlapConstant, ...]
    warnings: tuple[str, ...] = ()

    @property
    def complex(self) -> SimplicialComplex:
        return self.cover.parent

    def potential(self, chart: int, vertex: int) -> Scalar:
        return self.potentials[chart][vertex]

    def edge_chart(self, u: int, v: int) -> int:
        """Lowest chart index containing the edge; deterministic."""
        table = _edge_chart_table(self)
        key = tuple(sorted((u, v)))
        chart = table.get(key)
        if chart is None:
            raise ValidationError(f"edge {key} lies in no chart of the form's cover")
        return chart


def _edge_chart_table(form: ClosedOneForm) -> dict[tuple[int, int], int]:
    cache = form.__dict__.get("_edge_chart")
    if cache is None:
        cache = {}
        for i, chart in enumerate(form.cover.charts):
            for e in chart.edges:
                cache.setdefault(e, i)
        object.__setattr__(form, "_edge_chart", cache)
    return cache


def _overlap_constants(
    charts: Sequence[Subcomplex],
    pot_a: Sequence[Mapping[int, Scalar]],
    pot_b: Sequence[Mapping[int, Scalar]] | None,
    exact: bool,
    tol: float,
) -> tuple[OverlapConstant, ...]:
    """Constants of pot_a[i] - pot_b[j] per overlap component; raises on violation.

    With pot_b None, checks all pairs within one family (i < j); otherwise
    checks cross pairs between two families over the same chart list split.
    """
    out: list[OverlapConstant] = []
    n_a = len(pot_a)
    if pot_b is None:
        pairs = [(i, j) for i in range(n_a) for j in range(i + 1, n_a)]
        get = lambda idx: pot_a[idx]
        chart_of = lambda idx: charts[idx]
    else:
        pairs = [(i, n_a + j) for i in range(n_a) for j in range(len(pot_b))]
        get = lambda idx: pot_a[idx] if idx < n_a else pot_b[idx - n_a]
        chart_of = lambda idx: charts[idx]
    for i, j in pairs:
        inter = intersect_subcomplexes(chart_of(i), chart_of(j))
        if inter is None:
            continue
        fa, fb = get(i), get(j)
        for comp in connected_components(inter):
            first = comp.vertices[0]
            value = fa[first] - fb[first]
            for v in comp.vertices[1:]:
                other = fa[v] - fb[v]
                if not scalars_equal(other, value, exact, tol):
                    raise OverlapConditionError(i, j, comp.vertices, first, v, value, other)
            out.append(OverlapConstant(i, j, comp.vertices, value))
    return tuple(out)


def make_closed_one_form(
    cover: Cover,
    potentials: Sequence[Mapping[int, Scalar]],
    tol: float = OVERLAP_TOL,
    warnings: tuple[str, ...] = (),
) -> ClosedOneForm:
    """Validate the locally-constant overlap condition and cache its constants."""
    if len(potentials) != len(cover.charts):
        raise ValidationError(f"need {len(cover.charts)} potentials, got {len(potentials)}")
    coerced: list[Mapping[int, Scalar]] = []
    for i, (chart, pot) in enumerate(zip(cover.charts, potentials)):
        missing = [v for v in chart.vertices if v not in pot]
        if missing:
            raise ValidationError(f"chart {i}: potential missing at vertices {missing}")
        coerced.append(MappingProxyType({v: coerce(pot[v]) for v in chart.vertices}))
    exact = all(all_exact(p.values()) for p in coerced)
    constants = _overlap_constants(cover.charts, coerced, None, exact, tol)
    return ClosedOneForm(cover, tuple(coerced), exact, tol, constants, warnings)


def equivalence_witness(a: ClosedOneForm, b: ClosedOneForm) -> Optional[OverlapConditionError]:
    """None if the union of the two chart families is still a valid form."""
    if a.complex != b.complex:
        raise ValidationError("forms live on different complexes")
    charts = tuple(a.cover.charts) + tuple(b.cover.charts)
    exact = a.exact_arithmetic and b.exact_arithmetic
    tol = max(a.tol, b.tol)
    try:
        _overlap_constants(charts, a.potentials, b.potentials, exact, tol)
    except OverlapConditionError as err:
        return err
    return None


def equivalent(a: ClosedOneForm, b: ClosedOneForm) -> bool:
    return equivalence_witness(a, b) is None


def differential(f: GlobalFunction) -> ClosedOneForm:
    cover = single_chart_cover(f.complex)
    return make_closed_one_form(cover, [{v: f.values[v] for v in f.complex.vertices}])


def integrate(form: ClosedOneForm, path: EdgePath, chart_choice=None) -> Scalar:
    """Sum of per-edge potential increments along the path.

    ``chart_choice`` optionally maps (edge, candidate chart list) to a chart
    index; the default takes the lowest index.  The overlap condition makes
    the result independent of this choice, which the tests exercise.
    """
    if path.complex != form.complex:
        raise ValidationError("path does not live on the form's complex")
    total: Scalar = Fraction(0)
    for u, v in zip(path.vertices, path.vertices[1:]):
        if chart_choice is None:
            chart = form.edge_chart(u, v)
        else:
            candidates = form.cover.charts_with_edge(u, v)
            if not candidates:
                raise ValidationError(f"edge ({u}, {v}) lies in no chart of the form's cover")
            chart = chart_choice((u, v), candidates)
        pot = form.potentials[chart]
        total = total + pot[v] - pot[u]
    return total


def endpoints_criterion_check(form: ClosedOneForm, path_a: EdgePath, path_b: EdgePath) -> bool:
    """Equality of the two integrals, the named corollary check."""
    va = integrate(form, path_a)
    vb = integrate(form, path_b)
    return scalars_equal(va, vb, form.exact_arithmetic, form.tol)


@dataclass(frozen=True)
class HomotopyCertificate:
    paths_checked: int
    all_equal: bool
    partial: bool
    sample: tuple[tuple[int, ...], ...]


def homotopy_invariant_integrate(
    form: ClosedOneForm,
    path: EdgePath,
    cx: SimplicialComplex,
    budget: int = 200,
    seed: int = 0,
) -> tuple[Scalar, HomotopyCertificate]:
    """Integrate, then certify invariance over a bounded move search.

    Breadth-first over elementary moves from the given path; every reached
    path must integrate to the same value.  Exhausting the budget marks the
    certificate partial; the integral is returned either way.
    """
    if path.complex != cx or form.complex != cx:
        raise ValidationError("path, form and complex must agree")
    value = integrate(form, path)
    visited: dict[tuple[int, ...], None] = {path.vertices: None}
    queue = [path]
    all_equal = True
    expanded = 0
    partial = False
    while queue:
        if expanded >= budget:
            partial = True
            break
        current = queue.pop(0)
        expanded += 1
        for move in elementary_homotopy_moves(current, cx):
            if move.vertices in visited:
                continue
            visited[move.vertices] = None
            if not scalars_equal(integrate(form, move), value, form.exact_arithmetic, form.tol):
                all_equal = False
            if len(visited) < budget * 4:
                queue.append(move)
    rng = random.Random(seed)
    pool = sorted(visited)
    sample = tuple(pool[i] for i in sorted(rng.sample(range(len(pool)), min(5, len(pool)))))
    return value, HomotopyCertificate(len(visited), all_equal, partial, sample)


@dataclass(frozen=True)
class ExactnessResult:
    """Primitive when the form is exact, else the first failing generator loop."""

    primitive: Optional[GlobalFunction]
    witness_edge: Optional[tuple[int, int]]
    witness_value: Optional[Scalar]

    def __bool__(self) -> bool:
        return self.primitive is not None


def _tree_potential(form: ClosedOneForm, pres: PresentedGroup) -> list[Scalar]:
    """Integrate along spanning-tree paths from the basepoint."""
    cx = form.complex
    values: list[Scalar] = [Fraction(0)] * cx.n_vertices
    order = [pres.basepoint]
    seen = {pres.basepoint}
    qi = 0
    children: dict[int, list[int]] = {}
    for v in cx.vertices:
        p = pres.tree_parent[v]
        if p is not None:
            children.setdefault(p, []).append(v)
    while qi < len(order):
        u = order[qi]
        qi += 1
        for w in sorted(children.get(u, ())):
            chart = form.edge_chart(u, w)
            pot = form.potentials[chart]
            values[w] = values[u] + pot[w] - pot[u]
            seen.add(w)
            order.append(w)
    return values


def is_exact(form: ClosedOneForm, cx: SimplicialComplex, basepoint: int = 0) -> ExactnessResult:
    """Spanning-tree primitive plus closure of every non-tree edge.

    Failure returns the first generator edge whose loop integral does not
    vanish, together with that integral.
    """
    if form.complex != cx:
        raise ValidationError("form does not live on the given complex")
    pres = edge_path_group(cx, basepoint)
    values = _tree_potential(form, pres)
    for u, v in pres.generators:
        chart = form.edge_chart(u, v)
        pot = form.potentials[chart]
        loop_value = values[u] + (pot[v] - pot[u]) - values[v]
        if not scalars_equal(loop_value, Fraction(0), form.exact_arithmetic, form.tol):
            return ExactnessResult(None, (u, v), loop_value)
    return ExactnessResult(GlobalFunction(cx, tuple(values)), None, None)


def primitive_on_simply_connected(
    form: ClosedOneForm, cx: SimplicialComplex, basepoint: int = 0
) -> GlobalFunction:
    """The path-integral primitive; requires certified simple connectivity."""
    from .errors import NotSimplyConnectedError

    pres = edge_path_group(cx, basepoint)
    verdict = bounded_triviality(pres)
    if verdict is not True:
        generator = pres.generators[0] if pres.generators else None
        raise NotSimplyConnectedError(generator)
    result = is_exact(form, cx, basepoint)
    if not result:
        raise ValidationError(
            f"closure failed on simply connected input at edge {result.witness_edge}: "
            f"{result.witness_value} (arithmetic noise above tolerance?)"
        )
    f = result.primitive
    # the corollary's local statement: f - f_alpha constant on chart components
    for i, chart in enumerate(form.cover.charts):
        pot = form.potentials[i]
        for comp in connected_components(chart):
            first = comp.vertices[0]
            c = f.values[first] - pot[first]
            for v in comp.vertices[1:]:
                if not scalars_equal(f.values[v] - pot[v], c, form.exact_arithmetic, form.tol):
                    raise ValidationError(
                        f"primitive minus chart potential not constant on chart {i} component"
                    )
    return f


def monodromy_character(form: ClosedOneForm, cx: SimplicialComplex, basepoint: int = 0) -> Character:
    """Loop integrals of the form over the edge-path group's generator loops."""
    if form.complex != cx:
        raise ValidationError("form does not live on the given complex")
    pres = edge_path_group(cx, basepoint)
    values = tuple(integrate(form, pres.generator_loop(i)) for i in range(pres.rank))
    return Character(pres, values, form.tol)


def pullback_form(cover_map: CoveringMap, form: ClosedOneForm) -> ClosedOneForm:
    """Pull a base form back to the covering's total complex.

    Charts are the connected components of chart preimages; potentials
    compose with the projection.  On truncated covers, components whose
    boundary lifts are missing are named in the result's warnings.
    """
    from .covers import component_is_complete, lift_subcomplex_components

    if form.complex != cover_map.base:
        raise ValidationError("form does not live on the covering's base")
    total = cover_map.total
    charts: list[Subcomplex] = []
    potentials: list[dict[int, Scalar]] = []
    warnings: list[str] = []
    for i, chart in enumerate(form.cover.charts):
        pot = form.potentials[i]
        for k, comp in enumerate(lift_subcomplex_components(cover_map, chart)):
            charts.append(comp)
            potentials.append({tv: pot[cover_map.project_vertex(tv)] for tv in comp.vertices})
            if cover_map.truncated and not component_is_complete(cover_map, comp, chart):
                warnings.append(f"chart {i} component {k}: incomplete at the truncation boundary")
    return make_closed_one_form(Cover(total, tuple(charts)), potentials, form.tol, tuple(warnings))


def negate_form(form: ClosedOneForm) -> ClosedOneForm:
    potentials = [{v: -pot[v] for v in pot} for pot in form.potentials]
    return make_closed_one_form(form.cover, potentials, form.tol, form.warnings)


def add_forms(a: ClosedOneForm, b: ClosedOneForm) -> ClosedOneForm:
    """Sum of two forms on the common refinement of their covers."""
    if a.complex != b.complex:
        raise ValidationError("forms live on different complexes")
    charts: list[Subcomplex] = []
    potentials: list[dict[int, Scalar]] = []
    for i, chart_a in enumerate(a.cover.charts):
        for j, chart_b in enumerate(b.cover.charts):
            inter = intersect_subcomplexes(chart_a, chart_b)
            if inter is None:
                continue
            for comp in connected_components(inter):
                charts.append(comp)
                potentials.append(
                    {v: a.potentials[i][v] + b.potentials[j][v] for v in comp.vertices}
                )
    tol = max(a.tol, b.tol)
    return make_closed_one_form(Cover(a.complex, tuple(charts)), potentials, tol)


def sub_forms(a: ClosedOneForm, b: ClosedOneForm) -> ClosedOneForm:
    return add_forms(a, negate_form(b))

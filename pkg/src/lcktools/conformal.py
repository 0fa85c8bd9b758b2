"""LCK and Kahler chart data, Lee forms, weight bundles and the covering
correspondence: lift to a Kahler structure on the universal cover, descend a
homothety-equivariant Kahler structure back to an LCK one.

Conventions.  Characters are additive Lee characters: chi(g) is the loop
integral of the Lee form over the generator g.  The deck group then acts on
the lifted Kahler potentials by homotheties with ratio e^{-chi(eta)}, and a
flat section of the pulled-back weight bundle satisfies
s(eta . x) = e^{chi(eta)} s(x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Optional, Sequence

from .complexes import (
    Cover,
    SimplicialComplex,
    Subcomplex,
    connected_components,
    intersect_subcomplexes,
    star_cover,
)
from .covers import CoveringMap, component_is_complete, deck_action, lift_subcomplex_components
from .errors import (
    HolonomyObstruction,
    HomothetyError,
    NotSimplyConnectedError,
    TruncationError,
    ValidationError,
)
from .forms import (
    ClosedOneForm,
    ExactnessResult,
    GlobalFunction,
    is_exact,
    make_closed_one_form,
    monodromy_character,
    pullback_form,
)
from .groups import Character, Word, bounded_triviality, edge_path_group
from .scalars import OVERLAP_TOL, Scalar, all_exact, coerce, scalars_equal


@dataclass(frozen=True)
class PotentialHandle:
    """A Kahler potential, abstract (a tagged symbol) or grid-backed.

    The handle stands for e^{log_scale} times the tagged base function; all
    rescaling in the covering pipeline is tracked through log_scale so a
    round trip can be compared exactly.
    """

    tag: str
    log_scale: Scalar = Fraction(0)
    grid: object | None = None  # GridFunction when grid-backed

    def __post_init__(self):
        object.__setattr__(self, "log_scale", coerce(self.log_scale))

    @property
    def kind(self) -> str:
        return "abstract" if self.grid is None else "grid"

    def scaled(self, delta: Scalar) -> "PotentialHandle":
        return replace(self, log_scale=self.log_scale + coerce(delta))

    def effective_values(self):
        if self.grid is None:
            raise ValidationError(f"potential {self.tag} is abstract, not grid-backed")
        return math.exp(float(self.log_scale)) * self.grid.values


def _freeze_factors(cover: Cover, factors: Sequence[Mapping[int, Scalar]]):
    if len(factors) != len(cover.charts):
        raise ValidationError(f"need {len(cover.charts)} factor maps, got {len(factors)}")
    out = []
    for i, (chart, fac) in enumerate(zip(cover.charts, factors)):
        missing = [v for v in chart.vertices if v not in fac]
        if missing:
            raise ValidationError(f"chart {i}: conformal factor missing at vertices {missing}")
        out.append(MappingProxyType({v: coerce(fac[v]) for v in chart.vertices}))
    return tuple(out)


@dataclass(frozen=True)
class LCKData:
    cover: Cover
    potentials: tuple[PotentialHandle, ...]
    factors: tuple[Mapping[int, Scalar], ...]
    lcpk: bool = False
    tol: float = OVERLAP_TOL
    chart_origins: Optional[tuple[int, ...]] = None
    warnings: tuple[str, ...] = ()

    @property
    def complex(self) -> SimplicialComplex:
        return self.cover.parent


@dataclass(frozen=True)
class KahlerData:
    cover: Cover
    potentials: tuple[PotentialHandle, ...]
    tol: float = OVERLAP_TOL
    chart_origins: Optional[tuple[int, ...]] = None

    @property
    def complex(self) -> SimplicialComplex:
        return self.cover.parent


def make_lck_data(
    cover: Cover,
    potentials: Sequence[PotentialHandle],
    factors: Sequence[Mapping[int, Scalar]],
    lcpk: bool = False,
    tol: float = OVERLAP_TOL,
    chart_origins: Optional[tuple[int, ...]] = None,
    warnings: tuple[str, ...] = (),
    grid_tol: float = 1e-6,
) -> LCKData:
    """Validate the Lee-form overlap condition, and grid compatibility if grid-backed."""
    if len(potentials) != len(cover.charts):
        raise ValidationError("one potential handle per chart required")
    frozen = _freeze_factors(cover, factors)
    data = LCKData(cover, tuple(potentials), frozen, lcpk, tol, chart_origins, warnings)
    lee = lee_form(data)  # validates locally-constant differences
    if any(h.grid is not None for h in potentials):
        _check_grid_compatibility(data, lee, grid_tol)
    return data


def _check_grid_compatibility(data: LCKData, lee: ClosedOneForm, grid_tol: float) -> None:
    from .hessian import hessian_entry_fields, strong_psh_report

    import numpy as np

    grids = [h.grid for h in data.potentials]
    if any(g is None for g in grids):
        raise ValidationError("grid-backed LCK data needs a grid for every chart")
    domain = grids[0].domain
    if any(g.domain != domain for g in grids):
        raise ValidationError("grid-backed potentials must share one grid domain")
    margin = 0.0 if data.lcpk else 1e-9
    for i, h in enumerate(data.potentials):
        report = strong_psh_report(h.grid, margin=margin)
        if not report.ok:
            kind = "plurisubharmonic" if data.lcpk else "strongly plurisubharmonic"
            raise ValidationError(
                f"chart {i} potential {h.tag} is not {kind}: min eigenvalue "
                f"{report.worst_eigenvalue} at {report.worst_point}"
            )
    fields = [hessian_entry_fields(h.grid) for h in data.potentials]
    for oc in lee.overlap_constants:
        scale = math.exp(-float(oc.value))
        sa = math.exp(float(data.potentials[oc.alpha].log_scale))
        sb = math.exp(float(data.potentials[oc.beta].log_scale))
        worst = max(
            float(np.max(np.abs(sa * fa - scale * sb * fb)))
            for fa, fb in zip(fields[oc.alpha], fields[oc.beta])
        )
        if worst > grid_tol:
            raise ValidationError(
                f"charts ({oc.alpha}, {oc.beta}): e^f-weighted Hessians differ by {worst:g} "
                f"(> {grid_tol:g}) on the shared grid"
            )


def make_kahler_data(
    cover: Cover,
    potentials: Sequence[PotentialHandle],
    tol: float = OVERLAP_TOL,
    chart_origins: Optional[tuple[int, ...]] = None,
    pluriharmonic_tol: float = 1e-6,
) -> KahlerData:
    """Kahler chart data; grid-backed overlap differences must be pluriharmonic."""
    if len(potentials) != len(cover.charts):
        raise ValidationError("one potential handle per chart required")
    data = KahlerData(cover, tuple(potentials), tol, chart_origins)
    if any(h.grid is not None for h in potentials):
        from .hessian import pluriharmonic_report

        for i in range(len(cover.charts)):
            for j in range(i + 1, len(cover.charts)):
                if intersect_subcomplexes(cover.charts[i], cover.charts[j]) is None:
                    continue
                gi, gj = potentials[i], potentials[j]
                if gi.grid is None or gj.grid is None:
                    continue
                diff = gi.effective_values() - gj.effective_values()
                report = pluriharmonic_report(gi.grid.domain, diff, tol=pluriharmonic_tol)
                if not report.ok:
                    raise ValidationError(
                        f"Kahler potentials of charts ({i}, {j}) differ non-pluriharmonically: "
                        f"entry {report.worst_eigenvalue} at {report.worst_point}"
                    )
    return data


# ---------------------------------------------------------------------------
# Basic operations
# ---------------------------------------------------------------------------


def lee_form(lck: LCKData) -> ClosedOneForm:
    """The closed 1-form assembled from the conformal factors."""
    return make_closed_one_form(lck.cover, lck.factors, lck.tol)


def conformal_rescale(lck: LCKData, f: GlobalFunction) -> LCKData:
    """Replace factors f_alpha by f + f_alpha; potentials are untouched."""
    if f.complex != lck.complex:
        raise ValidationError("rescale function lives on a different complex")
    factors = [
        {v: fac[v] + f.values[v] for v in chart.vertices}
        for chart, fac in zip(lck.cover.charts, lck.factors)
    ]
    return make_lck_data(
        lck.cover, lck.potentials, factors, lck.lcpk, lck.tol, lck.chart_origins, lck.warnings
    )


def is_gck(lck: LCKData, basepoint: int = 0) -> ExactnessResult:
    """Globally conformally Kahler test: is the Lee form exact?

    On success the primitive is the conformal factor whose removal makes the
    data Kahler; on failure the result carries the witness generator loop.
    """
    return is_exact(lee_form(lck), lck.complex, basepoint)


def pullback_lck(cover_map: CoveringMap, lck: LCKData) -> LCKData:
    """Pull LCK data back along a covering; chart preimages split into components."""
    if lck.complex != cover_map.base:
        raise ValidationError("LCK data does not live on the covering's base")
    charts: list[Subcomplex] = []
    handles: list[PotentialHandle] = []
    factors: list[dict[int, Scalar]] = []
    origins: list[int] = []
    warnings: list[str] = []
    for i, chart in enumerate(lck.cover.charts):
        fac = lck.factors[i]
        for k, comp in enumerate(lift_subcomplex_components(cover_map, chart)):
            charts.append(comp)
            handles.append(lck.potentials[i])
            factors.append({tv: fac[cover_map.project_vertex(tv)] for tv in comp.vertices})
            origins.append(i)
            if cover_map.truncated and not component_is_complete(cover_map, comp, chart):
                warnings.append(f"chart {i} component {k}: incomplete at the truncation boundary")
    cover = Cover(cover_map.total, tuple(charts))
    return make_lck_data(
        cover, handles, factors, lck.lcpk, lck.tol, tuple(origins), tuple(warnings)
    )


# ---------------------------------------------------------------------------
# Lift: LCK downstairs -> Kahler upstairs with homothety character
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiftResult:
    kahler: KahlerData
    character: Character
    primitive: GlobalFunction
    pulled_back: LCKData
    partial: bool


def lift_to_kahler(lck: LCKData, cover_map: CoveringMap) -> LiftResult:
    """Pull back along the universal cover, kill the Lee form, return the
    homothety character eta -> F(eta x0) - F(x0), F the Lee primitive."""
    total = cover_map.total
    total_group = edge_path_group(total, cover_map.basepoint_lift)
    if bounded_triviality(total_group) is not True:
        gen = total_group.generators[0] if total_group.generators else None
        raise NotSimplyConnectedError(gen)

    pulled = pullback_lck(cover_map, lck)
    theta_up = lee_form(pulled)
    exact = is_exact(theta_up, total, cover_map.basepoint_lift)
    if not exact:
        raise ValidationError(
            f"pulled-back Lee form is not exact on the cover (edge {exact.witness_edge}); "
            "the cover is not simply connected or the data is inconsistent"
        )
    primitive = exact.primitive

    arithmetic_exact = theta_up.exact_arithmetic
    handles: list[PotentialHandle] = []
    for k, chart in enumerate(pulled.cover.charts):
        fac = pulled.factors[k]
        first = chart.vertices[0]
        c = fac[first] - primitive.values[first]
        for v in chart.vertices[1:]:
            other = fac[v] - primitive.values[v]
            if not scalars_equal(other, c, arithmetic_exact, lck.tol):
                raise ValidationError(
                    f"factor minus primitive not constant on lifted chart {k}: {c} vs {other}"
                )
        handles.append(pulled.potentials[k].scaled(c))

    pres = cover_map.presentation
    values = []
    for g in range(pres.rank):
        image = deck_action(cover_map, (g + 1,), cover_map.basepoint_lift)
        values.append(primitive.values[image] - primitive.values[cover_map.basepoint_lift])
    character = Character(pres, tuple(values), lck.tol)

    kahler = make_kahler_data(
        pulled.cover, tuple(handles), lck.tol, pulled.chart_origins
    )
    partial = cover_map.truncated or bool(pulled.warnings)
    return LiftResult(kahler, character, primitive, pulled, partial)


# ---------------------------------------------------------------------------
# Weight bundle, flat sections, descent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    alpha: int
    beta: int
    component: tuple[int, ...]
    log_value: Scalar
    word: Word


@dataclass(frozen=True)
class LineBundleData:
    complex: SimplicialComplex
    cover: Cover
    transitions: tuple[Transition, ...]
    character: Optional[Character]

    def transitions_between(self, alpha: int, beta: int) -> list[Transition]:
        return [t for t in self.transitions if (t.alpha, t.beta) == (alpha, beta)]


def weight_bundle(chi: Character, cx: SimplicialComplex, basepoint: int = 0) -> LineBundleData:
    """The flat weight bundle of a character on the star cover.

    The log-transition on an overlap component is chi on the edge-path word
    running from the beta chart's base vertex through the component's least
    vertex to the alpha chart's base vertex, closed up through the spanning
    tree.  With this orientation a flat section satisfies
    s_alpha = e^{log t} s_beta and deck translates upstairs scale by e^{chi}.
    """
    pres = chi.group
    if pres.complex != cx or pres.basepoint != basepoint:
        raise ValidationError("character is not defined on this complex's edge-path group")
    cover = star_cover(cx)
    transitions: list[Transition] = []
    for alpha in range(len(cover.charts)):
        for beta in range(alpha + 1, len(cover.charts)):
            inter = intersect_subcomplexes(cover.charts[alpha], cover.charts[beta])
            if inter is None:
                continue
            for comp in connected_components(inter):
                w = comp.vertices[0]
                seq = list(pres.tree_path(beta))
                if w != beta:
                    seq.append(w)
                if seq[-1] != alpha:
                    seq.append(alpha)
                back = pres.tree_path(alpha)
                seq.extend(reversed(back[:-1]))
                word = pres.word_of_path(_path(cx, seq))
                transitions.append(Transition(alpha, beta, comp.vertices, chi.evaluate(word), word))
    return LineBundleData(cx, cover, tuple(transitions), chi)


def _path(cx, seq):
    from .complexes import EdgePath

    return EdgePath(cx, tuple(seq))


@dataclass(frozen=True)
class Section:
    """A flat nonvanishing section: one positive constant per chart, stored as logs."""

    bundle: LineBundleData
    chart_logs: tuple[Scalar, ...]

    def log_value(self, chart: int) -> Scalar:
        return self.chart_logs[chart]

    def chart_values(self, chart: int) -> dict[int, float]:
        value = math.exp(float(self.chart_logs[chart]))
        return {v: value for v in self.bundle.cover.charts[chart].vertices}

    def vertex_log(self, vertex: int) -> Scalar:
        """Uniform-weight average of the chart constants over charts containing the vertex."""
        logs = [
            self.chart_logs[i]
            for i, chart in enumerate(self.bundle.cover.charts)
            if vertex in set(chart.vertices)
        ]
        if not logs:
            raise ValidationError(f"vertex {vertex} lies in no chart")
        total = logs[0]
        for x in logs[1:]:
            total = total + x
        if all_exact(logs):
            return total * Fraction(1, len(logs))
        return total / len(logs)


def trivializing_section(bundle: LineBundleData) -> Section:
    """Flat section by tree propagation over the chart-adjacency graph.

    Raises HolonomyObstruction with a witness cycle when the transition
    cocycle is not a coboundary, which happens exactly when the character is
    nontrivial on a cycle of charts.
    """
    n = len(bundle.cover.charts)
    exact = all_exact([t.log_value for t in bundle.transitions])
    logs: list[Optional[Scalar]] = [None] * n
    parent_edge: list[Optional[Transition]] = [None] * n
    adjacency: dict[int, list[Transition]] = {i: [] for i in range(n)}
    for t in bundle.transitions:
        adjacency[t.alpha].append(t)
        adjacency[t.beta].append(t)

    for root in range(n):
        if logs[root] is not None:
            continue
        logs[root] = Fraction(0)
        queue = [root]
        while queue:
            a = queue.pop(0)
            for t in adjacency[a]:
                other = t.beta if t.alpha == a else t.alpha
                if logs[other] is not None:
                    continue
                # s_alpha = e^{log t} s_beta
                if t.alpha == a:
                    logs[other] = logs[a] - t.log_value
                else:
                    logs[other] = logs[a] + t.log_value
                parent_edge[other] = t
                queue.append(other)

    tol = OVERLAP_TOL
    for t in bundle.transitions:
        expected = logs[t.alpha] - logs[t.beta]
        if not scalars_equal(expected, t.log_value, exact, tol):
            cycle = _chart_cycle(parent_edge, t)
            holonomy = t.log_value - expected
            raise HolonomyObstruction(cycle, holonomy)
    return Section(bundle, tuple(logs))


def _chart_cycle(parent_edge, closing: Transition) -> tuple[int, ...]:
    def root_path(c: int) -> list[int]:
        path = [c]
        while parent_edge[path[-1]] is not None:
            t = parent_edge[path[-1]]
            path.append(t.alpha if t.beta == path[-1] else t.beta)
        return path

    pa = root_path(closing.alpha)
    pb = root_path(closing.beta)
    common = set(pa) & set(pb)
    pa = pa[: next(i for i, c in enumerate(pa) if c in common) + 1]
    pb = pb[: next(i for i, c in enumerate(pb) if c in common) + 1]
    return tuple(pa + list(reversed(pb[:-1])))


def pullback_bundle(cover_map: CoveringMap, bundle: LineBundleData) -> LineBundleData:
    """Pull the weight bundle back to the cover; transitions compose with the projection."""
    if bundle.complex != cover_map.base:
        raise ValidationError("bundle does not live on the covering's base")
    base_components: dict[tuple[int, int], list[Transition]] = {}
    for t in bundle.transitions:
        base_components.setdefault((t.alpha, t.beta), []).append(t)

    charts: list[Subcomplex] = []
    origins: list[int] = []
    for i, chart in enumerate(bundle.cover.charts):
        for comp in lift_subcomplex_components(cover_map, chart):
            charts.append(comp)
            origins.append(i)

    transitions: list[Transition] = []
    for i in range(len(charts)):
        for j in range(i + 1, len(charts)):
            oi, oj = origins[i], origins[j]
            if oi == oj:
                continue
            a, b = (oi, oj) if oi < oj else (oj, oi)
            base_ts = base_components.get((a, b))
            if not base_ts:
                continue
            inter = intersect_subcomplexes(charts[i], charts[j])
            if inter is None:
                continue
            for comp in connected_components(inter):
                base_vertex = cover_map.project_vertex(comp.vertices[0])
                base_t = next(t for t in base_ts if base_vertex in set(t.component))
                # orient so that (alpha, beta) = (i, j) with i < j
                if (oi, oj) == (a, b):
                    log_value, word = base_t.log_value, base_t.word
                else:
                    log_value, word = -base_t.log_value, tuple(-x for x in reversed(base_t.word))
                transitions.append(Transition(i, j, comp.vertices, log_value, word))
    cover = Cover(cover_map.total, tuple(charts))
    return LineBundleData(cover_map.total, cover, tuple(transitions), None)


# ---------------------------------------------------------------------------
# Descent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DescendResult:
    lck: LCKData
    section_logs: tuple[Scalar, ...]
    partial: bool


def descend_to_lck(kahler: KahlerData, chi: Character, cover_map: CoveringMap) -> DescendResult:
    """Descend deck-homothety-equivariant Kahler data to LCK data downstairs.

    The deck group must scale the potentials by the reciprocal homothety
    ratio: handle(eta . chart) = e^{-chi(eta)} handle(chart).  The conformal
    factors downstairs come from the flat section of the pulled-back weight
    bundle, smoothed per vertex with uniform weights.
    """
    if kahler.complex != cover_map.total:
        raise ValidationError("Kahler data does not live on the covering's total complex")
    if kahler.chart_origins is None:
        raise ValidationError("Kahler data must carry chart origins (build it by pulling back)")
    pres = cover_map.presentation
    if chi.group.complex != cover_map.base or chi.group.basepoint != pres.basepoint:
        raise ValidationError("character is not defined on the base edge-path group")

    partial = cover_map.truncated
    exact = chi.exact and all(all_exact([h.log_scale]) for h in kahler.potentials)
    chart_by_vertices = {frozenset(c.vertices): k for k, c in enumerate(kahler.cover.charts)}

    # homothety hypothesis on generators
    for g in range(pres.rank):
        word: Word = (g + 1,)
        scale = chi.evaluate(word)
        for k, chart in enumerate(kahler.cover.charts):
            try:
                image_vertices = frozenset(deck_action(cover_map, word, v) for v in chart.vertices)
            except TruncationError:
                partial = True
                continue
            j = chart_by_vertices.get(image_vertices)
            if j is None:
                if cover_map.truncated:
                    # rim component whose image is materialized but not a chart
                    partial = True
                    continue
                raise HomothetyError(word, k, "deck image is not a chart of the Kahler cover")
            hk, hj = kahler.potentials[k], kahler.potentials[j]
            if hk.tag != hj.tag:
                raise HomothetyError(word, k, f"tags differ: {hk.tag} vs {hj.tag}")
            if not scalars_equal(hj.log_scale, hk.log_scale - scale, exact, kahler.tol):
                raise HomothetyError(
                    word,
                    k,
                    f"log scale of image is {hj.log_scale}, expected {hk.log_scale} - {scale}",
                )

    bundle = weight_bundle(chi, cover_map.base, pres.basepoint)
    pulled = pullback_bundle(cover_map, bundle)
    section = trivializing_section(pulled)

    # per-vertex conformal weight upstairs, uniform smoothing over star charts
    f_tilde: dict[int, Scalar] = {}
    membership: dict[int, list[int]] = {}
    for i, chart in enumerate(pulled.cover.charts):
        for v in chart.vertices:
            membership.setdefault(v, []).append(i)
    for v, charts in membership.items():
        logs = [section.chart_logs[i] for i in charts]
        total = logs[0]
        for x in logs[1:]:
            total = total + x
        f_tilde[v] = total * Fraction(1, len(logs)) if all_exact(logs) else total / len(logs)

    # push orbit-representative charts down
    origins = kahler.chart_origins
    base_charts: list[Subcomplex] = []
    handles: list[PotentialHandle] = []
    factors: list[dict[int, Scalar]] = []
    for origin in sorted(set(origins)):
        candidates = [k for k, o in enumerate(origins) if o == origin]
        rep = None
        for k in candidates:
            chart = kahler.cover.charts[k]
            base_vertices = [cover_map.project_vertex(v) for v in chart.vertices]
            if len(set(base_vertices)) != len(base_vertices):
                continue  # wrapped component, not an even lift
            if cover_map.truncated:
                projected = Subcomplex(
                    cover_map.base,
                    tuple(sorted(set(base_vertices))),
                    tuple(sorted({cover_map.project_cell(e) for e in chart.edges})),
                    tuple(sorted({cover_map.project_cell(t) for t in chart.triangles})),
                )
                if not component_is_complete(cover_map, chart, projected):
                    continue
            rep = k
            break
        if rep is None:
            raise TruncationError(
                f"no complete, evenly-lifted chart over base chart {origin} is materialized"
            )
        chart = kahler.cover.charts[rep]
        down_vertices = tuple(sorted(cover_map.project_vertex(v) for v in chart.vertices))
        down_edges = tuple(sorted({cover_map.project_cell(e) for e in chart.edges}))
        down_tris = tuple(sorted({cover_map.project_cell(t) for t in chart.triangles}))
        base_charts.append(Subcomplex(cover_map.base, down_vertices, down_edges, down_tris))
        handles.append(kahler.potentials[rep])
        lift_of = {cover_map.project_vertex(v): v for v in chart.vertices}
        factors.append({v: f_tilde[lift_of[v]] for v in down_vertices})

    cover = Cover(cover_map.base, tuple(base_charts))
    lck = make_lck_data(cover, tuple(handles), factors, tol=kahler.tol)
    return DescendResult(lck, section.chart_logs, partial)


def section_deck_equivariance(
    section: Section, cover_map: CoveringMap, word: Word
) -> list[tuple[int, int, Scalar]]:
    """Chart pairs (c, word.c) with the log-difference of the section constants.

    For a flat section of a pulled-back weight bundle of chi this difference
    is chi(word) on every pair; tests assert it.
    """
    bundle = section.bundle
    chart_by_vertices = {frozenset(c.vertices): k for k, c in enumerate(bundle.cover.charts)}
    out = []
    for k, chart in enumerate(bundle.cover.charts):
        try:
            image = frozenset(deck_action(cover_map, word, v) for v in chart.vertices)
        except TruncationError:
            continue
        j = chart_by_vertices.get(image)
        if j is None:
            continue
        out.append((k, j, section.chart_logs[j] - section.chart_logs[k]))
    return out

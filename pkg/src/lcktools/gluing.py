"""Well-related cover validation, Levi constants, the epsilon plan and gluing.

The pipeline realizes the discrete-fiber construction on grids: given a
polynomial map g between box domains, strongly psh potentials psi on the
target and phi on the source, and radial cutoffs tau, the glued potential on
each chart is

    glued_alpha = psi_alpha o g + phi_eps,
    phi_eps     = sum_alpha eps_alpha * chi_alpha * phi_alpha,
    chi_alpha   = (tau_alpha o g)^2 restricted to the chart U_alpha,

and the plan chooses eps so that (P - B) Q > C^2 holds pointwise, which
keeps every glued potential strongly psh on the support of its cutoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .errors import EstimateError, GridBoundsError, ValidationError
from .grids import (
    BumpSpec,
    GridDomain,
    GridFunction,
    HolomorphicMapSpec,
    Region,
    compose_with_map,
)
from .hessian import (
    hessian_entry_fields,
    holomorphic_gradient_fields,
    max_abs_eigenvalue_field,
    min_eigenvalue_field,
    pluriharmonic_report,
    strong_psh_report,
)

DEFAULT_SAFETY = (0.8, 1.25)


@dataclass(frozen=True)
class PreimageSeed:
    """Declares a source chart as the preimage component containing the seed point."""

    point: tuple[complex, ...]


@dataclass(frozen=True)
class WellRelatedChart:
    name: str
    source_region: Union[Region, PreimageSeed]   # U_alpha
    target_region: Region                        # V_alpha
    psi: GridFunction                            # strongly psh on V_alpha
    phi: GridFunction                            # strongly psh, positive on U_alpha
    tau: Union[BumpSpec, GridFunction]           # cutoff supported in V_alpha
    conformal_factor: Optional[GridFunction] = None
    core: Optional[Region] = None                # K_alpha, informational


@dataclass(frozen=True)
class WellRelatedCoverSpec:
    map: HolomorphicMapSpec
    source: GridDomain
    target: GridDomain
    charts: tuple[WellRelatedChart, ...]

    def __post_init__(self):
        if self.map.dim_in != self.source.dim or self.map.dim_out != self.target.dim:
            raise ValidationError("map dimensions must match source/target domains")
        for chart in self.charts:
            if chart.psi.domain != self.target:
                raise ValidationError(f"chart {chart.name}: psi must live on the target domain")
            if chart.phi.domain != self.source:
                raise ValidationError(f"chart {chart.name}: phi must live on the source domain")
            if isinstance(chart.tau, GridFunction) and chart.tau.domain != self.target:
                raise ValidationError(f"chart {chart.name}: tau must live on the target domain")


def _cache(spec: WellRelatedCoverSpec, key: str, build):
    store = spec.__dict__.get("_cache")
    if store is None:
        store = {}
        object.__setattr__(spec, "_cache", store)
    if key not in store:
        store[key] = build()
    return store[key]


def image_coordinates(spec: WellRelatedCoverSpec) -> list[np.ndarray]:
    return _cache(spec, "image", lambda: spec.map.evaluate(spec.source.complex_coordinates()))


def preimage_mask(spec: WellRelatedCoverSpec, chart_index: int) -> np.ndarray:
    """Sampled g^{-1}(V_alpha)."""
    def build():
        return spec.charts[chart_index].target_region.contains(image_coordinates(spec))

    return _cache(spec, f"preimage:{chart_index}", build)


def preimage_components(spec: WellRelatedCoverSpec, chart_index: int):
    """Flood-fill labels of the sampled preimage, 2N-axis adjacency."""
    def build():
        mask = preimage_mask(spec, chart_index)
        structure = ndimage.generate_binary_structure(mask.ndim, 1)
        labels, count = ndimage.label(mask, structure=structure)
        return labels, count

    return _cache(spec, f"components:{chart_index}", build)


def chart_mask(spec: WellRelatedCoverSpec, chart_index: int) -> np.ndarray:
    """Sampled U_alpha: an explicit region, or the seeded preimage component."""
    def build():
        chart = spec.charts[chart_index]
        if isinstance(chart.source_region, PreimageSeed):
            labels, _ = preimage_components(spec, chart_index)
            seed_idx = spec.source.nearest_index(chart.source_region.point)
            label = labels[seed_idx]
            if label == 0:
                raise ValidationError(
                    f"chart {chart.name}: seed {chart.source_region.point} is not in the preimage"
                )
            return labels == label
        return chart.source_region.mask(spec.source)

    return _cache(spec, f"chart:{chart_index}", build)


def chi_sqrt_field(spec: WellRelatedCoverSpec, chart_index: int) -> np.ndarray:
    """tau_alpha o g, restricted to U_alpha (zero elsewhere)."""
    def build():
        chart = spec.charts[chart_index]
        if isinstance(chart.tau, BumpSpec):
            values = chart.tau(*image_coordinates(spec))
        else:
            values = compose_with_map(chart.tau, spec.map, spec.source).values
            values = np.clip(values, 0.0, None)
        return np.where(chart_mask(spec, chart_index), values, 0.0)

    return _cache(spec, f"chisqrt:{chart_index}", build)


def chi_field(spec: WellRelatedCoverSpec, chart_index: int) -> np.ndarray:
    return _cache(spec, f"chi:{chart_index}", lambda: chi_sqrt_field(spec, chart_index) ** 2)


def tau_grid(spec: WellRelatedCoverSpec, chart_index: int) -> GridFunction:
    """tau materialized on the target grid (for its Hessian and gradient)."""
    def build():
        tau = spec.charts[chart_index].tau
        if isinstance(tau, BumpSpec):
            return tau.materialize(spec.target)
        return tau

    return _cache(spec, f"taugrid:{chart_index}", build)


def composed_psi(spec: WellRelatedCoverSpec, chart_index: int) -> np.ndarray:
    def build():
        return compose_with_map(spec.charts[chart_index].psi, spec.map, spec.source).values

    return _cache(spec, f"psig:{chart_index}", build)


def image_nearest_indices(spec: WellRelatedCoverSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per source node: flattened nearest target index, and an in-interior flag."""
    def build():
        images = image_coordinates(spec)
        target = spec.target
        shape = target.shape
        idx_axes = []
        inside = np.ones(spec.source.shape, dtype=bool)
        for j, w in enumerate(images):
            re_min, _, im_min, _ = target.box[j]
            i_re = np.rint((w.real - re_min) / target.h).astype(np.int64)
            i_im = np.rint((w.imag - im_min) / target.h).astype(np.int64)
            n_re, n_im = shape[2 * j], shape[2 * j + 1]
            inside &= (i_re >= 2) & (i_re <= n_re - 3) & (i_im >= 2) & (i_im <= n_im - 3)
            idx_axes.extend((np.clip(i_re, 0, n_re - 1), np.clip(i_im, 0, n_im - 1)))
        flat = np.ravel_multi_index(tuple(idx_axes), shape)
        return flat, inside

    return _cache(spec, "image_indices", build)


# ---------------------------------------------------------------------------
# Well-relatedness report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionResult:
    name: str
    ok: bool
    detail: str
    witness: Optional[tuple] = None


@dataclass(frozen=True)
class WellRelatedReport:
    charts: tuple[tuple[ConditionResult, ...], ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for per_chart in self.charts for c in per_chart)

    def failures(self) -> list[tuple[int, ConditionResult]]:
        return [
            (i, c) for i, per_chart in enumerate(self.charts) for c in per_chart if not c.ok
        ]


def validate_well_related(
    spec: WellRelatedCoverSpec, psh_margin: float = 1e-8
) -> WellRelatedReport:
    """The four conditions of well-relatedness, checked per chart on the grids."""
    per_chart: list[tuple[ConditionResult, ...]] = []
    interior = spec.source.interior_mask()
    for i, chart in enumerate(spec.charts):
        results: list[ConditionResult] = []

        # (1) psi strongly psh on V_alpha
        try:
            rep = strong_psh_report(chart.psi, region=chart.target_region, margin=psh_margin)
            results.append(
                ConditionResult(
                    "psi_strongly_psh",
                    rep.ok,
                    f"min eigenvalue {rep.worst_eigenvalue:.6g} at {rep.worst_point}",
                    rep.worst_point,
                )
            )
        except GridBoundsError as err:
            results.append(ConditionResult("psi_strongly_psh", False, str(err)))

        # (2) locally finite, relatively compact: U nonempty and inside the source interior
        mask = chart_mask(spec, i)
        nonempty = bool(mask.any())
        escapes = bool((mask & ~interior).any())
        witness = None
        if escapes:
            idx = np.unravel_index(int(np.argmax(mask & ~interior)), mask.shape)
            witness = spec.source.point_of_index(idx)
        results.append(
            ConditionResult(
                "chart_relatively_compact",
                nonempty and not escapes,
                "chart empty" if not nonempty else (
                    f"chart touches the source boundary at {witness}" if escapes else
                    f"{int(mask.sum())} nodes, interior"
                ),
                witness,
            )
        )

        # (3) phi strongly psh and positive on U_alpha
        if nonempty and not escapes:
            rep = strong_psh_report(chart.phi, margin=psh_margin, extra_mask=mask)
            min_phi = float(np.min(np.where(mask, chart.phi.values, np.inf)))
            pos_ok = min_phi > 0.0
            ok = rep.ok and pos_ok
            detail = f"min eigenvalue {rep.worst_eigenvalue:.6g} at {rep.worst_point}, min value {min_phi:.6g}"
            results.append(ConditionResult("phi_strongly_psh_positive", ok, detail, rep.worst_point))
        else:
            results.append(ConditionResult("phi_strongly_psh_positive", False, "chart mask invalid"))

        # (4) U_alpha is a full connected component of g^{-1}(V_alpha)
        labels, _ = preimage_components(spec, i)
        if nonempty:
            chart_labels = np.unique(labels[mask])
            if len(chart_labels) == 1 and chart_labels[0] != 0:
                component = labels == chart_labels[0]
                diff = component ^ mask
                if diff.any():
                    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
                    results.append(
                        ConditionResult(
                            "full_preimage_component",
                            False,
                            f"chart differs from its flood-fill component at {spec.source.point_of_index(idx)}",
                            spec.source.point_of_index(idx),
                        )
                    )
                else:
                    results.append(
                        ConditionResult("full_preimage_component", True, "chart equals one component")
                    )
            else:
                results.append(
                    ConditionResult(
                        "full_preimage_component",
                        False,
                        f"chart meets {len([l for l in chart_labels if l != 0])} components "
                        f"(and {'includes' if 0 in chart_labels else 'excludes'} non-preimage nodes)",
                    )
                )
        else:
            results.append(ConditionResult("full_preimage_component", False, "chart empty"))

        # cutoff support containment (construction hygiene, reported alongside)
        tau_vals = tau_grid(spec, i).values
        v_mask = chart.target_region.mask(spec.target)
        outside = (tau_vals > 0) & ~v_mask
        if outside.any():
            idx = np.unravel_index(int(np.argmax(outside)), outside.shape)
            results.append(
                ConditionResult(
                    "tau_supported_in_target_chart",
                    False,
                    f"tau positive outside V at {spec.target.point_of_index(idx)}",
                    spec.target.point_of_index(idx),
                )
            )
        else:
            results.append(ConditionResult("tau_supported_in_target_chart", True, "supp tau inside V"))

        per_chart.append(tuple(results))
    return WellRelatedReport(tuple(per_chart))


# ---------------------------------------------------------------------------
# Levi constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeviEstimate:
    """Raw sweep values; the plan applies its one-sided safety factors."""

    chart: int
    p: float
    q: float
    b: float
    c: float
    n_samples: int


def levi_constants(
    spec: WellRelatedCoverSpec,
    chart_index: int,
    region: Optional[Region] = None,
    sample_mask: Optional[np.ndarray] = None,
) -> LeviEstimate:
    """Sweep the four Levi bounds over a compact region inside the chart.

    p: directional floor of Hess(psi) at g(x) along the Jacobian image.
    q: eigenvalue floor of Hess(phi).
    b: sup |phi| * opnorm Hess(tau) at g(x).
    c: sup |grad tau(g(x))| * |grad phi(x)|.
    """
    chart = spec.charts[chart_index]
    u_mask = chart_mask(spec, chart_index)
    if sample_mask is not None:
        mask = sample_mask.copy()
    elif region is not None:
        mask = region.mask(spec.source)
    else:
        mask = chi_field(spec, chart_index) > 0
    mask &= spec.source.interior_mask()
    if not mask.any():
        raise GridBoundsError("no interior sample nodes in the region")
    if (mask & ~u_mask).any():
        idx = np.unravel_index(int(np.argmax(mask & ~u_mask)), mask.shape)
        raise ValidationError(
            f"region leaves chart {chart.name} at {spec.source.point_of_index(idx)}"
        )

    flat_idx, inside = image_nearest_indices(spec)
    if not bool(inside[mask].all()):
        bad = mask & ~inside
        idx = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise GridBoundsError(
            f"g(region) leaves the target interior at source point {spec.source.point_of_index(idx)}"
        )
    sel = flat_idx[mask]

    # q from the source-side Hessian of phi
    q_field = min_eigenvalue_field(chart.phi)
    q = float(np.min(q_field[mask]))

    # b and c from the cutoff on the target side
    tau = tau_grid(spec, chart_index)
    tau_opnorm = max_abs_eigenvalue_field(tau).ravel()[sel]
    phi_abs = np.abs(chart.phi.values[mask])
    b = float(np.max(phi_abs * tau_opnorm))

    tau_grad = np.zeros(spec.target.shape)
    for g in holomorphic_gradient_fields(tau):
        tau_grad = tau_grad + np.abs(g) ** 2
    tau_grad = np.sqrt(tau_grad).ravel()[sel]
    phi_grad = np.zeros(spec.source.shape)
    for g in holomorphic_gradient_fields(chart.phi):
        phi_grad = phi_grad + np.abs(g) ** 2
    phi_grad = np.sqrt(phi_grad)[mask]
    c = float(np.max(tau_grad * phi_grad))

    # p: target Hessian of psi at g(x), restricted to the Jacobian image
    jac = spec.map.evaluate_jacobian(spec.source.complex_coordinates())[mask]
    psi_fields = hessian_entry_fields(chart.psi)
    if spec.target.dim == 1 and spec.source.dim == 1:
        hpsi = psi_fields[0].ravel()[sel]
        nonzero = np.abs(jac[:, 0, 0]) > 1e-12
        if not nonzero.any():
            raise EstimateError("Jacobian vanishes on the whole region; p is undefined")
        p = float(np.min(hpsi[nonzero]))
    else:
        p = _restricted_eigenvalue_floor(psi_fields, sel, jac, spec.target.dim)

    if p <= 0 or q <= 0:
        raise EstimateError(
            f"chart {chart.name}: nonpositive Levi constants p={p:.6g}, q={q:.6g} "
            "(inputs not strongly psh where required)"
        )
    return LeviEstimate(chart_index, p, q, b, c, int(mask.sum()))


def _restricted_eigenvalue_floor(psi_fields, sel, jac, dim_out: int) -> float:
    """min over samples of the Hessian form restricted to the Jacobian column space."""
    if dim_out == 1:
        h = psi_fields[0].ravel()[sel]
        norms = np.linalg.norm(jac.reshape(len(sel), -1), axis=1)
        keep = norms > 1e-12
        if not keep.any():
            raise EstimateError("Jacobian vanishes on the whole region; p is undefined")
        return float(np.min(h[keep]))
    h11, h22, h12r, h12i = (f.ravel()[sel] for f in psi_fields)
    best = math.inf
    found = False
    for k in range(len(sel)):
        H = np.array(
            [
                [h11[k], h12r[k] + 1j * h12i[k]],
                [h12r[k] - 1j * h12i[k], h22[k]],
            ]
        )
        J = jac[k]
        u, s, _ = np.linalg.svd(J, full_matrices=False)
        cols = u[:, s > 1e-12]
        if cols.shape[1] == 0:
            continue
        found = True
        restricted = cols.conj().T @ H @ cols
        best = min(best, float(np.linalg.eigvalsh(restricted)[0]))
    if not found:
        raise EstimateError("Jacobian vanishes on the whole region; p is undefined")
    return best


# ---------------------------------------------------------------------------
# Overlap structure and the epsilon plan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanRegion:
    label: str
    mask: np.ndarray
    index: tuple[int, ...]


@dataclass(frozen=True)
class OverlapStructure:
    regions: tuple[PlanRegion, ...]
    chi_sqrt: tuple[np.ndarray, ...]
    chi: tuple[np.ndarray, ...]


def build_overlap_structure(spec: WellRelatedCoverSpec) -> OverlapStructure:
    """One region per chart: its sampled cutoff support, indexed by every
    chart whose support meets it."""
    interior = spec.source.interior_mask()
    chi_sqrt = tuple(chi_sqrt_field(spec, i) for i in range(len(spec.charts)))
    chi = tuple(chi_sqrt_field(spec, i) ** 2 for i in range(len(spec.charts)))
    supports = [cs > 0 for cs in chi_sqrt]
    regions = []
    for i, support in enumerate(supports):
        mask = support & interior
        if not mask.any():
            raise ValidationError(f"chart {spec.charts[i].name}: cutoff support has no interior nodes")
        index = tuple(j for j, s in enumerate(supports) if (mask & s).any())
        regions.append(PlanRegion(f"L{i}", mask, index))
    return OverlapStructure(tuple(regions), chi_sqrt, chi)


@dataclass(frozen=True)
class EpsilonPlan:
    epsilons: tuple[float, ...]
    deltas: tuple[float, ...]
    region_labels: tuple[str, ...]
    safety: tuple[float, float]
    halvings: int


def plan_pointwise_check(
    estimates: Sequence[LeviEstimate],
    overlaps: OverlapStructure,
    epsilons: Sequence[float],
    safety: tuple[float, float] = DEFAULT_SAFETY,
) -> tuple[bool, Optional[str]]:
    """Verify B <= P/2 and (P - B) Q > C^2 at every region sample."""
    shrink, widen = safety
    by_chart = {e.chart: e for e in estimates}
    for region in overlaps.regions:
        mask = region.mask
        if not mask.any():
            continue
        P = min(shrink * by_chart[a].p for a in region.index)
        Q = np.zeros(mask.sum())
        B = np.zeros(mask.sum())
        C = np.zeros(mask.sum())
        chi_sum = np.zeros(mask.sum())
        for a in region.index:
            est = by_chart[a]
            chi = overlaps.chi[a][mask]
            chs = overlaps.chi_sqrt[a][mask]
            Q += epsilons[a] * (shrink * est.q) * chi
            B += 2.0 * epsilons[a] * (widen * est.b) * chs
            C += 2.0 * epsilons[a] * (widen * est.c) * chs
            chi_sum += chi
        if np.any(B > P / 2 + 1e-15):
            return False, f"{region.label}: B exceeds P/2 (max B {float(B.max()):.6g}, P {P:.6g})"
        active = chi_sum > 0
        lhs = (P - B[active]) * Q[active]
        rhs = C[active] ** 2
        if np.any(lhs <= rhs):
            k = int(np.argmax(rhs - lhs))
            return False, f"{region.label}: (P-B)Q > C^2 fails (gap {float((lhs-rhs).min()):.6g})"
    return True, None


def epsilon_plan(
    estimates: Sequence[LeviEstimate],
    overlaps: OverlapStructure,
    safety: tuple[float, float] = DEFAULT_SAFETY,
    cap: float = 1.0,
    max_halvings: int = 40,
) -> EpsilonPlan:
    """Two-step schedule per region, then a pointwise re-verification.

    Step one forces B <= P/2; step two applies the Schwarz bound
    sqrt(eps q) >= eps sqrt(q / delta) with the explicit overlap count in
    place of the undetermined constant.  eps_alpha is the min of delta over
    the regions whose index set contains alpha.
    """
    shrink, widen = safety
    by_chart = {e.chart: e for e in estimates}
    deltas: list[float] = []
    for region in overlaps.regions:
        P = min(shrink * by_chart[a].p for a in region.index)
        n = len(region.index)
        b_hat = np.zeros(int(region.mask.sum()))
        for a in region.index:
            b_hat += (widen * by_chart[a].b) * overlaps.chi_sqrt[a][region.mask]
        b_max = float(b_hat.max()) if b_hat.size else 0.0
        delta1 = P / (4.0 * b_max) if b_max > 0 else cap
        delta2 = cap
        for a in region.index:
            est = by_chart[a]
            c_eff = widen * est.c
            if c_eff > 0:
                delta2 = min(delta2, P * (shrink * est.q) / (8.0 * n * c_eff**2))
        deltas.append(min(delta1, delta2, cap))

    n_charts = len(overlaps.chi)
    epsilons = []
    for a in range(n_charts):
        relevant = [d for d, r in zip(deltas, overlaps.regions) if a in r.index]
        epsilons.append(min(relevant) if relevant else cap)

    halvings = 0
    while True:
        ok, detail = plan_pointwise_check(estimates, overlaps, epsilons, safety)
        if ok:
            break
        halvings += 1
        if halvings > max_halvings:
            raise EstimateError(f"no epsilon found within {max_halvings} halvings: {detail}")
        epsilons = [e / 2.0 for e in epsilons]
    return EpsilonPlan(tuple(epsilons), tuple(deltas), tuple(r.label for r in overlaps.regions), safety, halvings)


# ---------------------------------------------------------------------------
# Gluing and verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GluedPotential:
    chart: int
    domain: GridDomain
    psi_part: np.ndarray
    eps_part: np.ndarray   # one shared array across all charts
    support: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.psi_part + self.eps_part

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.domain, self.values)


def glue_potentials(spec: WellRelatedCoverSpec, plan: EpsilonPlan) -> tuple[GluedPotential, ...]:
    """phi_eps once, then psi_alpha o g + phi_eps per chart."""
    if len(plan.epsilons) != len(spec.charts):
        raise ValidationError("plan has the wrong number of charts")
    phi_eps = np.zeros(spec.source.shape)
    for i, chart in enumerate(spec.charts):
        phi_eps = phi_eps + plan.epsilons[i] * chi_field(spec, i) * chart.phi.values
    out = []
    for i in range(len(spec.charts)):
        psi_part = composed_psi(spec, i)
        out.append(
            GluedPotential(i, spec.source, psi_part, phi_eps, chi_sqrt_field(spec, i) > 0)
        )
    return tuple(out)


def glued_overlap_difference(a: GluedPotential, b: GluedPotential) -> np.ndarray:
    """Difference of glued potentials; the shared phi_eps cancels structurally."""
    if a.eps_part is not b.eps_part:
        raise ValidationError("glued potentials come from different plans")
    return a.psi_part - b.psi_part


@dataclass(frozen=True)
class GluedReport:
    chart_reports: tuple
    overlap_reports: tuple

    @property
    def ok(self) -> bool:
        return all(r.ok for _, r in self.chart_reports) and all(
            r.ok for _, _, r in self.overlap_reports
        )

    @property
    def worst_margin(self) -> float:
        return min(r.worst_eigenvalue for _, r in self.chart_reports)


def verify_glued_psh(
    spec: WellRelatedCoverSpec,
    glued: Sequence[GluedPotential],
    margin: float = 1e-6,
    pluriharmonic_tol: float = 1e-6,
) -> GluedReport:
    """Strong psh of each glued potential on its cutoff support, plus
    pluriharmonicity of the overlap differences on chart intersections."""
    interior = spec.source.interior_mask()
    chart_reports = []
    for g in glued:
        mask = g.support & interior
        if not mask.any():
            raise ValidationError(f"chart {g.chart}: no interior support to verify")
        rep = strong_psh_report(g.as_grid_function(), margin=margin, extra_mask=mask)
        chart_reports.append((g.chart, rep))
    overlap_reports = []
    for i in range(len(glued)):
        for j in range(i + 1, len(glued)):
            mask = chart_mask(spec, i) & chart_mask(spec, j) & interior
            if not mask.any():
                continue
            diff = glued_overlap_difference(glued[i], glued[j])
            rep = pluriharmonic_report(spec.source, diff, tol=pluriharmonic_tol, extra_mask=mask)
            overlap_reports.append((i, j, rep))
    return GluedReport(tuple(chart_reports), tuple(overlap_reports))


def refine_epsilon(
    spec: WellRelatedCoverSpec,
    plan: EpsilonPlan,
    margin: float = 1e-6,
    max_bisections: int = 40,
) -> tuple[EpsilonPlan, tuple[GluedPotential, ...], GluedReport]:
    """Halve the plan until the glued potentials verify with the margin."""
    current = plan
    for _ in range(max_bisections + 1):
        glued = glue_potentials(spec, current)
        report = verify_glued_psh(spec, glued, margin=margin)
        if report.ok:
            return current, glued, report
        current = replace(
            current,
            epsilons=tuple(e / 2.0 for e in current.epsilons),
            halvings=current.halvings + 1,
        )
    raise EstimateError(f"glued potentials never verified within {max_bisections} bisections")


# ---------------------------------------------------------------------------
# Character-scaled families (finite cyclic deck model)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyAction:
    source_index: int
    target_index: int
    factor_coeff: int  # multiplies by e^{factor_coeff * rho}


@dataclass(frozen=True)
class CharacterScaledFamily:
    """Members e^{k rho} phi for k in Z/m, with the index-shifting deck action.

    Log factors are tracked as integer coefficients of rho, so composition
    identities are exact integer arithmetic; the multiplicative factors are
    exponentiated on demand.
    """

    base: GridFunction
    rho: float
    order: int

    def __post_init__(self):
        if self.order <= 0:
            raise ValidationError("group order must be positive")

    def member_coeff(self, k: int) -> int:
        return k % self.order

    def member_values(self, k: int) -> np.ndarray:
        return math.exp(self.member_coeff(k) * self.rho) * self.base.values

    def act(self, j: int, k: int) -> FamilyAction:
        """Acting by j sends member k to member (k - j) mod m with factor e^{j rho}."""
        return FamilyAction(k % self.order, (k - j) % self.order, j)

    def compose(self, second: FamilyAction, first: FamilyAction) -> FamilyAction:
        if second.source_index != first.target_index:
            raise ValidationError("actions do not compose: indices mismatch")
        return FamilyAction(
            first.source_index, second.target_index, first.factor_coeff + second.factor_coeff
        )

    def factor_value(self, action: FamilyAction) -> float:
        return math.exp(action.factor_coeff * self.rho)


def character_scaled_family(phi: GridFunction, rho: float, order: int) -> CharacterScaledFamily:
    return CharacterScaledFamily(phi, float(rho), order)


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineStage:
    name: str
    ok: bool
    detail: str


@dataclass(frozen=True)
class PipelineResult:
    stages: tuple[PipelineStage, ...]
    report: Optional[WellRelatedReport]
    estimates: tuple[LeviEstimate, ...]
    plan: Optional[EpsilonPlan]
    glued_report: Optional[GluedReport]

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.stages)


def run_pipeline(
    spec: WellRelatedCoverSpec,
    margin: float = 1e-6,
    psh_margin: float = 1e-8,
    safety: tuple[float, float] = DEFAULT_SAFETY,
) -> PipelineResult:
    """validate -> levi constants -> epsilon plan -> glue -> verify."""
    stages: list[PipelineStage] = []

    report = validate_well_related(spec, psh_margin=psh_margin)
    if not report.ok:
        first = report.failures()[0]
        stages.append(
            PipelineStage("validate", False, f"chart {first[0]} fails {first[1].name}: {first[1].detail}")
        )
        return PipelineResult(tuple(stages), report, (), None, None)
    stages.append(PipelineStage("validate", True, "well-related conditions hold"))

    overlaps = build_overlap_structure(spec)
    try:
        estimates = tuple(
            levi_constants(spec, i, sample_mask=region.mask)
            for i, region in enumerate(overlaps.regions)
        )
    except (EstimateError, GridBoundsError, ValidationError) as err:
        stages.append(PipelineStage("levi_constants", False, str(err)))
        return PipelineResult(tuple(stages), report, (), None, None)
    stages.append(
        PipelineStage(
            "levi_constants",
            True,
            "; ".join(
                f"{spec.charts[e.chart].name}: p={e.p:.4g} q={e.q:.4g} b={e.b:.4g} c={e.c:.4g}"
                for e in estimates
            ),
        )
    )

    try:
        plan = epsilon_plan(estimates, overlaps, safety=safety)
    except EstimateError as err:
        stages.append(PipelineStage("epsilon_plan", False, str(err)))
        return PipelineResult(tuple(stages), report, estimates, None, None)
    stages.append(
        PipelineStage(
            "epsilon_plan",
            True,
            "eps = " + ", ".join(f"{e:.6g}" for e in plan.epsilons) + f" ({plan.halvings} halvings)",
        )
    )

    try:
        plan, glued, glued_report = refine_epsilon(spec, plan, margin=margin)
    except EstimateError as err:
        stages.append(PipelineStage("verify_glued", False, str(err)))
        return PipelineResult(tuple(stages), report, estimates, plan, None)
    stages.append(
        PipelineStage(
            "verify_glued",
            glued_report.ok,
            f"worst eigenvalue margin {glued_report.worst_margin:.6g}"
            + (f" after {plan.halvings} halvings" if plan.halvings else ""),
        )
    )
    return PipelineResult(tuple(stages), report, estimates, plan, glued_report)

import math

import numpy as np
import pytest

from lcktools.errors import EstimateError, ValidationError
from lcktools.gluing import (
    PreimageSeed,
    WellRelatedChart,
    WellRelatedCoverSpec,
    build_overlap_structure,
    character_scaled_family,
    chart_mask,
    chi_field,
    chi_sqrt_field,
    epsilon_plan,
    glue_potentials,
    glued_overlap_difference,
    levi_constants,
    preimage_components,
    refine_epsilon,
    run_pipeline,
    validate_well_related,
    verify_glued_psh,
)
from lcktools.grids import (
    BumpSpec,
    GridDomain,
    GridFunction,
    HolomorphicMapSpec,
    Region,
    grid_function_from,
)

H = 1 / 32


def annulus_spec(h=H, corrupt=False, steep_tau=False):
    """The z^2 two-chart configuration used across the gluing tests."""
    src = GridDomain(1, ((-1.5, 1.5, -1.5, 1.5),), h)
    tgt = GridDomain(1, ((-2.5, 2.5, -4.75, 4.75),), h)
    gmap = HolomorphicMapSpec(1, 1, ({(2,): 1.0},))
    psi0 = grid_function_from(tgt, lambda w: np.abs(w) ** 2)
    psi1 = grid_function_from(tgt, lambda w: np.abs(w) ** 2 + 0.5 * w.real)
    if corrupt:
        phi0 = grid_function_from(src, lambda z: 3.0 * z.real + 5.0)
    else:
        phi0 = grid_function_from(src, lambda z: np.abs(z) ** 2 + 1.0)
    phi1 = grid_function_from(src, lambda z: np.abs(z) ** 2 + 1.0 + 0.25 * (z**2).real)
    width = (0.45, 0.55) if steep_tau else (0.35, 0.55)
    charts = (
        WellRelatedChart(
            "U0", PreimageSeed((1.0 + 0j,)), Region(box=((0.45, 1.60, -0.60, 0.60),)),
            psi0, phi0, BumpSpec((1.0 + 0j,), width[0], width[1]),
        ),
        WellRelatedChart(
            "U1", PreimageSeed((0.975 + 0j,)), Region(box=((0.40, 1.55, -0.65, 0.65),)),
            psi1, phi1, BumpSpec((0.95 + 0j,), width[0], width[1]),
        ),
    )
    return WellRelatedCoverSpec(gmap, src, tgt, charts)


def identity_spec(h=1 / 16):
    """g = id, U = V = a box, psi = phi = |z|^2 + 1: the trivial passing case."""
    dom = GridDomain(1, ((-1.0, 1.0, -1.0, 1.0),), h)
    gmap = HolomorphicMapSpec(1, 1, ({(1,): 1.0},))
    box = Region(box=((-0.6, 0.6, -0.6, 0.6),))
    psi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1.0)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1.0)
    tau = BumpSpec((0j,), 0.3, 0.5)
    return WellRelatedCoverSpec(
        gmap, dom, dom, (WellRelatedChart("U", box, box, psi, phi, tau),)
    )


@pytest.fixture(scope="module")
def spec():
    return annulus_spec()


def test_identity_spec_passes():
    result = run_pipeline(identity_spec())
    assert result.ok
    assert all(s.ok for s in result.stages)


def test_preimage_has_two_components(spec):
    labels, count = preimage_components(spec, 0)
    assert count == 2


def test_validate_well_related_passes(spec):
    report = validate_well_related(spec)
    assert report.ok


def test_merged_components_fail_condition_four():
    base = annulus_spec()
    # an annulus region covering both preimage blobs is not one component
    both = Region(annuli=((0, 0.67, 1.27),))
    charts = (
        WellRelatedChart(
            "U0", both, base.charts[0].target_region, base.charts[0].psi,
            base.charts[0].phi, base.charts[0].tau,
        ),
        base.charts[1],
    )
    spec2 = WellRelatedCoverSpec(base.map, base.source, base.target, charts)
    report = validate_well_related(spec2)
    failures = [c.name for _, c in report.failures()]
    assert "full_preimage_component" in failures


def test_corrupted_phi_fails_with_witness():
    report = validate_well_related(annulus_spec(corrupt=True))
    assert not report.ok
    bad = [c for _, c in report.failures() if c.name == "phi_strongly_psh_positive"]
    assert bad and bad[0].witness is not None


def test_chi_masked_to_chart(spec):
    # tau o g is positive on both preimage blobs, chi only on the seeded one
    mask0 = chart_mask(spec, 0)
    chi0 = chi_field(spec, 0)
    assert (chi0[~mask0] == 0).all()
    tau_vals = spec.charts[0].tau(*__import__("lcktools.gluing", fromlist=["image_coordinates"]).image_coordinates(spec))
    assert ((tau_vals > 0) & ~mask0).any()  # the mirror blob exists and is masked off


def test_levi_constants_identity_values():
    # psi = |w|^2 + 1 has Hessian exactly 1, so p = q = 1 before safety factors
    est = levi_constants(identity_spec(), 0)
    assert est.p == 1.0
    assert est.q == 1.0
    assert est.b > 0 and est.c > 0


def test_levi_constants_tau_one_gives_zero_b_c():
    dom = GridDomain(1, ((-1.0, 1.0, -1.0, 1.0),), 1 / 16)
    gmap = HolomorphicMapSpec(1, 1, ({(1,): 1.0},))
    box = Region(box=((-0.4, 0.4, -0.4, 0.4),))
    psi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1.0)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1.0)
    tau = BumpSpec((0j,), 0.9, 1.6)  # identically 1 on the whole box of interest
    spec2 = WellRelatedCoverSpec(gmap, dom, dom, (WellRelatedChart("U", box, box, psi, phi, tau),))
    est = levi_constants(spec2, 0, region=box)
    assert est.b == 0.0 and est.c == 0.0
    plan = epsilon_plan((est,), build_overlap_structure(spec2))
    assert plan.epsilons == (1.0,)


def dense_levi_oracle(h_fine):
    """Brute-force chart-0 sweep at a fine spacing, written independently:
    flat numpy formulas only, no toolkit grid machinery."""
    from scipy import ndimage

    axis = np.arange(-1.5, 1.5 + h_fine / 2, h_fine)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    z = X + 1j * Y
    w = z**2
    in_v = (w.real >= 0.45) & (w.real <= 1.60) & (w.imag >= -0.60) & (w.imag <= 0.60)
    labels, _ = ndimage.label(in_v)
    seed = (np.argmin(np.abs(axis - 1.0)), np.argmin(np.abs(axis - 0.0)))
    u_mask = labels == labels[seed]

    def tau(points):
        d = np.abs(points - 1.0)
        t = np.clip((d - 0.35) / 0.20, 0.0, 1.0)
        return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))

    interior = np.zeros_like(u_mask)
    interior[2:-2, 2:-2] = True
    mask = u_mask & (tau(w) > 0) & interior
    zsel, wsel = z[mask], w[mask]
    d = h_fine
    f0 = tau(wsel)
    fxp, fxm = tau(wsel + d), tau(wsel - d)
    fyp, fym = tau(wsel + 1j * d), tau(wsel - 1j * d)
    lap4 = (fxp + fxm + fyp + fym - 4 * f0) / (4 * d * d)
    p = 1.0  # psi0 = |w|^2 has complex Hessian identically 1
    q = 1.0  # phi0 = |z|^2 + 1 likewise
    phi_abs = np.abs(zsel) ** 2 + 1.0
    b = float(np.max(phi_abs * np.abs(lap4)))
    dtau = ((fxp - fxm) - 1j * (fyp - fym)) / (4 * d)
    c = float(np.max(np.abs(dtau) * np.abs(np.conj(zsel))))
    return p, q, b, c


def test_levi_constants_match_dense_oracle():
    """Constants at the working spacing match a h/4 brute-force sweep to 5%."""
    h = 1 / 128
    est = levi_constants(annulus_spec(h=h), 0)
    p, q, b, c = dense_levi_oracle(h / 4)
    assert est.p == pytest.approx(p, rel=0.05)
    assert est.q == pytest.approx(q, rel=0.05)
    assert est.b == pytest.approx(b, rel=0.05)
    assert est.c == pytest.approx(c, rel=0.05)


def test_epsilon_plan_symmetry():
    # two charts with identical constants get identical epsilons
    spec2 = annulus_spec()
    overlaps = build_overlap_structure(spec2)
    from lcktools.gluing import LeviEstimate

    ests = (LeviEstimate(0, 1.0, 1.0, 50.0, 5.0, 100), LeviEstimate(1, 1.0, 1.0, 50.0, 5.0, 100))
    plan = epsilon_plan(ests, overlaps)
    assert plan.epsilons[0] == plan.epsilons[1]


def test_plan_pointwise_soundness(spec):
    overlaps = build_overlap_structure(spec)
    estimates = tuple(
        levi_constants(spec, i, sample_mask=r.mask) for i, r in enumerate(overlaps.regions)
    )
    plan = epsilon_plan(estimates, overlaps)
    # independent re-verification, written out directly
    shrink, widen = plan.safety
    by_chart = {e.chart: e for e in estimates}
    for region in overlaps.regions:
        P = min(shrink * by_chart[a].p for a in region.index)
        Q = np.zeros(int(region.mask.sum()))
        B = np.zeros_like(Q)
        C = np.zeros_like(Q)
        chs_sum = np.zeros_like(Q)
        for a in region.index:
            e = by_chart[a]
            chi = overlaps.chi[a][region.mask]
            chs = overlaps.chi_sqrt[a][region.mask]
            Q += plan.epsilons[a] * shrink * e.q * chi
            B += 2 * plan.epsilons[a] * widen * e.b * chs
            C += 2 * plan.epsilons[a] * widen * e.c * chs
            chs_sum += chi
        assert (B <= P / 2 + 1e-15).all()
        active = chs_sum > 0
        assert ((P - B[active]) * Q[active] > C[active] ** 2).all()


def test_glue_single_chart_tau_one_exact():
    dom = GridDomain(1, ((-1.0, 1.0, -1.0, 1.0),), 1 / 16)
    gmap = HolomorphicMapSpec(1, 1, ({(1,): 1.0},))
    box = Region(box=((-0.4, 0.4, -0.4, 0.4),))
    psi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1.0)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 2.0)
    tau = BumpSpec((0j,), 0.9, 1.6)
    spec2 = WellRelatedCoverSpec(gmap, dom, dom, (WellRelatedChart("U", box, box, psi, phi, tau),))
    from lcktools.gluing import EpsilonPlan

    eps = 0.25
    plan = EpsilonPlan((eps,), (eps,), ("L0",), (0.8, 1.25), 0)
    glued = glue_potentials(spec2, plan)[0]
    mask = chart_mask(spec2, 0)
    expected = psi.values + eps * phi.values
    assert np.allclose(glued.values[mask], expected[mask], atol=1e-9)


def test_glue_affine_in_epsilon(spec):
    from lcktools.gluing import EpsilonPlan

    def values_at(eps):
        plan = EpsilonPlan((eps, eps), (eps, eps), ("L0", "L1"), (0.8, 1.25), 0)
        return glue_potentials(spec, plan)[0].values

    v1, v2, v3 = values_at(1e-3), values_at(2e-3), values_at(3e-3)
    collinear = v1 - 2 * v2 + v3
    assert np.max(np.abs(collinear)) < 1e-12


def test_glue_monotone_to_psi_as_eps_vanishes(spec):
    from lcktools.gluing import EpsilonPlan, composed_psi

    psi_part = composed_psi(spec, 0)
    gaps = []
    for eps in (1e-2, 1e-3, 1e-4):
        plan = EpsilonPlan((eps, eps), (eps, eps), ("L0", "L1"), (0.8, 1.25), 0)
        glued = glue_potentials(spec, plan)[0]
        gaps.append(np.max(np.abs(glued.values - psi_part)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_overlap_difference_cancels_eps_exactly(spec):
    overlaps = build_overlap_structure(spec)
    estimates = tuple(
        levi_constants(spec, i, sample_mask=r.mask) for i, r in enumerate(overlaps.regions)
    )
    plan = epsilon_plan(estimates, overlaps)
    glued = glue_potentials(spec, plan)
    assert glued[0].eps_part is glued[1].eps_part
    diff = glued_overlap_difference(glued[0], glued[1])
    from lcktools.gluing import composed_psi

    assert np.array_equal(diff, composed_psi(spec, 0) - composed_psi(spec, 1))


def test_overlap_difference_pluriharmonic(spec):
    overlaps = build_overlap_structure(spec)
    estimates = tuple(
        levi_constants(spec, i, sample_mask=r.mask) for i, r in enumerate(overlaps.regions)
    )
    plan = epsilon_plan(estimates, overlaps)
    glued = glue_potentials(spec, plan)
    report = verify_glued_psh(spec, glued, margin=1e-6, pluriharmonic_tol=1e-6)
    assert report.ok
    assert report.worst_margin >= 1e-6
    assert report.overlap_reports  # the two charts do overlap


def test_decade_sweep_with_zero_bad_constants():
    # tau identically 1 over the whole chart (flat plateau covers the domain):
    # chi has no shoulder, b = c = 0, and any eps > 0 keeps the gluing psh
    dom = GridDomain(1, ((-1.0, 1.0, -1.0, 1.0),), 1 / 16)
    gmap = HolomorphicMapSpec(1, 1, ({(1,): 1.0},))
    whole = Region()
    psi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1.0)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1.0)
    tau = BumpSpec((0j,), 3.0, 4.0)  # flat over the entire box
    spec2 = WellRelatedCoverSpec(gmap, dom, dom, (WellRelatedChart("U", whole, whole, psi, phi, tau),))
    est = levi_constants(spec2, 0)
    assert est.b == 0.0 and est.c == 0.0
    from lcktools.gluing import EpsilonPlan

    for k in range(-3, 4):
        eps = 10.0**k
        plan = EpsilonPlan((eps,), (eps,), ("L0",), (0.8, 1.25), 0)
        glued = glue_potentials(spec2, plan)
        report = verify_glued_psh(spec2, glued, margin=1e-6)
        assert report.ok, f"eps={eps}"


def test_inflated_epsilon_fails_with_localized_witness():
    spec2 = annulus_spec(steep_tau=True)
    overlaps = build_overlap_structure(spec2)
    estimates = tuple(
        levi_constants(spec2, i, sample_mask=r.mask) for i, r in enumerate(overlaps.regions)
    )
    plan = epsilon_plan(estimates, overlaps)
    from dataclasses import replace

    inflated = replace(plan, epsilons=tuple(1e3 * min(plan.deltas) for _ in plan.epsilons))
    glued = glue_potentials(spec2, inflated)
    report = verify_glued_psh(spec2, glued, margin=1e-6)
    assert not report.ok
    failing = [(c, r) for c, r in report.chart_reports if not r.ok]
    assert failing
    chart, rep = failing[0]
    assert rep.worst_eigenvalue < 1e-6
    assert rep.worst_index is not None
    assert glued[chart].support[rep.worst_index]  # witness localized inside the support


def test_refine_epsilon_no_op_when_passing(spec):
    overlaps = build_overlap_structure(spec)
    estimates = tuple(
        levi_constants(spec, i, sample_mask=r.mask) for i, r in enumerate(overlaps.regions)
    )
    plan = epsilon_plan(estimates, overlaps)
    refined, glued, report = refine_epsilon(spec, plan)
    assert refined.epsilons == plan.epsilons
    assert report.ok


def test_pipeline_end_to_end(spec):
    result = run_pipeline(spec)
    assert result.ok
    assert result.glued_report.worst_margin > 1e-6
    names = [s.name for s in result.stages]
    assert names == ["validate", "levi_constants", "epsilon_plan", "verify_glued"]


def test_pipeline_corrupted_fails_at_validation():
    result = run_pipeline(annulus_spec(corrupt=True))
    assert not result.ok
    assert result.stages[0].name == "validate" and not result.stages[0].ok
    assert "phi_strongly_psh_positive" in result.stages[0].detail


# -- character-scaled families -------------------------------------------------


def test_family_rho_zero_members_equal():
    dom = GridDomain(1, ((-1, 1, -1, 1),), 0.25)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2)
    fam = character_scaled_family(phi, 0.0, 3)
    assert np.array_equal(fam.member_values(0), fam.member_values(2))


def test_family_m2_involution():
    dom = GridDomain(1, ((-1, 1, -1, 1),), 0.25)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1)
    fam = character_scaled_family(phi, math.log(2.0), 2)
    assert np.allclose(fam.member_values(1), 2.0 * fam.member_values(0))
    act = fam.act(1, 0)
    assert act.target_index == 1 and fam.factor_value(act) == 2.0
    twice = fam.compose(fam.act(1, act.target_index), act)
    assert twice.target_index == 0 and twice.factor_coeff == 2


def test_family_z4_log3_action():
    dom = GridDomain(1, ((-1, 1, -1, 1),), 0.25)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1)
    fam = character_scaled_family(phi, math.log(3.0), 4)
    act = fam.act(2, 1)
    assert act.target_index == 3
    assert act.factor_coeff == 2
    assert fam.factor_value(act) == pytest.approx(9.0, rel=1e-12)
    step1 = fam.act(1, 1)
    step2 = fam.act(1, step1.target_index)
    composed = fam.compose(step2, step1)
    assert (composed.target_index, composed.factor_coeff) == (act.target_index, act.factor_coeff)


def test_family_composition_law_all_pairs_exact():
    dom = GridDomain(1, ((-1, 1, -1, 1),), 0.25)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2 + 1)
    fam = character_scaled_family(phi, math.log(3.0), 4)
    for j in range(4):
        for jp in range(4):
            for k in range(4):
                first = fam.act(j, k)
                second = fam.act(jp, first.target_index)
                composed = fam.compose(second, first)
                direct_index = (k - j - jp) % 4
                assert composed.target_index == direct_index
                assert composed.factor_coeff == j + jp


def test_family_order_must_be_positive():
    dom = GridDomain(1, ((-1, 1, -1, 1),), 0.25)
    phi = grid_function_from(dom, lambda z: np.abs(z) ** 2)
    with pytest.raises(ValidationError):
        character_scaled_family(phi, 1.0, 0)

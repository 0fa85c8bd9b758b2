"""Finite-model toolkit: Cech closed 1-forms on simplicial 2-complexes,
locally conformally Kahler structures and their universal-cover
correspondence, and grid-based plurisubharmonic gluing with epsilon tuning."""

from .complexes import (
    Cover,
    EdgePath,
    SimplicialComplex,
    Subcomplex,
    build_complex,
    closed_star,
    connected_components,
    elementary_homotopy_moves,
    induced_subcomplex,
    intersect_subcomplexes,
    refine_cover,
    single_chart_cover,
    star_cover,
)
from .covers import CoveringMap, deck_action, lift_path, universal_cover
from .forms import (
    ClosedOneForm,
    ExactnessResult,
    GlobalFunction,
    add_forms,
    differential,
    endpoints_criterion_check,
    equivalent,
    homotopy_invariant_integrate,
    integrate,
    is_exact,
    make_closed_one_form,
    monodromy_character,
    negate_form,
    primitive_on_simply_connected,
    pullback_form,
    sub_forms,
)
from .conformal import (
    KahlerData,
    LCKData,
    LineBundleData,
    PotentialHandle,
    Section,
    conformal_rescale,
    descend_to_lck,
    is_gck,
    lee_form,
    lift_to_kahler,
    make_kahler_data,
    make_lck_data,
    pullback_bundle,
    pullback_lck,
    trivializing_section,
    weight_bundle,
)
from .groups import Character, PresentedGroup, bounded_triviality, coset_enumeration, edge_path_group
from .grids import (
    BumpSpec,
    GridDomain,
    GridFunction,
    HolomorphicMapSpec,
    Region,
    compose_with_map,
    grid_function_from,
)
from .hessian import complex_hessian, is_pluriharmonic, is_strongly_psh
from .gluing import (
    EpsilonPlan,
    LeviEstimate,
    PreimageSeed,
    WellRelatedChart,
    WellRelatedCoverSpec,
    build_overlap_structure,
    character_scaled_family,
    epsilon_plan,
    glue_potentials,
    levi_constants,
    refine_epsilon,
    run_pipeline,
    validate_well_related,
    verify_glued_psh,
)

__version__ = "0.1.0"

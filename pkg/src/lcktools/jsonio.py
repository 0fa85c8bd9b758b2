"""JSON encodings of every file format the command line consumes and emits.

Exact scalars travel as strings ("1/3", "2", "0.25" all parse to Fractions);
JSON numbers are floating mode.  Cover charts given as plain vertex lists are
read as induced subcomplexes; the object form with explicit vertices, edges
and triangles round-trips star covers, and the string "stars" builds one.
"""
from __future__ import annotations

import json
import os
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from .complexes import Cover, SimplicialComplex, Subcomplex, build_complex, induced_subcomplex, star_cover
from .conformal import KahlerData, LCKData, PotentialHandle, make_kahler_data, make_lck_data
from .errors import ValidationError
from .forms import ClosedOneForm, GlobalFunction, make_closed_one_form
from .grids import BumpSpec, GridDomain, GridFunction, HolomorphicMapSpec, Region
from .gluing import PreimageSeed, WellRelatedChart, WellRelatedCoverSpec
from .groups import Character, edge_path_group
from .scalars import OVERLAP_TOL, format_scalar, parse_scalar


# -- complexes ---------------------------------------------------------------


def complex_to_json(cx: SimplicialComplex) -> dict:
    return {
        "vertices": cx.n_vertices,
        "edges": [list(e) for e in cx.edges],
        "triangles": [list(t) for t in cx.triangles],
    }


def complex_from_json(obj: dict) -> SimplicialComplex:
    try:
        return build_complex(obj["vertices"], obj.get("edges", ()), obj.get("triangles", ()))
    except KeyError as err:
        raise ValidationError(f"complex JSON missing key {err}") from None


# -- covers -------------------------------------------------------------------


def cover_to_json(cover: Cover) -> dict:
    return {
        "charts": [
            {
                "vertices": list(ch.vertices),
                "edges": [list(e) for e in ch.edges],
                "triangles": [list(t) for t in ch.triangles],
            }
            for ch in cover.charts
        ]
    }


def cover_from_json(obj, cx: SimplicialComplex) -> Cover:
    if isinstance(obj, dict):
        charts_spec = obj.get("charts")
    else:
        charts_spec = obj
    if charts_spec == "stars":
        return star_cover(cx)
    if not isinstance(charts_spec, list):
        raise ValidationError("cover JSON must be {'charts': [...]} or {'charts': 'stars'}")
    charts = []
    for entry in charts_spec:
        if isinstance(entry, list):
            charts.append(induced_subcomplex(cx, entry))
        elif isinstance(entry, dict):
            charts.append(
                Subcomplex(
                    cx,
                    tuple(sorted(entry["vertices"])),
                    tuple(sorted(tuple(sorted(e)) for e in entry.get("edges", ()))),
                    tuple(sorted(tuple(sorted(t)) for t in entry.get("triangles", ()))),
                )
            )
        else:
            raise ValidationError("cover chart must be a vertex list or an object")
    return Cover(cx, tuple(charts))


# -- scalar value maps --------------------------------------------------------


def _values_to_json(values: Mapping[int, object]) -> dict:
    return {str(v): format_scalar(x) for v, x in sorted(values.items())}


def _values_from_json(obj: dict) -> dict:
    return {int(k): parse_scalar(v) for k, v in obj.items()}


# -- closed 1-forms -----------------------------------------------------------


def form_to_json(form: ClosedOneForm) -> dict:
    out = {
        "complex": complex_to_json(form.complex),
        "cover": cover_to_json(form.cover),
        "potentials": [
            {"chart": i, "values": _values_to_json(pot)} for i, pot in enumerate(form.potentials)
        ],
    }
    if form.warnings:
        out["warnings"] = list(form.warnings)
    return out


def form_from_json(obj: dict, tol: float = OVERLAP_TOL) -> ClosedOneForm:
    cx = complex_from_json(obj["complex"])
    cover = cover_from_json(obj.get("cover", "stars"), cx)
    potentials: list[dict] = [dict() for _ in cover.charts]
    for entry in obj["potentials"]:
        potentials[int(entry["chart"])] = _values_from_json(entry["values"])
    return make_closed_one_form(cover, potentials, tol)


def function_to_json(f: GlobalFunction) -> dict:
    return {"values": [format_scalar(v) for v in f.values]}


def function_from_json(obj: dict, cx: SimplicialComplex) -> GlobalFunction:
    raw = obj["values"]
    if isinstance(raw, dict):
        values = [parse_scalar(raw[str(v)]) for v in cx.vertices]
    else:
        values = [parse_scalar(v) for v in raw]
    return GlobalFunction(cx, tuple(values))


def character_to_json(chi: Character) -> dict:
    return {
        "basepoint": chi.group.basepoint,
        "generators": [list(g) for g in chi.group.generators],
        "values": [format_scalar(v) for v in chi.values],
    }


def character_from_json(obj: dict, cx: SimplicialComplex, tol: float = OVERLAP_TOL) -> Character:
    group = edge_path_group(cx, int(obj["basepoint"]))
    declared = [tuple(g) for g in obj.get("generators", [])]
    if declared and declared != list(group.generators):
        raise ValidationError("character generators do not match the edge-path presentation")
    values = tuple(parse_scalar(v) for v in obj["values"])
    return Character(group, values, tol)


# -- LCK / Kahler data ---------------------------------------------------------


def _handle_to_json(h: PotentialHandle, chart: int) -> dict:
    out = {"chart": chart, "kind": h.kind, "tag": h.tag, "log_scale": format_scalar(h.log_scale)}
    if h.grid is not None:
        out["grid"] = grid_to_json(h.grid)
    return out


def _handle_from_json(entry: dict, base_dir: Optional[str]) -> PotentialHandle:
    kind = entry.get("kind", "abstract")
    tag = entry.get("tag", f"potential{entry.get('chart', '?')}")
    log_scale = parse_scalar(entry.get("log_scale", "0"))
    grid = None
    if kind == "grid":
        if "grid" in entry:
            grid = grid_from_json(entry["grid"])
        elif "grid_ref" in entry:
            grid = load_grid_ref(entry["grid_ref"], base_dir)
        else:
            raise ValidationError("grid-backed potential needs 'grid' or 'grid_ref'")
    return PotentialHandle(tag, log_scale, grid)


def lck_to_json(lck: LCKData) -> dict:
    out = {
        "complex": complex_to_json(lck.complex),
        "cover": cover_to_json(lck.cover),
        "mode": "lcpk" if lck.lcpk else "lck",
        "conformal_factors": [
            {"chart": i, "values": _values_to_json(fac)} for i, fac in enumerate(lck.factors)
        ],
        "potentials": [_handle_to_json(h, i) for i, h in enumerate(lck.potentials)],
    }
    if lck.chart_origins is not None:
        out["chart_origins"] = list(lck.chart_origins)
    if lck.warnings:
        out["warnings"] = list(lck.warnings)
    return out


def lck_from_json(obj: dict, tol: float = OVERLAP_TOL, base_dir: Optional[str] = None) -> LCKData:
    cx = complex_from_json(obj["complex"])
    cover = cover_from_json(obj.get("cover", "stars"), cx)
    factors: list[dict] = [dict() for _ in cover.charts]
    for entry in obj["conformal_factors"]:
        factors[int(entry["chart"])] = _values_from_json(entry["values"])
    handles: list[Optional[PotentialHandle]] = [None] * len(cover.charts)
    for entry in obj["potentials"]:
        handles[int(entry["chart"])] = _handle_from_json(entry, base_dir)
    if any(h is None for h in handles):
        raise ValidationError("every chart needs a potential entry")
    origins = tuple(obj["chart_origins"]) if "chart_origins" in obj else None
    return make_lck_data(
        cover,
        tuple(handles),
        factors,
        lcpk=obj.get("mode", "lck") == "lcpk",
        tol=tol,
        chart_origins=origins,
    )


def kahler_to_json(k: KahlerData) -> dict:
    out = {
        "complex": complex_to_json(k.complex),
        "cover": cover_to_json(k.cover),
        "potentials": [_handle_to_json(h, i) for i, h in enumerate(k.potentials)],
    }
    if k.chart_origins is not None:
        out["chart_origins"] = list(k.chart_origins)
    return out


def kahler_from_json(obj: dict, tol: float = OVERLAP_TOL, base_dir: Optional[str] = None) -> KahlerData:
    cx = complex_from_json(obj["complex"])
    cover = cover_from_json(obj["cover"], cx)
    handles: list[Optional[PotentialHandle]] = [None] * len(cover.charts)
    for entry in obj["potentials"]:
        handles[int(entry["chart"])] = _handle_from_json(entry, base_dir)
    if any(h is None for h in handles):
        raise ValidationError("every chart needs a potential entry")
    origins = tuple(obj["chart_origins"]) if "chart_origins" in obj else None
    return make_kahler_data(cover, tuple(handles), tol, origins)


# -- grids, maps, regions -------------------------------------------------------


def domain_to_json(domain: GridDomain) -> dict:
    return {"dim": domain.dim, "box": [list(b) for b in domain.box], "h": domain.h}


def domain_from_json(obj: dict) -> GridDomain:
    return GridDomain(int(obj["dim"]), tuple(tuple(float(x) for x in b) for b in obj["box"]), float(obj["h"]))


def grid_to_json(f: GridFunction) -> dict:
    return {"domain": domain_to_json(f.domain), "values": [float(x) for x in f.values.ravel()]}


def grid_from_json(obj: dict) -> GridFunction:
    domain = domain_from_json(obj["domain"])
    values = np.asarray(obj["values"], dtype=np.float64).reshape(domain.shape)
    return GridFunction(domain, values)


def load_grid_ref(ref: str, base_dir: Optional[str]) -> GridFunction:
    """'path' for a single-grid file, 'path#key' for a member of {'grids': {...}}."""
    path, _, key = ref.partition("#")
    if base_dir is not None and not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    with open(path) as fh:
        obj = json.load(fh)
    if key:
        try:
            obj = obj["grids"][key]
        except KeyError:
            raise ValidationError(f"grid ref {ref}: no grid named {key!r}") from None
    return grid_from_json(obj)


def map_to_json(m: HolomorphicMapSpec) -> dict:
    polys = []
    for poly in m.polys:
        coeffs = {",".join(str(e) for e in mono): [c.real, c.imag] for mono, c in poly}
        polys.append({"coeffs": coeffs})
    return {"dim_in": m.dim_in, "dim_out": m.dim_out, "polys": polys, "discrete_fibers": m.discrete_fibers}


def map_from_json(obj: dict) -> HolomorphicMapSpec:
    polys = []
    for poly in obj["polys"]:
        entries = {}
        for key, val in poly.get("coeffs", {}).items():
            mono = tuple(int(x) for x in str(key).split(","))
            if isinstance(val, (int, float)):
                coeff = complex(val)
            else:
                coeff = complex(val[0], val[1])
            entries[mono] = coeff
        polys.append(entries)
    return HolomorphicMapSpec(
        int(obj["dim_in"]), int(obj["dim_out"]), tuple(polys), bool(obj.get("discrete_fibers", True))
    )


def region_to_json(region: Optional[Region]) -> Optional[dict]:
    if region is None:
        return None
    out: dict = {}
    if region.box is not None:
        out["box"] = [list(b) for b in region.box]
    if region.annuli:
        out["annuli"] = [list(a) for a in region.annuli]
    return out


def region_from_json(obj) -> Optional[Region]:
    if obj is None:
        return None
    box = tuple(tuple(float(x) for x in b) for b in obj["box"]) if "box" in obj else None
    annuli = tuple((int(a[0]), float(a[1]), float(a[2])) for a in obj.get("annuli", ()))
    return Region(box, annuli)


# -- well-related cover specs ----------------------------------------------------


def wellrelated_to_json(spec: WellRelatedCoverSpec) -> dict:
    charts = []
    for chart in spec.charts:
        if isinstance(chart.source_region, PreimageSeed):
            u = {"seed": [[z.real, z.imag] for z in chart.source_region.point]}
        else:
            u = region_to_json(chart.source_region)
        if isinstance(chart.tau, BumpSpec):
            tau = {
                "center": [[z.real, z.imag] for z in chart.tau.center],
                "r_one": chart.tau.r_one,
                "r_zero": chart.tau.r_zero,
                "kind": chart.tau.kind,
            }
        else:
            tau = grid_to_json(chart.tau)
        entry = {
            "name": chart.name,
            "U": u,
            "V": region_to_json(chart.target_region),
            "psi": grid_to_json(chart.psi),
            "phi": grid_to_json(chart.phi),
            "tau": tau,
        }
        if chart.conformal_factor is not None:
            entry["f"] = grid_to_json(chart.conformal_factor)
        if chart.core is not None:
            entry["K"] = region_to_json(chart.core)
        charts.append(entry)
    return {
        "map": map_to_json(spec.map),
        "source_domain": domain_to_json(spec.source),
        "target_domain": domain_to_json(spec.target),
        "charts": charts,
    }


def _grid_or_ref(obj, base_dir: Optional[str]) -> GridFunction:
    if isinstance(obj, dict) and "grid_ref" in obj:
        return load_grid_ref(obj["grid_ref"], base_dir)
    return grid_from_json(obj)


def wellrelated_from_json(obj: dict, base_dir: Optional[str] = None) -> WellRelatedCoverSpec:
    map_spec = map_from_json(obj["map"])
    source = domain_from_json(obj["source_domain"])
    target = domain_from_json(obj["target_domain"])
    charts = []
    for i, entry in enumerate(obj["charts"]):
        u_obj = entry["U"]
        if isinstance(u_obj, dict) and "seed" in u_obj:
            seed = tuple(complex(p[0], p[1]) for p in u_obj["seed"])
            source_region: object = PreimageSeed(seed)
        else:
            source_region = region_from_json(u_obj)
            if source_region is None:
                raise ValidationError("chart U region cannot be null")
        tau_obj = entry["tau"]
        if isinstance(tau_obj, dict) and "center" in tau_obj:
            tau: object = BumpSpec(
                tuple(complex(p[0], p[1]) for p in tau_obj["center"]),
                float(tau_obj["r_one"]),
                float(tau_obj["r_zero"]),
                tau_obj.get("kind", "quintic"),
            )
        else:
            tau = _grid_or_ref(tau_obj, base_dir)
        charts.append(
            WellRelatedChart(
                entry.get("name", f"U{i}"),
                source_region,
                region_from_json(entry["V"]),
                _grid_or_ref(entry["psi"], base_dir),
                _grid_or_ref(entry["phi"], base_dir),
                tau,
                _grid_or_ref(entry["f"], base_dir) if "f" in entry else None,
                region_from_json(entry.get("K")),
            )
        )
    return WellRelatedCoverSpec(map_spec, source, target, tuple(charts))


# -- generic helpers ---------------------------------------------------------


def dump_json(obj: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)

"""Batch command line: `cech`, `lck` and `psh` entry points.

Every command reads JSON files, prints a human-readable report, and with
--json prints a deterministic machine report instead (no wall-clock data).
Exit codes: 0 all checks pass, 1 a mathematical check fails (non-exact form,
holonomy obstruction, non-psh input), 2 malformed input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction

from .complexes import EdgePath
from .covers import universal_cover
from .errors import (
    DegenerateCoverError,
    GridBoundsError,
    ToolkitError,
    ValidationError,
)
from .scalars import OVERLAP_TOL, format_scalar
from . import jsonio


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


class Reporter:
    """Collects named checks and a result payload; two output channels."""

    def __init__(self, command: str, json_mode: bool):
        self.command = command
        self.json_mode = json_mode
        self.inputs: dict[str, str] = {}
        self.checks: list[dict] = []
        self.result: dict = {}
        self.started = time.perf_counter()

    def register_input(self, label: str, path: str) -> None:
        self.inputs[label] = _digest(path)

    def check(self, name: str, status: str, detail: str = "", witness=None) -> None:
        entry: dict = {"name": name, "status": status}
        if detail:
            entry["detail"] = detail
        if witness is not None:
            entry["witness"] = witness
        self.checks.append(entry)
        if not self.json_mode:
            mark = {"pass": "PASS", "fail": "FAIL", "partial": "PART"}[status]
            line = f"[{mark}] {name}"
            if detail:
                line += f" -- {detail}"
            print(line)

    def say(self, text: str) -> None:
        if not self.json_mode:
            print(text)

    def emit(self) -> int:
        failed = any(c["status"] == "fail" for c in self.checks)
        code = 1 if failed else 0
        if self.json_mode:
            machine = {
                "command": self.command,
                "inputs": self.inputs,
                "checks": self.checks,
                "result": self.result,
                "exit_code": code,
            }
            print(json.dumps(machine, sort_keys=True, separators=(",", ":")))
        else:
            elapsed = time.perf_counter() - self.started
            print(f"done in {elapsed:.2f}s, exit {code}")
        return code


def _fail_input(message: str, json_mode: bool, command: str) -> int:
    if json_mode:
        print(json.dumps({"command": command, "error": message, "exit_code": 2}, sort_keys=True))
    else:
        print(f"input error: {message}", file=sys.stderr)
    return 2


def _scalar_str(x) -> object:
    return format_scalar(x)


def _parse_path_arg(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x != "")
    except ValueError:
        raise ValidationError(f"cannot parse path {text!r}; expected comma-separated vertices")


def _run(command: str, args, body) -> int:
    reporter = Reporter(command, args.json)
    try:
        return body(reporter)
    except (ValidationError, GridBoundsError, DegenerateCoverError, OSError, json.JSONDecodeError) as err:
        return _fail_input(str(err), args.json, command)
    except ToolkitError as err:
        reporter.check("run", "fail", str(err))
        reporter.emit()
        return 1


# ---------------------------------------------------------------------------
# cech
# ---------------------------------------------------------------------------


def cech_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cech", description="Closed 1-form tools")
    common = _common_parent()
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("integrate", help="integrate a form along an edge path", parents=[common])
    p.add_argument("--form", required=True)
    p.add_argument("--path", required=True, help="comma-separated vertices, e.g. 0,1,2,0")

    p = sub.add_parser("monodromy", help="loop integrals over edge-path generators", parents=[common])
    p.add_argument("--form", required=True)
    p.add_argument("--basepoint", type=int, default=0)

    p = sub.add_parser("exact", help="test exactness; exit 1 with a witness loop if not", parents=[common])
    p.add_argument("--form", required=True)
    p.add_argument("--basepoint", type=int, default=0)
    p.add_argument("--out", help="write the primitive as a function JSON")

    p = sub.add_parser("primitive", help="primitive on a simply connected complex", parents=[common])
    p.add_argument("--form", required=True)
    p.add_argument("--basepoint", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("pullback", help="pull the form back to the universal cover", parents=[common])
    p.add_argument("--form", required=True)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--basepoint", type=int, default=0)
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    return _run(f"cech {args.cmd}", args, lambda rep: _cech_body(args, rep))


def _cech_body(args, rep: Reporter) -> int:
    from . import forms

    rep.register_input("form", args.form)
    form = jsonio.form_from_json(jsonio.load_json(args.form), tol=args.tol)
    cx = form.complex

    if args.cmd == "integrate":
        value = forms.integrate(form, EdgePath(cx, _parse_path_arg(args.path)))
        rep.result["integral"] = _scalar_str(value)
        rep.check("integrate", "pass", f"integral = {value}")
        return rep.emit()

    if args.cmd == "monodromy":
        chi = forms.monodromy_character(form, cx, args.basepoint)
        rep.result["generators"] = [list(g) for g in chi.group.generators]
        rep.result["values"] = [_scalar_str(v) for v in chi.values]
        rep.check("monodromy", "pass", f"{chi.group.rank} generator(s)")
        for g, v in zip(chi.group.generators, chi.values):
            rep.say(f"  generator {g}: {v}")
        return rep.emit()

    if args.cmd == "exact":
        res = forms.is_exact(form, cx, args.basepoint)
        if res:
            rep.result["primitive"] = jsonio.function_to_json(res.primitive)
            if args.out:
                jsonio.dump_json(rep.result["primitive"], args.out)
            rep.check("exact", "pass", "form is exact")
        else:
            rep.result["witness_edge"] = list(res.witness_edge)
            rep.result["witness_value"] = _scalar_str(res.witness_value)
            rep.check(
                "exact", "fail",
                f"generator loop {res.witness_edge} integrates to {res.witness_value}",
                witness={"edge": list(res.witness_edge), "value": _scalar_str(res.witness_value)},
            )
        return rep.emit()

    if args.cmd == "primitive":
        f = forms.primitive_on_simply_connected(form, cx, args.basepoint)
        payload = jsonio.function_to_json(f)
        rep.result["primitive"] = payload
        if args.out:
            jsonio.dump_json(payload, args.out)
        rep.check("primitive", "pass", f"primitive with value 0 at vertex {args.basepoint}")
        return rep.emit()

    if args.cmd == "pullback":
        cover = universal_cover(cx, radius=args.radius, basepoint=args.basepoint)
        pulled = forms.pullback_form(cover, form)
        jsonio.dump_json(jsonio.form_to_json(pulled), args.out)
        rep.result["total_vertices"] = cover.total.n_vertices
        rep.result["truncated"] = cover.truncated
        rep.result["warnings"] = list(pulled.warnings)
        status = "partial" if pulled.warnings else "pass"
        rep.check("pullback", status, f"{cover.total.n_vertices} vertices upstairs, {len(pulled.warnings)} boundary warnings")
        return rep.emit()

    raise ValidationError(f"unknown cech command {args.cmd}")


# ---------------------------------------------------------------------------
# lck
# ---------------------------------------------------------------------------


def lck_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lck", description="LCK structure tools")
    common = _common_parent()
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("lee", help="extract the Lee form", parents=[common])
    p.add_argument("--lck", required=True)
    p.add_argument("--out")

    p = sub.add_parser("gck", help="globally conformally Kahler test", parents=[common])
    p.add_argument("--lck", required=True)
    p.add_argument("--basepoint", type=int, default=0)

    p = sub.add_parser("character", help="monodromy character of the Lee form", parents=[common])
    p.add_argument("--lck", required=True)
    p.add_argument("--basepoint", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("lift", help="lift to Kahler data on the universal cover", parents=[common])
    p.add_argument("--lck", required=True)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--out-kahler")
    p.add_argument("--out-character")

    p = sub.add_parser("descend", help="descend equivariant Kahler data", parents=[common])
    p.add_argument("--base", required=True, help="base complex JSON")
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--kahler", required=True)
    p.add_argument("--character", required=True)
    p.add_argument("--out")

    p = sub.add_parser("roundtrip", help="lift then descend, with equivalence checks", parents=[common])
    p.add_argument("--lck", required=True)
    p.add_argument("--radius", type=int, default=3)

    args = parser.parse_args(argv)
    return _run(f"lck {args.cmd}", args, lambda rep: _lck_body(args, rep))


def _lck_body(args, rep: Reporter) -> int:
    from . import conformal, forms

    if args.cmd == "descend":
        rep.register_input("base", args.base)
        rep.register_input("kahler", args.kahler)
        rep.register_input("character", args.character)
        base = jsonio.complex_from_json(jsonio.load_json(args.base))
        cover = universal_cover(base, radius=args.radius)
        kahler = jsonio.kahler_from_json(
            jsonio.load_json(args.kahler), tol=args.tol, base_dir=os.path.dirname(args.kahler)
        )
        chi = jsonio.character_from_json(jsonio.load_json(args.character), base, tol=args.tol)
        res = conformal.descend_to_lck(kahler, chi, cover)
        if args.out:
            jsonio.dump_json(jsonio.lck_to_json(res.lck), args.out)
        down_chi = forms.monodromy_character(conformal.lee_form(res.lck), base, chi.group.basepoint)
        ok = down_chi.values == chi.values
        rep.result["character"] = [_scalar_str(v) for v in down_chi.values]
        rep.check(
            "descended_character_matches",
            "pass" if ok else "fail",
            f"Lee character {list(down_chi.values)}",
        )
        if res.partial:
            rep.check("truncation", "partial", "cover is truncated; rim charts skipped")
        return rep.emit()

    rep.register_input("lck", args.lck)
    lck = jsonio.lck_from_json(
        jsonio.load_json(args.lck), tol=args.tol, base_dir=os.path.dirname(args.lck)
    )
    cx = lck.complex

    if args.cmd == "lee":
        theta = conformal.lee_form(lck)
        if args.out:
            jsonio.dump_json(jsonio.form_to_json(theta), args.out)
        rep.result["form"] = jsonio.form_to_json(theta)
        rep.check("lee", "pass", f"{len(theta.cover.charts)} charts")
        return rep.emit()

    if args.cmd == "gck":
        res = conformal.is_gck(lck, args.basepoint)
        if res:
            rep.result["conformal_factor"] = jsonio.function_to_json(res.primitive)
            rep.check("gck", "pass", "Lee form exact: globally conformally Kahler")
        else:
            rep.check(
                "gck", "fail",
                f"Lee form not exact: generator {res.witness_edge} integrates to {res.witness_value}",
                witness={"edge": list(res.witness_edge), "value": _scalar_str(res.witness_value)},
            )
        return rep.emit()

    if args.cmd == "character":
        chi = forms.monodromy_character(conformal.lee_form(lck), cx, args.basepoint)
        payload = jsonio.character_to_json(chi)
        rep.result["character"] = payload
        if args.out:
            jsonio.dump_json(payload, args.out)
        rep.check("character", "pass", f"values {[str(v) for v in chi.values]}")
        return rep.emit()

    if args.cmd == "lift":
        cover = universal_cover(cx, radius=args.radius)
        lift = conformal.lift_to_kahler(lck, cover)
        if args.out_kahler:
            jsonio.dump_json(jsonio.kahler_to_json(lift.kahler), args.out_kahler)
        if args.out_character:
            jsonio.dump_json(jsonio.character_to_json(lift.character), args.out_character)
        rep.result["character"] = [_scalar_str(v) for v in lift.character.values]
        rep.result["partial"] = lift.partial
        rep.check(
            "lift", "partial" if lift.partial else "pass",
            f"homothety character {[str(v) for v in lift.character.values]}",
        )
        return rep.emit()

    if args.cmd == "roundtrip":
        return _roundtrip_body(args, rep, lck)

    raise ValidationError(f"unknown lck command {args.cmd}")


def _roundtrip_body(args, rep: Reporter, lck) -> int:
    from . import conformal, forms
    from .groups import bounded_triviality, edge_path_group

    cx = lck.complex
    theta = conformal.lee_form(lck)
    chi = forms.monodromy_character(theta, cx, 0)
    cover = universal_cover(cx, radius=args.radius)
    lift = conformal.lift_to_kahler(lck, cover)
    match = lift.character.values == chi.values
    rep.result["character"] = [_scalar_str(v) for v in lift.character.values]
    rep.check(
        "lift_character_equals_monodromy",
        "pass" if match else "fail",
        f"character {[str(v) for v in lift.character.values]}",
    )

    res = conformal.descend_to_lck(lift.kahler, lift.character, cover)
    down_theta = conformal.lee_form(res.lck)
    down_chi = forms.monodromy_character(down_theta, cx, 0)
    rep.check(
        "roundtrip_character",
        "pass" if down_chi.values == chi.values else "fail",
        "descended Lee character equals the original exactly",
    )
    difference = forms.sub_forms(down_theta, theta)
    diff_exact = forms.is_exact(difference, cx, 0)
    rep.check(
        "roundtrip_up_to_rescale",
        "pass" if bool(diff_exact) else "fail",
        "descended and original Lee forms differ by an exact form",
    )
    if not cover.truncated and chi.is_trivial():
        rep.check("finite_cover_gck", "pass", "finite fundamental group forces a trivial character: GCK")
    if cover.truncated:
        rep.check("truncation", "partial", f"cover truncated at radius {args.radius}")
    return rep.emit()


# ---------------------------------------------------------------------------
# psh
# ---------------------------------------------------------------------------


def psh_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="psh", description="Plurisubharmonicity and gluing tools")
    common = _common_parent()
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("hessian", help="complex Hessian at a grid point", parents=[common])
    p.add_argument("--grid", required=True)
    p.add_argument("--point", required=True, help="grid multi-index, e.g. 5,5")

    p = sub.add_parser("check", help="strong plurisubharmonicity check", parents=[common])
    p.add_argument("--grid", required=True)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--region")
    p.add_argument("--pluriharmonic", action="store_true", help="check pluriharmonicity instead")

    p = sub.add_parser("wellrelated", help="validate a well-related cover spec", parents=[common])
    p.add_argument("--spec", required=True)

    p = sub.add_parser("plan", help="compute the epsilon plan", parents=[common])
    p.add_argument("--spec", required=True)
    p.add_argument("--out")

    p = sub.add_parser("glue", help="glue potentials under a plan", parents=[common])
    p.add_argument("--spec", required=True)
    p.add_argument("--plan")
    p.add_argument("--out", help="write glued values per chart")

    p = sub.add_parser("verify", help="verify glued potentials are strongly psh", parents=[common])
    p.add_argument("--spec", required=True)
    p.add_argument("--plan")
    p.add_argument("--margin", type=float, default=1e-6)

    p = sub.add_parser("pipeline", help="validate, estimate, plan, glue, verify", parents=[common])
    p.add_argument("--spec", required=True)
    p.add_argument("--margin", type=float, default=1e-6)

    args = parser.parse_args(argv)
    return _run(f"psh {args.cmd}", args, lambda rep: _psh_body(args, rep))


def _plan_to_json(plan) -> dict:
    return {
        "epsilons": list(plan.epsilons),
        "deltas": list(plan.deltas),
        "region_labels": list(plan.region_labels),
        "safety": list(plan.safety),
        "halvings": plan.halvings,
    }


def _plan_from_json(obj) -> "object":
    from .gluing import EpsilonPlan

    return EpsilonPlan(
        tuple(obj["epsilons"]),
        tuple(obj["deltas"]),
        tuple(obj["region_labels"]),
        tuple(obj["safety"]),
        int(obj.get("halvings", 0)),
    )


def _psh_body(args, rep: Reporter) -> int:
    from . import gluing, hessian

    if args.cmd == "hessian":
        rep.register_input("grid", args.grid)
        grid = jsonio.grid_from_json(jsonio.load_json(args.grid))
        point = tuple(int(x) for x in args.point.split(","))
        H = hessian.complex_hessian(grid, point)
        rep.result["point"] = list(point)
        rep.result["hessian"] = [[{"re": z.real, "im": z.imag} for z in row] for row in H.tolist()]
        rep.check("hessian", "pass", f"computed at index {point}")
        return rep.emit()

    if args.cmd == "check":
        rep.register_input("grid", args.grid)
        grid = jsonio.grid_from_json(jsonio.load_json(args.grid))
        region = jsonio.region_from_json(jsonio.load_json(args.region)) if args.region else None
        if args.pluriharmonic:
            report = hessian.is_pluriharmonic(grid, region, tol=args.margin or 1e-6)
            name = "pluriharmonic"
        else:
            report = hessian.is_strongly_psh(grid, region, margin=args.margin)
            name = "strongly_psh"
        rep.result["worst_point"] = [[z.real, z.imag] for z in report.worst_point]
        rep.result["worst_value"] = report.worst_eigenvalue
        rep.result["samples"] = report.n_samples
        rep.check(
            name,
            "pass" if report.ok else "fail",
            f"worst {report.worst_eigenvalue:.6g} at {report.worst_point} over {report.n_samples} samples",
            witness=None if report.ok else {"point": [[z.real, z.imag] for z in report.worst_point]},
        )
        return rep.emit()

    rep.register_input("spec", args.spec)
    spec = jsonio.wellrelated_from_json(jsonio.load_json(args.spec), base_dir=os.path.dirname(args.spec))

    if args.cmd == "wellrelated":
        report = gluing.validate_well_related(spec)
        for i, per_chart in enumerate(report.charts):
            for c in per_chart:
                rep.check(
                    f"chart{i}.{c.name}",
                    "pass" if c.ok else "fail",
                    c.detail,
                    witness=None if c.ok else _witness_point(c.witness),
                )
        return rep.emit()

    if args.cmd == "plan":
        overlaps = gluing.build_overlap_structure(spec)
        estimates = tuple(
            gluing.levi_constants(spec, i, sample_mask=r.mask) for i, r in enumerate(overlaps.regions)
        )
        plan = gluing.epsilon_plan(estimates, overlaps)
        payload = _plan_to_json(plan)
        rep.result["plan"] = payload
        rep.result["estimates"] = [
            {"chart": e.chart, "p": e.p, "q": e.q, "b": e.b, "c": e.c} for e in estimates
        ]
        if args.out:
            jsonio.dump_json(payload, args.out)
        rep.check("plan", "pass", "eps = " + ", ".join(f"{e:.6g}" for e in plan.epsilons))
        return rep.emit()

    if args.cmd in ("glue", "verify"):
        overlaps = gluing.build_overlap_structure(spec)
        if args.plan:
            rep.register_input("plan", args.plan)
            plan = _plan_from_json(jsonio.load_json(args.plan))
        else:
            estimates = tuple(
                gluing.levi_constants(spec, i, sample_mask=r.mask) for i, r in enumerate(overlaps.regions)
            )
            plan = gluing.epsilon_plan(estimates, overlaps)
        glued = gluing.glue_potentials(spec, plan)
        if args.cmd == "glue":
            if args.out:
                payload = {
                    "epsilons": list(plan.epsilons),
                    "charts": [
                        {"chart": g.chart, "values": [float(x) for x in g.values.ravel()]}
                        for g in glued
                    ],
                }
                jsonio.dump_json(payload, args.out)
            rep.check("glue", "pass", f"{len(glued)} glued potentials")
            return rep.emit()
        report = gluing.verify_glued_psh(spec, glued, margin=args.margin)
        for chart, r in report.chart_reports:
            rep.check(
                f"glued_psh.chart{chart}",
                "pass" if r.ok else "fail",
                f"min eigenvalue {r.worst_eigenvalue:.6g} at {r.worst_point}",
                witness=None if r.ok else _witness_point(r.worst_point),
            )
        for i, j, r in report.overlap_reports:
            rep.check(
                f"overlap_pluriharmonic.{i}.{j}",
                "pass" if r.ok else "fail",
                f"worst entry {r.worst_eigenvalue:.3g}",
            )
        return rep.emit()

    if args.cmd == "pipeline":
        result = gluing.run_pipeline(spec, margin=args.margin)
        for stage in result.stages:
            rep.check(f"stage.{stage.name}", "pass" if stage.ok else "fail", stage.detail)
        if result.plan is not None:
            rep.result["epsilons"] = list(result.plan.epsilons)
        if result.glued_report is not None:
            rep.result["worst_margin"] = result.glued_report.worst_margin
        return rep.emit()

    raise ValidationError(f"unknown psh command {args.cmd}")


def _witness_point(point) -> dict | None:
    if point is None:
        return None
    return {"point": [[z.real, z.imag] for z in point]}


def _common_parent() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine JSON on stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized certificate sampling")
    common.add_argument("--tol", type=float, default=OVERLAP_TOL, help="floating overlap tolerance")
    return common


if __name__ == "__main__":  # pragma: no cover
    sys.exit(cech_main())

"""Batch front door: run computations and checks from JSON experiment specs.

Subcommands: rate, decay, entropy, verify, sanov.  Every run writes a
manifest (spec hash, seed, versions) plus the command's artifacts under the
output directory; writes are atomic (temp file + rename) and byte-identical
across runs with the same spec and seed.

Exit codes: 0 success, 1 failed checks, 2 spec validation failure,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import jsonschema
import numpy as np
import scipy

from . import __version__, convex, verify
from .entropy import MonteCarloSpec, decay_analysis, entropy_profile
from .errors import BudgetExceeded, NeedMonteCarlo
from .extmath import to_json_value
from .grids import GridSpec, _atomic_write
from .legendre import rate_function
from .measures import spec_from_json

_NUMBER_ARRAY = {"type": "array", "items": {"type": "number"}, "minItems": 1}

_DISTRIBUTION_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "type": {"const": "atomic"},
                "atoms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "properties": {
                            "point": _NUMBER_ARRAY,
                            "weight": {"type": "number", "exclusiveMinimum": 0},
                        },
                        "required": ["point", "weight"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["type", "atoms"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "gaussian"},
                "mean": _NUMBER_ARRAY,
                "var": _NUMBER_ARRAY,
            },
            "required": ["type", "mean", "var"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "alphabet"},
                "weights": _NUMBER_ARRAY,
            },
            "required": ["type", "weights"],
            "additionalProperties": False,
        },
    ]
}

_SET_REF = {"$ref": "#/$defs/convex_set"}

_SET_DEFS = {
    "convex_set": {
        "oneOf": [
            {
                "type": "object",
                "properties": {
                    "type": {"const": "halfspace"},
                    "normal": _NUMBER_ARRAY,
                    "offset": {"type": "number"},
                    "open": {"type": "boolean"},
                },
                "required": ["type", "normal", "offset"],
                "additionalProperties": False,
            },
            {
                "type": "object",
                "properties": {
                    "type": {"const": "ball"},
                    "center": _NUMBER_ARRAY,
                    "radius": {"type": "number", "exclusiveMinimum": 0},
                    "norm": {"enum": ["l1", "l2", "linf"]},
                    "open": {"type": "boolean"},
                },
                "required": ["type", "center", "radius"],
                "additionalProperties": False,
            },
            {
                "type": "object",
                "properties": {
                    "type": {"const": "polytope"},
                    "halfspaces": {"type": "array", "items": _SET_REF},
                    "dim": {"type": "integer", "minimum": 1},
                },
                "required": ["type", "halfspaces"],
                "additionalProperties": False,
            },
            {
                "type": "object",
                "properties": {
                    "type": {"const": "intersection"},
                    "members": {"type": "array", "minItems": 1, "items": _SET_REF},
                },
                "required": ["type", "members"],
                "additionalProperties": False,
            },
            {
                "type": "object",
                "properties": {
                    "type": {"const": "translate"},
                    "inner": _SET_REF,
                    "shift": _NUMBER_ARRAY,
                },
                "required": ["type", "inner", "shift"],
                "additionalProperties": False,
            },
            {
                "type": "object",
                "properties": {
                    "type": {"const": "dilate"},
                    "inner": _SET_REF,
                    "factor": {"type": "number"},
                },
                "required": ["type", "inner", "factor"],
                "additionalProperties": False,
            },
        ]
    }
}

EXPERIMENT_SCHEMA = {
    "$defs": _SET_DEFS,
    "type": "object",
    "properties": {
        "distribution": _DISTRIBUTION_SCHEMA,
        "seed": {"type": "integer", "minimum": 0},
        "rate": {
            "type": "object",
            "properties": {"primal": {"type": "string"}, "dual": {"type": "string"}},
            "additionalProperties": False,
        },
        "decay": {
            "type": "object",
            "properties": {"set": _SET_REF, "n_max": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "entropy": {
            "type": "object",
            "properties": {
                "points": {"type": "array", "minItems": 1, "items": _NUMBER_ARRAY},
                "radii": _NUMBER_ARRAY,
                "n_max": {"type": "integer", "minimum": 1},
                "norm": {"enum": ["l1", "l2", "linf"]},
                "monte_carlo": {
                    "type": "object",
                    "properties": {
                        "count": {"type": "integer", "minimum": 1},
                        "seed": {"type": "integer", "minimum": 0},
                        "tilt": _NUMBER_ARRAY,
                    },
                    "required": ["count"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "verify": {
            "type": "object",
            "properties": {"n_max": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "sanov": {
            "type": "object",
            "properties": {
                "denominator": {"type": "integer", "minimum": 2},
                "n_max": {"type": "integer", "minimum": 1},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["distribution"],
    "additionalProperties": False,
}

_SET_FILE_SCHEMA = {"$defs": _SET_DEFS, "$ref": "#/$defs/convex_set"}


class SpecError(Exception):
    """The experiment spec failed validation."""


def _load_spec(path: str) -> tuple[dict, bytes]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        obj = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    try:
        jsonschema.validate(obj, EXPERIMENT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SpecError(f"spec {path} is invalid: {exc.message}") from exc
    return obj, raw


def _load_set_file(path: str):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read set file {path}: {exc}") from exc
    try:
        jsonschema.validate(obj, _SET_FILE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SpecError(f"set file {path} is invalid: {exc.message}") from exc
    return convex.set_from_json(obj)


def _write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: str, header: str, rows: list[str]) -> None:
    _atomic_write(path, "\n".join([header] + rows) + "\n")


def _manifest(out_dir: str, raw_spec: bytes, seed: int) -> None:
    _write_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "spec_sha256": hashlib.sha256(raw_spec).hexdigest(),
            "seed": seed,
            "versions": {
                "ldlab": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        },
    )


def _prepare(args) -> tuple[dict, object, int]:
    spec_obj, raw = _load_spec(args.spec)
    dist = spec_from_json(spec_obj["distribution"])
    seed = int(spec_obj.get("seed", 0))
    os.makedirs(args.out, exist_ok=True)
    _manifest(args.out, raw, seed)
    return spec_obj, dist, seed


def _cmd_rate(args) -> int:
    spec_obj, dist, _ = _prepare(args)
    block = spec_obj.get("rate", {})
    primal = args.primal or block.get("primal")
    dual = args.dual or block.get("dual", "[-40,40]x2001")
    if primal is None:
        raise SpecError("rate needs a primal grid (flag --primal or spec block)")
    s = rate_function(dist, GridSpec.parse(primal), GridSpec.parse(dual))
    s.save(os.path.join(args.out, "rate"))
    return 0


def _cmd_decay(args) -> int:
    spec_obj, dist, _ = _prepare(args)
    block = spec_obj.get("decay", {})
    if args.set:
        c = _load_set_file(args.set)
    elif "set" in block:
        c = convex.set_from_json(block["set"])
    else:
        raise SpecError("decay needs a convex set (flag --set or spec block)")
    n_max = args.n_max or block.get("n_max", 200)
    report = decay_analysis(dist, c, n_max)
    _write_csv(os.path.join(args.out, "decay.csv"), "n,value", report.csv_rows())
    _write_json(os.path.join(args.out, "decay.json"), report.summary_json())
    return 0


def _cmd_entropy(args) -> int:
    spec_obj, dist, seed = _prepare(args)
    block = spec_obj.get("entropy", {})
    if args.x:
        points = [[float(v) for v in x.split(",")] for x in args.x]
    elif "points" in block:
        points = block["points"]
    else:
        raise SpecError("entropy needs points (flag --x or spec block)")
    radii = (
        [float(v) for v in args.radii.split(",")]
        if args.radii
        else block.get("radii", [0.1, 0.01])
    )
    n_max = args.n_max or block.get("n_max", 1000)
    norm = args.norm or block.get("norm", "l2")
    mc = None
    if "monte_carlo" in block:
        mc_block = block["monte_carlo"]
        mc = MonteCarloSpec(
            count=mc_block["count"],
            seed=mc_block.get("seed", seed),
            tilt=np.array(mc_block["tilt"]) if "tilt" in mc_block else None,
        )
    estimates = entropy_profile(dist, np.array(points, dtype=float), radii, n_max, norm=norm, mc=mc)
    d = len(points[0])
    header = ",".join([f"x{i}" for i in range(d)] + ["radius", "sup_value"])
    rows = []
    for est in estimates:
        for r, v in est.table:
            coords = ",".join(repr(float(c)) for c in est.point)
            rows.append(f"{coords},{r!r},{to_json_value(v)}")
    _write_csv(os.path.join(args.out, "entropy.csv"), header, rows)
    _write_json(
        os.path.join(args.out, "entropy.json"),
        [
            {"point": [float(c) for c in est.point], "estimate": to_json_value(est.estimate)}
            for est in estimates
        ],
    )
    return 0


def _cmd_verify(args) -> int:
    spec_obj, dist, _ = _prepare(args)
    block = spec_obj.get("verify", {})
    n_max = args.n_max or block.get("n_max", 1000)
    reports = verify.default_suite(dist, n_max=n_max)
    _write_json(os.path.join(args.out, "report.json"), verify.reports_to_json(reports))
    failed = [r.check_name for r in reports if not r.passed]
    for r in sorted(reports, key=lambda r: r.check_name):
        status = "pass" if r.passed else "FAIL"
        print(f"{status}  {r.check_name}  margin={r.worst_margin:.6g} tol={r.tolerance:g}")
    return 1 if failed else 0


def _cmd_sanov(args) -> int:
    spec_obj, dist, _ = _prepare(args)
    block = spec_obj.get("sanov", {})
    weights = getattr(dist, "weights", None)
    if weights is None:
        raise SpecError("sanov needs an alphabet distribution")
    report = verify.check_sanov(
        weights,
        denominator=args.denominator or block.get("denominator", 10),
        n_max=args.n_max or block.get("n_max", 600),
        radius=args.radius or block.get("radius", 0.02),
        tol=block.get("tol", 0.05),
    )
    header = ",".join(
        [f"nu{i}" for i in range(len(weights))]
        + ["entropy_estimate", "neg_relative_entropy", "abs_diff"]
    )
    rows = []
    for row in report.details:
        coords = ",".join(repr(float(v)) for v in row["nu"])
        rows.append(
            f"{coords},{to_json_value(row['entropy_estimate'])},"
            f"{to_json_value(row['neg_relative_entropy'])},{to_json_value(row['margin'])}"
        )
    _write_csv(os.path.join(args.out, "sanov.csv"), header, rows)
    _write_json(os.path.join(args.out, "sanov.json"), report.to_json())
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldlab",
        description="Large-deviations laboratory: rate functions, decay tables, "
        "entropy estimates, and theorem checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="experiment spec JSON file")
        p.add_argument("--out", required=True, help="output directory")

    p_rate = sub.add_parser("rate", help="tabulate the rate function")
    common(p_rate)
    p_rate.add_argument("--primal", help='primal grid, e.g. "[-3,3]x601"')
    p_rate.add_argument("--dual", help='dual grid, default "[-40,40]x2001"')
    p_rate.set_defaults(func=_cmd_rate)

    p_decay = sub.add_parser("decay", help="per-n decay of a convex set")
    common(p_decay)
    p_decay.add_argument("--set", help="convex set JSON file")
    p_decay.add_argument("--n-max", type=int, dest="n_max")
    p_decay.set_defaults(func=_cmd_decay)

    p_entropy = sub.add_parser("entropy", help="entropy estimates at points")
    common(p_entropy)
    p_entropy.add_argument("--x", action="append", help="point, comma-separated coordinates")
    p_entropy.add_argument("--radii", help="decreasing radii, comma-separated")
    p_entropy.add_argument("--n-max", type=int, dest="n_max")
    p_entropy.add_argument("--norm", choices=["l1", "l2", "linf"])
    p_entropy.set_defaults(func=_cmd_entropy)

    p_verify = sub.add_parser("verify", help="run the default check suite")
    common(p_verify)
    p_verify.add_argument("--n-max", type=int, dest="n_max")
    p_verify.set_defaults(func=_cmd_verify)

    p_sanov = sub.add_parser("sanov", help="empirical-type entropy vs relative entropy")
    common(p_sanov)
    p_sanov.add_argument("--denominator", type=int)
    p_sanov.add_argument("--n-max", type=int, dest="n_max")
    p_sanov.add_argument("--radius", type=float)
    p_sanov.set_defaults(func=_cmd_sanov)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NeedMonteCarlo as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

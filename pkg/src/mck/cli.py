"""Command-line front end: ``mck certify-convex | diagnose | lgp | experiment``.

Exit codes: 0 affirmative, 1 negative verdict, 2 input error,
3 hypothesis unavailable, 4 internal-consistency alarm.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .geometry import GridRegion, KleeHypothesisError, Verdict, klee_certify
from .lgp import DiscreteSpace, LgpVerdict, lgp_verdict
from .openness import Scene, diagnose
from .scenes import (available_scenes, builtin_scene, discretize_scene, horn_interval_experiment, scene_from_json,
                     scene_tsv, schur_horn_experiment, toric_polytope_experiment)

SCHEMA = 1
EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_ALARM = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def dumps(payload: dict) -> str:
    """Deterministic JSON: schema-tagged, sorted keys, no NaN."""
    return json.dumps({"schema": SCHEMA, **payload}, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _parse_h(text: str) -> float:
    try:
        h = float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad cell size {text!r}") from exc
    if h <= 0:
        raise argparse.ArgumentTypeError("cell size must be positive")
    return h


def _parse_vector(text: str) -> list[float]:
    try:
        return [float(Fraction(x)) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad vector {text!r}") from exc


def _load_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _need_seed(args):
    if args.seed is None:
        raise InputError("--seed is required for sampling commands")


def _check_tol(args):
    if args.tol is not None and not args.tol > 0:
        raise InputError("--tol must be positive")


def cmd_certify_convex(args) -> tuple[int, dict]:
    if not args.file:
        raise InputError("certify-convex needs --file")
    try:
        region = GridRegion.from_json(_load_json(args.file))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if len(region) == 0:
        raise InputError("region is empty")
    try:
        cert = klee_certify(region, radius=args.radius)
    except KleeHypothesisError as exc:
        return EXIT_HYPOTHESIS, {"command": "certify-convex", "error": str(exc)}
    code = EXIT_OK if cert.verdict == Verdict.CONVEX else EXIT_NEGATIVE
    return code, {"command": "certify-convex", "certificate": cert.to_json()}


def _scene_arg(args) -> Scene | DiscreteSpace:
    if args.file:
        d = _load_json(args.file)
        try:
            return scene_from_json(d)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    if not args.scene:
        raise InputError("need --scene or --file")
    try:
        return builtin_scene(args.scene)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_diagnose(args) -> tuple[int, dict]:
    _need_seed(args)
    sc = _scene_arg(args)
    if not isinstance(sc, Scene):
        raise InputError(f"{args.scene} is a discrete space; use the lgp command")
    h = args.h or 1 / 64
    n = args.samples or 200_000
    v = diagnose(sc, h=h, n_samples=n, seed=args.seed)
    out = {"command": "diagnose", "scene": sc.name, "seed": args.seed, "samples": n, "verdict": v.to_json()}
    if args.format == "tsv":
        out["artifacts"] = [_write(args, f"{sc.name}_samples.tsv", scene_tsv(sc, min(n, 20_000), args.seed))]
    return (EXIT_OK if v.open_onto_image else EXIT_NEGATIVE), out


def lgp_exit_code(v: LgpVerdict) -> int:
    if not v.consistent:
        return EXIT_ALARM
    return EXIT_OK if v.hypotheses_ok else EXIT_NEGATIVE


def _lgp_message(v: LgpVerdict) -> str:
    if not v.consistent:
        return ("consistency alarm: hypotheses hold but a conclusion failed; "
                f"resolution-suspect vertices: {v.resolution_suspect}")
    failed = []
    h = v.hypotheses
    if not h["lfc_ok"]:
        failed.append(f"LFC violated at {len(h['witnesses']['lfc'])} vertices")
    if not h["lcd_ok"]:
        failed.append("local convexity data failed")
    if not h["closed_ok"]:
        failed.append("map not declared closed")
    return "; ".join(failed) if failed else "all hypotheses hold; conclusions confirmed"


def cmd_lgp(args) -> tuple[int, dict]:
    if args.file:
        try:
            s = DiscreteSpace.from_json(_load_json(args.file))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        name = Path(args.file).name
    else:
        if not args.scene:
            raise InputError("need --scene or --file")
        try:
            sc = builtin_scene(args.scene)
            s = discretize_scene(sc)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        name = args.scene
    hop = int(args.radius) if args.radius else 1
    v = lgp_verdict(s, hop_radius=hop, seed=args.seed or 0)
    code = lgp_exit_code(v)
    return code, {"command": "lgp", "space": name, "vertices": s.n, "verdict": v.to_json(),
                  "message": _lgp_message(v)}


def cmd_experiment(args) -> tuple[int, dict]:
    _need_seed(args)
    _check_tol(args)
    name = args.name
    trials = args.trials or 10_000
    if name == "schur-horn":
        lam = args.lam or [2.0, 1.0, 0.0]
        rep = schur_horn_experiment(lam, trials=trials, tol=args.tol or 1e-9, seed=args.seed)
    elif name == "toric":
        sc = builtin_scene(args.scene or "cp2_toric")
        if not isinstance(sc, Scene):
            raise InputError("toric experiment needs a sampled scene")
        h = args.h or 1 / 128
        rep, hull = toric_polytope_experiment(sc, n_samples=args.samples or 100_000, h=h, seed=args.seed)
        if args.out:
            rep.artifacts.append(_write(args, f"{sc.name}_hull.json",
                                        dumps({"hull": [list(map(float, p)) for p in hull]})))
    elif name == "horn":
        a = args.a or [1.0, 0.0]
        b = args.b or [1.0, 0.0]
        try:
            rep = horn_interval_experiment(a, b, trials=trials, tol=args.tol or 1e-12, seed=args.seed)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    else:
        raise InputError(f"unknown experiment {name!r}; choose schur-horn, toric or horn")
    return (EXIT_OK if rep.failures == 0 else EXIT_NEGATIVE), {"command": "experiment", "seed": args.seed,
                                                                "report": rep.to_json()}


def _write(args, filename: str, text: str) -> str:
    if not args.out:
        return filename
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    (d / filename).write_text(text)
    return str(d / filename)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mck", description="Momentum-map convexity checks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scene", help=f"builtin scene: {', '.join(available_scenes())}")
    common.add_argument("--file", help="JSON input (region, scene or discrete space)")
    common.add_argument("--h", type=_parse_h, help="cell size, e.g. 1/64")
    common.add_argument("--samples", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--radius", type=float, help="locality radius (grid units or hops)")
    common.add_argument("--out", help="directory for JSON and artifacts")
    common.add_argument("--format", choices=["json", "tsv"], default="json")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("certify-convex", parents=[common], help="Klee certification of a raster region")
    sub.add_parser("diagnose", parents=[common], help="openness of a scene's momentum map onto its image")
    sub.add_parser("lgp", parents=[common], help="local-to-global verdict on a discrete space")
    ex = sub.add_parser("experiment", parents=[common], help="schur-horn | toric | horn")
    ex.add_argument("name")
    ex.add_argument("--lambda", dest="lam", type=_parse_vector)
    ex.add_argument("--a", type=_parse_vector)
    ex.add_argument("--b", type=_parse_vector)
    return p


COMMANDS = {
    "certify-convex": cmd_certify_convex,
    "diagnose": cmd_diagnose,
    "lgp": cmd_lgp,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        code, payload = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"mck: {exc}", file=sys.stderr)
        return EXIT_INPUT
    payload["exit_code"] = code
    text = dumps(payload)
    sys.stdout.write(text)
    if args.out:
        _write(args, f"{args.command}.json", text)
    return code


if __name__ == "__main__":
    sys.exit(main())

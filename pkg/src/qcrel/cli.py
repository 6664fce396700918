"""``qcrel`` command line.

Exit codes: 0 success, 1 validation error (bad input, unknown subcommand),
2 computation error (optimizer failure, scenario precondition).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import formats
from .classicality import CCSpec, classify_cc, classify_cq, residual_for
from .correlations import correlation_report
from .fixtures import fixture_ids, get_map, get_spec, get_state
from .measurement import OptimizerConfig, OptimizerError
from .qstate import StateError
from .scenarios import (
    ScenarioError,
    scenario_cv_demo,
    scenario_measure_sampling,
    scenario_qcr_demo,
    scenario_separable_discordant,
    scenario_teleport_structures,
)
from .structures import parse_angle, restructure


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: $QCR_SEED or 0)")
    p.add_argument("--config", type=Path, help="JSON config with optimizer.* keys")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--restarts", type=int, help="optimizer restarts override")


def _state_source(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--state", type=Path, help="state JSON file")
    g.add_argument("--fixture", help=f"built-in fixture id ({', '.join(fixture_ids())}, cc-<p...>)")


def _map_source(p: argparse.ArgumentParser, required: bool):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--map", dest="map_id", help="map id: identity, swap, bell, beamsplitter:<c>:<theta>, regroup:<a|b>, random:<seed>")
    g.add_argument("--map-file", type=Path, help="structure map JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcrel", description="Structure-dependence of quantum discord.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("discord", help="correlation report for a bipartite state")
    _state_source(p)
    _map_source(p, required=False)
    _common(p)

    p = sub.add_parser("classify", help="classical-quantum / classical-classical verdicts")
    _state_source(p)
    p.add_argument("--side", choices=("a", "b", "both"), default="both")
    p.add_argument("--tol", type=float, default=1e-8)
    _common(p)

    p = sub.add_parser("residual", help="zero-discord residual of a spec under a map")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", type=Path, help="CQ/CC spec JSON file")
    g.add_argument("--fixture", help="built-in spec fixture id")
    _map_source(p, required=True)
    p.add_argument("--full", action="store_true", help="include the full residual tensor")
    _common(p)

    p = sub.add_parser("restructure", help="express a state in another structure")
    _state_source(p)
    _map_source(p, required=True)
    _common(p)

    p = sub.add_parser("qcr-demo", help="zero discord in one structure, nonzero in another")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fixture", help="built-in spec fixture id")
    g.add_argument("--spec", type=Path)
    p.add_argument("--map", dest="map_id", default="bell")
    _common(p)

    p = sub.add_parser("teleport-demo", help="three-qubit state cut two ways")
    p.add_argument("--phi", default="1,0,0,0", help="qubit amplitudes as re0,im0,re1,im1")
    _common(p)

    p = sub.add_parser("separable-demo", help="separable yet discordant two-qubit state")
    _common(p)

    p = sub.add_parser("sample", help="fraction of random states with vanishing discord")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--dims", default="2,2")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--cc-samples", type=int, default=None)
    _common(p)

    p = sub.add_parser("cv-demo", help="Fock input through a truncated beamsplitter")
    p.add_argument("--cutoff", type=int, default=4)
    p.add_argument("--theta", default="pi/4")
    p.add_argument("--fock", default="1,0")
    p.add_argument("--margin", type=int, default=1)
    _common(p)
    return parser


def _load_json(path: Path):
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise StateError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise StateError(f"{path}: invalid JSON ({exc})") from None


def _config(args) -> OptimizerConfig:
    """Seed precedence: --seed, config file, $QCR_SEED, 0."""
    data = _load_json(args.config) if args.config else {}
    cfg = OptimizerConfig.from_mapping(data)
    file_has_seed = "optimizer.seed" in data or "seed" in data.get("optimizer", {})
    seed = args.seed
    if seed is None and not file_has_seed:
        seed = int(os.environ.get("QCR_SEED", 0))
    kwargs = dict(cfg.__dict__)
    if seed is not None:
        kwargs["seed"] = seed
    if args.restarts is not None:
        kwargs["restarts"] = args.restarts
    return OptimizerConfig(**kwargs)


def _state(args):
    if args.state is not None:
        return formats.state_from_json(_load_json(args.state)), str(args.state)
    return get_state(args.fixture), args.fixture


def _map(args, dims):
    if getattr(args, "map_file", None) is not None:
        return formats.map_from_json(_load_json(args.map_file), dims)
    return get_map(args.map_id, dims)


def _emit(args, payload: dict, rows: list[dict] | None):
    if args.format == "csv":
        if rows is None:
            raise StateError(f"csv output is not available for '{args.command}'")
        text = formats.rows_to_csv(rows)
    else:
        text = formats.dumps(payload)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_discord(args, cfg):
    rho, name = _state(args)
    map_name = "identity"
    if args.map_id or args.map_file:
        smap = _map(args, rho.dims)
        rho = restructure(rho, smap)
        map_name = smap.name
    rep = correlation_report(rho, cfg).to_dict()
    payload = {"scenario": "discord", "fixture": name, "map": map_name, "report": rep, "seed": cfg.seed}
    return payload, [formats.report_row("discord", name, map_name, rep, cfg.seed)]


def _cmd_classify(args, cfg):
    rho, name = _state(args)
    out = {"scenario": "classify", "fixture": name, "tol": args.tol}
    for tag in ("a", "b"):
        if args.side in (tag, "both"):
            v = classify_cq(rho, tag, args.tol)
            out[f"cq_{tag}"] = {"accepted": v.accepted, "max_commutator": v.max_commutator, "basis": v.basis}
    if args.side == "both":
        v = classify_cc(rho, args.tol)
        out["cc"] = {"accepted": v.accepted, "probs": v.probs}
    return out, None


def _cmd_residual(args, cfg):
    spec = formats.spec_from_json(_load_json(args.spec)) if args.spec else get_spec(args.fixture)
    smap = _map(args, spec.dims)
    res = residual_for(spec, smap)
    kind = "cc" if isinstance(spec, CCSpec) else "cq"
    name = str(args.spec) if args.spec else args.fixture
    payload = {"scenario": "residual", "fixture": name, "map": smap.name, "kind": kind, **res.to_dict(full=args.full)}
    row = formats.report_row("residual", name, smap.name, None, cfg.seed,
                             residual6=res.max_residual if kind == "cq" else None,
                             residual9=res.max_residual if kind == "cc" else None)
    return payload, [row]


def _cmd_restructure(args, cfg):
    rho, _ = _state(args)
    smap = _map(args, rho.dims)
    return formats.state_to_json(restructure(rho, smap)), None


def _cmd_qcr(args, cfg):
    if args.spec:
        spec, name = formats.spec_from_json(_load_json(args.spec)), str(args.spec)
    else:
        spec, name = get_spec(args.fixture), args.fixture
    rep = scenario_qcr_demo(spec, args.map_id, cfg, fixture_name=name)
    rkey = "residual6" if rep["residual_kind"] == "cq" else "residual9"
    rows = [
        formats.report_row("qcr-demo", name, "identity", rep["source"], cfg.seed),
        formats.report_row("qcr-demo", name, rep["map"], rep["target"], cfg.seed,
                           **{rkey: rep["residual"]["max_residual"]}),
    ]
    return rep, rows


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise StateError(f"expected comma-separated numbers, got {text!r}") from None


def _cmd_teleport(args, cfg):
    v = _floats(args.phi)
    if len(v) != 4:
        raise StateError("--phi needs four numbers: re0,im0,re1,im1")
    phi = np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]])
    rep = scenario_teleport_structures(phi, cfg)
    rows = [
        formats.report_row("teleport-demo", "teleport", "regroup:0|1,2", rep["cut_1_23"], cfg.seed),
        formats.report_row("teleport-demo", "teleport", "regroup:0,1|2", rep["cut_12_3"], cfg.seed),
    ]
    return rep, rows


def _cmd_separable(args, cfg):
    rep = scenario_separable_discordant(cfg)
    return rep, [formats.report_row("separable-demo", "separable-discordant", "identity", rep, cfg.seed)]


def _cmd_sample(args, cfg):
    dims = [int(d) for d in _floats(args.dims)]
    rep = scenario_measure_sampling(args.n, dims, args.epsilon, cfg.seed, cfg, cc_samples=args.cc_samples)
    payload = rep.to_dict()
    rows = []
    for i, d in enumerate(rep.two_way_discord):
        row = formats.report_row("sample", f"sample-{i}", "identity", None, cfg.seed)
        row["D"] = d
        rows.append(row)
    return payload, rows


def _cmd_cv(args, cfg):
    fock = [int(v) for v in _floats(args.fock)]
    if len(fock) != 2:
        raise StateError("--fock needs two photon numbers")
    rep = scenario_cv_demo(args.cutoff, parse_angle(args.theta), tuple(fock), cfg, args.margin)
    name = f"fock-{fock[0]}-{fock[1]}"
    return rep, [formats.report_row("cv-demo", name, rep["map"], rep["target"], cfg.seed)]


COMMANDS = {
    "discord": _cmd_discord,
    "classify": _cmd_classify,
    "residual": _cmd_residual,
    "restructure": _cmd_restructure,
    "qcr-demo": _cmd_qcr,
    "teleport-demo": _cmd_teleport,
    "separable-demo": _cmd_separable,
    "sample": _cmd_sample,
    "cv-demo": _cmd_cv,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        cfg = _config(args)
        payload, rows = COMMANDS[args.command](args, cfg)
        _emit(args, payload, rows)
    except (StateError, ValueError, KeyError) as exc:
        print(f"qcrel {args.command}: validation error: {exc}", file=sys.stderr)
        return 1
    except (OptimizerError, ScenarioError) as exc:
        print(f"qcrel {args.command}: computation error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

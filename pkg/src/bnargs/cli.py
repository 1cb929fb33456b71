"""Command line surface: inspect, arguments, explain, eval.

Exit codes: 0 success, 2 usage/validation problems, 3 IO or runtime
failures.  Diagnostics go to stderr, results to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from .argument_core import ArgumentError, argument_effect, argument_strength
from .argument_mining import (
    DEFAULT_THRESHOLD,
    MiningConfig,
    all_local_arguments,
    default_config,
)
from .evaluation import run_study
from .explanation import MODES, explain_argument
from .factors import FactorError
from .model_io import (
    BifSyntaxError,
    DescriptionDictionary,
    NetworkValidationError,
    build_factor_graph,
    load_bif_file,
    load_descriptions,
    network_summary,
)

USAGE_ERROR = 2
RUNTIME_ERROR = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_model(path: str):
    try:
        return load_bif_file(path)
    except OSError as exc:
        raise CliError(f"cannot read model: {exc}", USAGE_ERROR) from exc
    except (BifSyntaxError, NetworkValidationError, FactorError) as exc:
        raise CliError(f"invalid model {path}: {exc}", USAGE_ERROR) from exc


def _parse_evidence(net, text: str) -> dict[str, str]:
    evidence: dict[str, str] = {}
    if not text:
        return evidence
    for item in text.split(","):
        if "=" not in item:
            raise CliError(
                f"evidence item {item!r} is not of the form var=state", USAGE_ERROR
            )
        name, state = item.split("=", 1)
        name, state = name.strip(), state.strip()
        try:
            net.variable(name).index_of(state)
        except (NetworkValidationError, FactorError) as exc:
            raise CliError(str(exc), USAGE_ERROR) from exc
        if name in evidence and evidence[name] != state:
            raise CliError(f"conflicting evidence for {name!r}", USAGE_ERROR)
        evidence[name] = state
    return evidence


def _parse_target(net, text: str) -> tuple[str, str]:
    if "=" not in text:
        raise CliError("target must be VAR=STATE", USAGE_ERROR)
    name, state = (part.strip() for part in text.split("=", 1))
    try:
        net.variable(name).index_of(state)
    except (NetworkValidationError, FactorError) as exc:
        raise CliError(str(exc), USAGE_ERROR) from exc
    return name, state


def _mining_config(args, graph) -> MiningConfig:
    base = default_config(graph, threshold=args.threshold)
    max_path = (
        args.max_path_length
        if args.max_path_length is not None
        else base.max_path_length
    )
    complexity = (
        args.complexity_limit
        if args.complexity_limit is not None
        else base.complexity_limit
    )
    try:
        return MiningConfig(
            threshold=args.threshold,
            max_path_length=max_path,
            complexity_limit=complexity,
        )
    except ValueError as exc:
        raise CliError(str(exc), USAGE_ERROR) from exc


def _mine(args):
    net = _load_model(args.model)
    graph = build_factor_graph(net)
    evidence = _parse_evidence(net, args.evidence)
    target = _parse_target(net, args.target)
    if not evidence:
        raise CliError("at least one evidence assignment is required", USAGE_ERROR)
    if target[0] in evidence:
        raise CliError(f"target {target[0]!r} must not be observed", USAGE_ERROR)
    config = _mining_config(args, graph)
    try:
        mined = all_local_arguments(graph, target, evidence, config)
    except ArgumentError as exc:
        raise CliError(str(exc), USAGE_ERROR) from exc
    return net, graph, evidence, target, mined


def _argument_json(arg, graph, outcome: str) -> dict:
    effects = argument_effect(arg, graph)
    data = arg.to_dict()
    data["strength"] = argument_strength(arg, graph, outcome, effects=effects)
    data["effects"] = {
        name: {
            "states": list(eff.scope[0].states),
            "values": [float(x) for x in eff.normalize().values],
        }
        for name, eff in sorted(effects.node_effects.items())
    }
    return data


def cmd_inspect(args) -> int:
    net = _load_model(args.model)
    summary = network_summary(net)
    if args.json:
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0
    print(f"network {summary['name']}: {summary['n_variables']} variables, "
          f"{summary['n_parameters']} parameters")
    for entry in summary["variables"]:
        parents = ", ".join(entry["parents"]) if entry["parents"] else "-"
        print(
            f"  {entry['name']} ({', '.join(entry['states'])}) "
            f"| parents: {parents} | cpt rows: {entry['cpt_rows']}"
        )
    return 0


def cmd_arguments(args) -> int:
    _, graph, _, target, mined = _mine(args)
    if args.format == "json":
        print(
            json.dumps(
                [_argument_json(a, graph, target[1]) for a in mined],
                indent=2,
                sort_keys=True,
            )
        )
        return 0
    if not mined:
        print("no arguments found")
        return 0
    for rank, arg in enumerate(mined, start=1):
        effects = argument_effect(arg, graph)
        strength = argument_strength(arg, graph, target[1], effects=effects)
        premises = ", ".join(f"{v}={s}" for v, s in arg.premises)
        print(f"{rank}. strength {strength:+.4f}  premises: {premises}")
        for a, b in sorted(arg.edges):
            print(f"     {a[0]}:{a[1]} -> {b[0]}:{b[1]}")
    return 0


def cmd_explain(args) -> int:
    net, graph, _, target, mined = _mine(args)
    if args.descriptions:
        try:
            with open(args.descriptions, "r", encoding="utf-8") as fh:
                dictionary = load_descriptions(fh.read(), net)
        except OSError as exc:
            raise CliError(f"cannot read descriptions: {exc}", USAGE_ERROR) from exc
        except ValueError as exc:
            raise CliError(str(exc), USAGE_ERROR) from exc
        for warning in dictionary.warnings:
            print(f"warning: {warning}", file=sys.stderr)
    else:
        dictionary = DescriptionDictionary()
    blocks = [
        explain_argument(arg, graph, dictionary, mode=args.mode) for arg in mined
    ]
    print("\n\n".join(blocks))
    return 0


def cmd_eval(args) -> int:
    net = _load_model(args.model)
    graph = build_factor_graph(net)
    config = _mining_config(args, graph)
    report = run_study(net, args.n, args.seed, config)
    try:
        with open(args.out_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
        with open(args.out_summary, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    except OSError as exc:
        raise CliError(f"cannot write report: {exc}", RUNTIME_ERROR) from exc
    methods = report.summary["methods"]
    print(f"network {report.network}: n={report.n} seed={report.seed} "
          f"failed={report.summary['n_failed']}")
    header = f"{'method':<10} {'median |dlogodds|':>18} {'mean |dp|':>10} {'exact':>7}"
    print(header)
    for name in ("argument", "baseline"):
        stats = methods[name]
        med = stats["logodds_error"]["median"]
        mean_p = stats["probability_error"]["mean"]
        match = stats["exact_match_rate"]
        med_s = "n/a" if med is None else f"{med:.3f}"
        mean_s = "n/a" if mean_p is None else f"{100 * mean_p:.2f}%"
        match_s = "n/a" if match is None else f"{100 * match:.1f}%"
        print(f"{name:<10} {med_s:>18} {mean_s:>10} {match_s:>7}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnargs",
        description="Extract, score and verbalize arguments from Bayesian networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_inspect = sub.add_parser("inspect", help="summarize a BIF network")
    p_inspect.add_argument("--model", required=True)
    p_inspect.add_argument("--json", action="store_true")
    p_inspect.set_defaults(func=cmd_inspect)

    def add_mining_flags(p):
        p.add_argument("--model", required=True)
        p.add_argument("--evidence", required=True,
                       help="comma separated var=state list")
        p.add_argument("--target", required=True, help="VAR=STATE")
        p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
        p.add_argument("--max-path-length", type=int, default=None)
        p.add_argument("--complexity-limit", type=int, default=None)

    p_args = sub.add_parser("arguments", help="mine ranked arguments")
    add_mining_flags(p_args)
    p_args.add_argument("--format", choices=("text", "json"), default="text")
    p_args.set_defaults(func=cmd_arguments)

    p_explain = sub.add_parser("explain", help="verbalize mined arguments")
    add_mining_flags(p_explain)
    p_explain.add_argument("--mode", choices=MODES, default="direct")
    p_explain.add_argument("--descriptions", default=None,
                           help="JSON description dictionary")
    p_explain.set_defaults(func=cmd_explain)

    p_eval = sub.add_parser("eval", help="random-query approximation study")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--n", type=int, default=200)
    p_eval.add_argument("--seed", type=int, default=42)
    p_eval.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p_eval.add_argument("--max-path-length", type=int, default=None)
    p_eval.add_argument("--complexity-limit", type=int, default=None)
    p_eval.add_argument("--out-csv", required=True)
    p_eval.add_argument("--out-summary", required=True)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())

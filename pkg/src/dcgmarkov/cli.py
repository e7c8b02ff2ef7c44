"""Batch command line front end.

Every command reads files, writes a stable text or JSON payload to stdout and
returns 0 on success, 1 on a domain error (reported on stderr) and 2 on a
usage error. All randomness flows from --seed; when the flag is absent a
fixed default seed is used, never entropy, so published numbers reproduce.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import errors
from .data import Dataset
from .formats import (
    format_graph,
    format_statement,
    load_graph,
    load_linear_sem,
    statement_to_json,
)
from .graphs import cyclegroups
from .linear import (
    DEFAULT_SEED,
    fisher_z_test,
    latentize_correlated_errors,
    linearly_entails_zero,
    simulate,
)
from .nonlinear import parse_model, sample
from .separation import (
    collapse,
    d_separated,
    d_separated_path,
    enumerate_entailed_ci,
    local_markov_statements,
    markov_equivalent,
)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _alpha(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("must lie strictly between 0 and 1")
    return value


def _name_list(text: str) -> list[str]:
    return [piece.strip() for piece in text.split(",") if piece.strip()]


def _emit(args, text_payload: str, json_payload) -> None:
    if args.format == "json":
        print(json.dumps(json_payload, sort_keys=True))
    else:
        print(text_payload)


def _write_or_print(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def _cmd_dsep(args) -> int:
    graph = load_graph(args.graph)
    decide = d_separated if args.method == "moral" else d_separated_path
    separated = decide(graph, set(args.x), set(args.y), set(args.given))
    _emit(
        args,
        "d-separated" if separated else "d-connected",
        {"separated": separated, "method": args.method},
    )
    return 0


def _cmd_enumerate(args) -> int:
    graph = load_graph(args.graph)
    statements = enumerate_entailed_ci(graph)
    if args.format == "json":
        print(json.dumps([statement_to_json(s) for s in statements], sort_keys=True))
    else:
        for s in statements:
            print(format_statement(s, graph.vertices))
    return 0


def _cmd_local_markov(args) -> int:
    graph = load_graph(args.graph)
    statements = local_markov_statements(graph)
    if args.format == "json":
        print(json.dumps([statement_to_json(s) for s in statements], sort_keys=True))
    else:
        for s in statements:
            print(format_statement(s, graph.vertices))
    return 0


def _cmd_cyclegroups(args) -> int:
    graph = load_graph(args.graph)
    groups = cyclegroups(graph)
    if args.format == "json":
        payload = [
            {
                "vertices": graph.sort(g.vertex_set),
                "cycles": [[list(edge) for edge in c.edges] for c in g.cycles] or None,
            }
            for g in groups
        ]
        print(json.dumps(payload, sort_keys=True))
    else:
        for g in groups:
            print("cyclegroup: " + " ".join(graph.sort(g.vertex_set)))
            for c in g.cycles:
                print("  cycle: " + " -> ".join(c.vertices + (c.vertices[0],)))
    return 0


def _cmd_collapse(args) -> int:
    graph = load_graph(args.graph)
    collapsed = collapse(graph)
    if args.format == "json":
        print(
            json.dumps(
                {
                    "vertices": list(collapsed.vertices),
                    "edges": sorted([t, h] for t, h in collapsed.edges),
                },
                sort_keys=True,
            )
        )
    else:
        _write_or_print(args, format_graph(collapsed))
    return 0


def _cmd_equiv(args) -> int:
    g1 = load_graph(args.graph1)
    g2 = load_graph(args.graph2)
    equivalent = markov_equivalent(g1, g2)
    _emit(args, "equivalent" if equivalent else "not equivalent", {"equivalent": equivalent})
    return 0


def _cmd_latentize(args) -> int:
    sem = load_linear_sem(args.sem)
    graph = latentize_correlated_errors(sem)
    if args.format == "json":
        print(
            json.dumps(
                {"vertices": list(graph.vertices), "edges": sorted([t, h] for t, h in graph.edges)},
                sort_keys=True,
            )
        )
    else:
        _write_or_print(args, format_graph(graph))
    return 0


def _cmd_oracle(args) -> int:
    graph = load_graph(args.graph)
    result = linearly_entails_zero(
        graph, args.x, args.y, args.given, trials=args.trials, seed=args.seed
    )
    summary = (
        f"|rho| min={result.min_abs_corr:.3e} max={result.max_abs_corr:.3e} "
        f"trials={result.trials}"
    )
    _emit(
        args,
        f"{result.verdict}\n{summary}",
        {
            "verdict": result.verdict,
            "min_abs_rho": result.min_abs_corr,
            "max_abs_rho": result.max_abs_corr,
            "trials": result.trials,
        },
    )
    return 0


def _cmd_simulate(args) -> int:
    if args.model.endswith(".sem"):
        dataset = simulate(load_linear_sem(args.model), args.n, args.seed)
    elif args.model.endswith(".psem"):
        with open(args.model, "r", encoding="utf-8") as handle:
            spec = parse_model(handle.read())
        dataset = sample(spec, args.n, args.seed)
        if dataset.rejected:
            print(f"note: rejected {dataset.rejected} diverged draws", file=sys.stderr)
    else:
        raise ValueError(f"model file must end in .sem or .psem: {args.model!r}")
    if args.format == "json":
        print(
            json.dumps(
                {"columns": list(dataset.columns), "rows": dataset.values.tolist()},
                sort_keys=True,
            )
        )
    else:
        _write_or_print(args, dataset.to_csv())
    return 0


def _cmd_citest(args) -> int:
    dataset = Dataset.read_csv(args.csv)
    result = fisher_z_test(dataset, args.x, args.y, args.given, args.alpha)
    _emit(
        args,
        f"{result.verdict}\nstatistic={result.statistic:.4f} p={result.p_value:.4g} n={result.n}",
        {
            "verdict": result.verdict,
            "statistic": result.statistic,
            "p_value": result.p_value,
            "n": result.n,
        },
    )
    return 0


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcgmarkov",
        description="Separation, Markov enumeration and SEM oracles for directed graphs with cycles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.set_defaults(func=func)
        return p

    p = add("dsep", _cmd_dsep, "decide d-separation in a .dg graph")
    p.add_argument("graph")
    p.add_argument("--x", required=True, type=_name_list)
    p.add_argument("--y", required=True, type=_name_list)
    p.add_argument("--given", default="", type=_name_list)
    p.add_argument("--method", choices=["moral", "path"], default="moral")

    p = add("enumerate", _cmd_enumerate, "list all entailed singleton-pair statements")
    p.add_argument("graph")

    p = add("local-markov", _cmd_local_markov, "list the local Markov statements")
    p.add_argument("graph")

    p = add("cyclegroups", _cmd_cyclegroups, "list cyclegroups and their cycles")
    p.add_argument("graph")

    p = add("collapse", _cmd_collapse, "write the collapsed (acyclic) graph")
    p.add_argument("graph")
    p.add_argument("--out")

    p = add("equiv", _cmd_equiv, "compare the entailed statement sets of two graphs")
    p.add_argument("graph1")
    p.add_argument("graph2")

    p = add("latentize", _cmd_latentize, "rewrite correlated errors as latent parents")
    p.add_argument("sem")
    p.add_argument("--out")

    p = add("oracle", _cmd_oracle, "numeric zero-partial-correlation verdict")
    p.add_argument("graph")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--given", default="", type=_name_list)
    p.add_argument("--trials", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = add("simulate", _cmd_simulate, "draw equilibrium samples from a .sem or .psem model")
    p.add_argument("model")
    p.add_argument("--n", required=True, type=_positive_int)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")

    p = add("citest", _cmd_citest, "Fisher-z conditional independence test on CSV data")
    p.add_argument("csv")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--given", default="", type=_name_list)
    p.add_argument("--alpha", type=_alpha, default=0.01)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (errors.Error, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()

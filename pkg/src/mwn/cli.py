"""Command-line interface: ``mwn <subcommand> [options]``.

Exit status: 0 on success, 1 on a runtime error, 2 on bad arguments or a rule
syntax error, 3 when a build was truncated by ``--budget`` and ``--strict``
was given.

Every subcommand accepts ``--config FILE`` holding ``key = value`` lines
that mirror its long options (``steps = 10``, ``strict = true``); options
given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, branchial, collisions, export, graph, numtheory, residue
from .dsl import DSLSyntaxError, parse_rule, render_branch, render_rule
from .merge_search import DEFAULT_VALUE_CAP, merge_search, pair_acceptors
from .rules import (
    AffineInt,
    Rule,
    RuleError,
    affine_word_compose,
    compose_branch_word,
    invert_affine_rule,
    word_from_str,
    word_to_str,
)
from .values import format_value, value_coordinate, value_to_json

__all__ = ["main", "build_parser", "OP_REGISTRY"]

# Library operation -> the subcommand (and option) that exposes it.
OP_REGISTRY = {
    "graph.build": "run",
    "graph.prune_loose_ends": "run --prune",
    "graph.transitive_reduction": "run --reduce",
    "graph.layer_stats": "stats",
    "graph.path_weights": "stats --weights",
    "export.graph_to_json": "run --format json",
    "export.graph_to_dot": "run --format dot",
    "export.graph_to_graphml": "run --format graphml",
    "export.graph_to_csv": "run --format csv",
    "export.graph_from_json": "export",
    "export.graph_to_dict": "run --format json",
    "export.export_graph": "run --format",
    "export.stats_to_csv": "stats",
    "export.rows_to_csv": "stats --weights",
    "analysis.enumerate_branchings": "mergers --branchings",
    "analysis.enumerate_mergers": "mergers",
    "analysis.step_counts": "stats",
    "analysis.creation_order": "mergers --branchings",
    "analysis.reach_statistics": "stats --reached",
    "analysis.reached_numbers": "stats --reached",
    "analysis.reached_below": "stats --reached-below",
    "analysis.extract_loops": "loops",
    "analysis.classify_affine_rule": "classify",
    "analysis.grid_structure_holds": "classify --confirm",
    "analysis.confluence_probe": "confluence-probe",
    "merge_search.merge_search": "merge-search",
    "merge_search.pair_acceptors": "merge-search --filter",
    "residue.reachable_residues": "merge-search --filter",
    "residue.pair_merge_residues": "modk --residues",
    "residue.build_residue_automaton": "modk",
    "residue.drop_transients": "modk --drop-transients",
    "residue.merger_residues": "modk --residues",
    "residue.accepted_words": "modk --words",
    "residue.accepted_count": "modk --count",
    "residue.accepted_fraction": "modk --fraction",
    "residue.remainder_via_graph": "remainder",
    "residue.automaton_to_dot": "modk --format dot",
    "residue.automaton_to_json": "modk --format json",
    "numtheory.frobenius_number": "frobenius",
    "numtheory.first_generation_step": "firstgen",
    "numtheory.tube_circumference": "circumference",
    "numtheory.knacci_counts": "knacci",
    "numtheory.knacci_ratio": "knacci --ratio",
    # arithmetic branches are reached through the rule language
    "numtheory.euler_phi": "run --rule 'n -> {phi(n), n+1}'",
    "numtheory.prime_pi": "run --rule 'n -> {pi(n), n+1}'",
    "numtheory.integer_reverse": "run --rule 'n -> {rev(n, 2), n+1}'",
    "numtheory.proper_divisors": "run --rule 'n -> {divisors(n)}'",
    "numtheory.coprimes_below": "run --rule 'n -> {coprimes(n)}'",
    "numtheory.factorize": "run --rule 'n -> {phi(n), n+1}'",
    "numtheory.prime_nu": "run --reduce --rule 'n -> {divisors(n)}'",
    "branchial.branchial_graph": "branchial",
    "branchial.layer_value_distribution": "branchial --distribution",
    "branchial.branchial_vs_numeric": "branchial --scatter",
    "branchial.rank_correlation": "branchial --scatter",
    "branchial.total_variation": "branchial --tv",
    "collisions.find_word_collisions": "collisions",
    "collisions.collisions_to_json": "collisions",
    "rules.invert_affine_rule": "invert",
    "rules.apply_rule": "run",
    "rules.word_to_str": "loops --letters",
    "rules.word_from_str": "loops --eval",
    "rules.compose_branch_word": "loops --eval",
    "rules.affine_word_compose": "loops --eval",
}

SUBCOMMANDS = (
    "run", "export", "stats", "mergers", "merge-search", "loops", "classify",
    "confluence-probe", "modk", "remainder", "frobenius", "firstgen",
    "circumference", "knacci", "branchial", "collisions", "invert",
)


class CLIError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


# -- argument helpers -------------------------------------------------------

def parse_value(text: str, domain: str):
    text = text.strip()
    if domain == "int":
        return int(text)
    if domain == "vec":
        return tuple(int(x) for x in text.strip("[]{}() ").split(","))
    # A constant Gaussian rational, written as in rules: 1/2-i, 3, -i/4.
    br = parse_rule(f"z -> {{{text}}}").branches[0]
    if not br.c.is_zero():
        raise CLIError(f"initial value {text!r} must be a constant", 2)
    return br.d


def parse_inits(text: str, rule: Rule) -> list:
    sep = ";" if (";" in text or rule.domain == "vec") else ","
    try:
        return [parse_value(t, rule.domain) for t in text.split(sep) if t.strip()]
    except (ValueError, DSLSyntaxError) as exc:
        raise CLIError(f"bad initial value in {text!r}: {exc}", 2) from None


def default_letters(rule: Rule) -> Optional[str]:
    """Name affine branches by their multipliers when those are distinct digits."""
    if not rule.is_affine_int:
        return None
    mults = [b.a for b in rule.branches]
    if all(2 <= a <= 9 for a in mults) and len(set(mults)) == len(mults):
        return "".join(map(str, mults))
    return None


def _word(w, letters) -> str:
    return word_to_str(w, letters)


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _plot_csv(args, header, rows) -> None:
    path = getattr(args, "emit_plot_csv", None)
    if path:
        Path(path).write_text(export.rows_to_csv(header, rows), encoding="utf-8")


def _rule(args) -> Rule:
    if not args.rule:
        raise CLIError("--rule is required", 2)
    return parse_rule(args.rule)


def _build(args):
    rule = _rule(args)
    inits = parse_inits(args.init, rule)
    g = graph.build(rule, inits, args.steps, args.budget)
    if g.truncated:
        print(f"warning: node budget reached; graph truncated after {g.steps_built} steps", file=sys.stderr)
        if args.strict:
            raise CLIError("graph truncated (--strict)", 3)
    return rule, g


# -- subcommands ------------------------------------------------------------

def cmd_run(args) -> None:
    rule, g = _build(args)
    if args.prune:
        g = graph.prune_loose_ends(g)
    if args.reduce:
        g = graph.transitive_reduction(g)
    fmt = args.format or (Path(args.out).suffix.lstrip(".") if args.out else "json")
    _emit(args, export.export_graph(g, fmt))
    if args.emit_plot_csv:
        mode = args.coords or {"int": "log-magnitude", "gauss": "complex-plane", "vec": "vector-plane"}[rule.domain]
        rows = []
        for i, (v, l) in enumerate(zip(g.values, g.layers)):
            x, y = value_coordinate(v, mode)
            rows.append((i, format_value(v), l, repr(x), repr(y)))
        _plot_csv(args, ("id", "value", "layer", "x", "y"), rows)


def cmd_export(args) -> None:
    g = export.graph_from_json(Path(args.input).read_text(encoding="utf-8"))
    _emit(args, export.export_graph(g, args.format or "json"))


def cmd_stats(args) -> None:
    rule, g = _build(args)
    if args.reached_below is not None:
        rs = analysis.reached_below(rule, parse_inits(args.init, rule)[0], args.reached_below)
        _emit_reached(args, rs)
        return
    if args.reached:
        rs = analysis.reached_numbers(rule, parse_inits(args.init, rule), args.steps)
        _emit_reached(args, rs)
        return
    if args.weights:
        w = graph.path_weights(g)
        rows = [(i, format_value(v), l, w[i]) for i, (v, l) in enumerate(zip(g.values, g.layers))]
        _emit(args, export.rows_to_csv(("id", "value", "layer", "weight"), rows))
        return
    text = export.stats_to_csv(g)
    _emit(args, text)
    _plot_csv(args, ("step", "branchings", "mergings"), [(c.step, c.branchings, c.mergings) for c in analysis.step_counts(g)])


def _emit_reached(args, rs) -> None:
    st = analysis.reach_statistics(rs)
    head = ", ".join(str(v) for v in rs.values[: args.show])
    lines = [f"values: {head}{', ...' if len(rs.values) > args.show else ''}"]
    lines += [f"{k}: {v}" for k, v in st.items()]
    _emit(args, "\n".join(lines) + "\n")
    if args.emit_plot_csv:
        m, dens = rs.density()
        dens_at = dict(zip(m.astype(int).tolist(), dens.tolist()))
        gaps = rs.running_max_gap().tolist() if len(rs.values) > 1 else []
        rows = [
            (j, v, repr(dens_at[j]) if j in dens_at else "", gaps[j - 2] if j >= 2 else "")
            for j, v in enumerate(rs.values, 1)
        ]
        _plot_csv(args, ("m", "value", "density", "running_max_gap"), rows)


def cmd_mergers(args) -> None:
    rule, g = _build(args)
    if args.branchings:
        out = [
            {"step": ev.step, "parent": value_to_json(ev.parent), "children": [value_to_json(v) for v in ev.values]}
            for ev in analysis.enumerate_branchings(g)
        ]
    else:
        out = [
            {"value": value_to_json(m.value), "steps": list(m.steps),
             "incoming": [{"src": value_to_json(s), "branch": b, "step": t} for s, b, t in m.incoming]}
            for m in analysis.enumerate_mergers(g)
        ]
    _emit(args, json.dumps(out) + "\n")


def _cap(text: str) -> Optional[int]:
    return None if text.lower() == "none" else int(text)


def cmd_merge_search(args) -> None:
    rule = _rule(args)
    u, v = (int(x) for x in args.pair.split(","))
    filt = None
    if args.filter:
        if args.filter == "auto":
            filt = "auto"
        else:
            k = int(args.filter)
            filt = (k, pair_acceptors(rule, u, v, k))
    res = merge_search(rule, u, v, args.max_steps, _cap(args.value_cap), filt)
    letters = args.letters or default_letters(rule)
    if args.json:
        d = res.to_dict()
        if res.merged:
            d["words"] = [_word(res.word_u, letters), _word(res.word_v, letters)]
        _emit(args, json.dumps(d) + "\n")
    elif res.merged:
        _emit(args, f"({u},{v}) merged at {res.value} in {res.steps} steps: "
                    f"{_word(res.word_u, letters)}[{u}] = {_word(res.word_v, letters)}[{v}]\n")
    else:
        note = " (lower bound: value cap hit)" if res.lower_bound else ""
        _emit(args, f"({u},{v}) not merged within {res.steps} steps{note}\n")


def cmd_loops(args) -> None:
    if args.eval:
        _eval_words(args)
        return
    rule, g = _build(args)
    letters = args.letters or default_letters(rule)
    out = [
        {"merge": value_to_json(l.merge_value), "branch": value_to_json(l.branch_value),
         "words": [_word(l.word_a, letters), _word(l.word_b, letters)]}
        for l in analysis.extract_loops(g)
    ]
    _emit(args, json.dumps(out) + "\n")


def _eval_words(args) -> None:
    """Evaluate branch words from the initial value: ``--eval 223232222,3333233``."""
    rule = _rule(args)
    letters = args.letters or default_letters(rule)
    init = parse_inits(args.init, rule)[0]
    lines = []
    for text in args.eval.split(","):
        try:
            word = word_from_str(text.strip(), letters)
        except ValueError as exc:
            raise CLIError(str(exc), 2) from None
        value = compose_branch_word(rule, word, init)
        line = f"{text.strip()}[{format_value(init)}] = {format_value(value)}"
        if rule.is_affine_int:
            f = affine_word_compose(rule, word)
            line += f"  (n -> {render_branch(f)})"
        lines.append(line)
    _emit(args, "\n".join(lines) + "\n")


def cmd_classify(args) -> None:
    cls = analysis.classify_affine_rule(args.a, args.b, args.c, args.d)
    line = cls
    if args.confirm and cls == "simple-grid":
        ok = analysis.grid_structure_holds(args.a, args.b, args.c, args.d, steps=args.steps)
        line += f" (grid structure {'confirmed' if ok else 'NOT confirmed'} on a {args.steps}-step build)"
    _emit(args, line + "\n")


def cmd_confluence_probe(args) -> None:
    rule = _rule(args)
    rep = analysis.confluence_probe(
        rule, parse_inits(args.init, rule), args.steps, args.pair_steps,
        _cap(args.value_cap), args.max_pairs, "auto" if args.filter else None,
    )
    _emit(args, json.dumps(rep.to_dict()) + "\n")


def cmd_modk(args) -> None:
    rule = _rule(args)
    start = int(args.init) if args.init is not None else None
    ra = residue.build_residue_automaton(rule, args.k, start=start)
    if args.drop_transients:
        ra = residue.drop_transients(ra)
    if args.format == "dot":
        _emit(args, residue.automaton_to_dot(ra))
        return
    if args.format == "json":
        _emit(args, residue.automaton_to_json(ra))
        return
    letters = args.letters or default_letters(rule)
    lines = [f"k = {ra.k}", f"recurrent: {' '.join(map(str, sorted(ra.recurrent)))}",
             f"acceptors: {' '.join(map(str, sorted(ra.acceptors)))}"]
    if args.residues:
        lines.append(f"merger residues: {' '.join(map(str, sorted(residue.merger_residues(rule, args.k, start=start))))}")
    if args.words:
        for m in range(2, args.words + 1):
            ws = residue.accepted_words(ra, m)
            lines.append(f"length {m}: {' '.join(_word(w, letters) for w in ws)}")
    if args.count is not None:
        lines.append(f"accepted words of length {args.count}: {residue.accepted_count(ra, args.count)}")
    if args.fraction:
        lines.append(f"accepted fraction: {residue.accepted_fraction(ra):.4f}")
    _emit(args, "\n".join(lines) + "\n")


def cmd_remainder(args) -> None:
    _emit(args, f"{residue.remainder_via_graph(args.number, args.base, args.k)}\n")


def cmd_frobenius(args) -> None:
    r = numtheory.frobenius_number(args.coins)
    line = str(r.number)
    if not r.all_integers:
        line += f" (gcd {r.gcd}: only multiples of {r.gcd} are reachable)"
    _emit(args, line + "\n")


def cmd_firstgen(args) -> None:
    s = numtheory.first_generation_step(args.a, args.b, args.n)
    _emit(args, ("unreachable" if s is None else str(s)) + "\n")


def cmd_circumference(args) -> None:
    _emit(args, f"{numtheory.tube_circumference(args.a, args.b)}\n")


def cmd_knacci(args) -> None:
    if args.ratio:
        _emit(args, f"{numtheory.knacci_ratio(args.a):.6f}\n")
    else:
        _emit(args, " ".join(map(str, numtheory.knacci_counts(args.a, args.t))) + "\n")


def cmd_branchial(args) -> None:
    rule, g = _build(args)
    layer = args.layer if args.layer is not None else g.steps_built
    if args.distribution:
        d = branchial.layer_value_distribution(g, layer, log=not args.linear, weighted=args.weighted)
        rows = [(repr(lo), repr(hi), repr(f)) for lo, hi, f in zip(d["edges"][:-1], d["edges"][1:], d["fractions"])]
        text = export.rows_to_csv(("bin_lo", "bin_hi", "fraction"), rows)
        _emit(args, text)
        _plot_csv(args, ("bin_lo", "bin_hi", "fraction"), rows)
        return
    if args.tv:
        # distance between the value distributions of consecutive layers
        rows = []
        for t in range(1, g.steps_built):
            a = [g.values[i] for i in g.layer_nodes(t)]
            b = [g.values[i] for i in g.layer_nodes(t + 1)]
            if args.linear:
                xa, xb = np.array(a, dtype=float), np.array(b, dtype=float)
            else:
                if min(a + b) <= 0:
                    raise CLIError("log distances need positive values; use --linear", 1)
                xa, xb = np.log(np.array(a, dtype=float)), np.log(np.array(b, dtype=float))
            rows.append((t, t + 1, repr(branchial.total_variation(xa, xb))))
        text = export.rows_to_csv(("layer", "next_layer", "total_variation"), rows)
        _emit(args, text)
        _plot_csv(args, ("layer", "next_layer", "total_variation"), rows)
        return
    if args.scatter:
        pairs = branchial.branchial_vs_numeric(g, layer, full=args.full, depth=args.depth)
        rows = [(d, repr(x)) for d, x in pairs]
        rho = branchial.rank_correlation(pairs)
        _emit(args, export.rows_to_csv(("branchial_distance", "numeric_distance"), rows))
        print(f"spearman: {rho}", file=sys.stderr)
        _plot_csv(args, ("branchial_distance", "numeric_distance"), rows)
        return
    bg = branchial.branchial_graph(g, layer, args.depth)
    rows = [(format_value(g.values[u]), format_value(g.values[v]), m) for (u, v), m in bg.edges.items()]
    _emit(args, export.rows_to_csv(("u", "v", "multiplicity"), rows))


def cmd_collisions(args) -> None:
    rule = _rule(args)
    init = parse_inits(args.init, rule)[0]
    cols = collisions.find_word_collisions(rule, init, args.depth)
    _emit(args, collisions.collisions_to_json(cols))


def cmd_invert(args) -> None:
    _emit(args, render_rule(invert_affine_rule(_rule(args))) + "\n")


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file mirroring the options")
    common.add_argument("--out", help="write output here instead of stdout")

    graph_opts = argparse.ArgumentParser(add_help=False)
    graph_opts.add_argument("--rule", help='rule text, e.g. "n -> {2n+1, 3n+1}"')
    graph_opts.add_argument("--init", default="1", help="initial values (comma or ';' separated)")
    graph_opts.add_argument("--steps", type=_nonneg, default=10)
    graph_opts.add_argument("--budget", type=_positive, default=None, help="node budget")
    graph_opts.add_argument("--strict", action="store_true", help="exit 3 when the budget truncates the build")

    plot = argparse.ArgumentParser(add_help=False)
    plot.add_argument("--emit-plot-csv", metavar="PATH", help="also write figure data as CSV")

    p = argparse.ArgumentParser(prog="mwn", description="Multiway systems over exact number domains.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, parents, help_):
        sp = sub.add_parser(name, parents=[common, *parents], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("run", cmd_run, [graph_opts, plot], "build a multiway graph and write it")
    sp.add_argument("--format", choices=export.FORMATS)
    sp.add_argument("--prune", action="store_true", help="keep only complete loops")
    sp.add_argument("--reduce", action="store_true", help="transitive reduction")
    sp.add_argument("--coords", choices=("linear", "log-magnitude", "complex-plane", "vector-plane"))

    sp = add("export", cmd_export, [], "convert a graph JSON file")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--format", choices=export.FORMATS)

    sp = add("stats", cmd_stats, [graph_opts, plot], "per-step branching/merging counts")
    sp.add_argument("--weights", action="store_true", help="path weights per node")
    sp.add_argument("--reached", action="store_true", help="sorted reached numbers and statistics")
    sp.add_argument("--reached-below", type=int, metavar="BOUND", help="all reachable values up to BOUND")
    sp.add_argument("--show", type=int, default=25, help="how many reached values to print")

    sp = add("mergers", cmd_mergers, [graph_opts], "list mergers (or branchings)")
    sp.add_argument("--branchings", action="store_true")

    sp = add("merge-search", cmd_merge_search, [], "search for the re-merge of a branch pair")
    sp.add_argument("--rule")
    sp.add_argument("--pair", required=True, help="u,v")
    sp.add_argument("--max-steps", type=_nonneg, default=20)
    sp.add_argument("--value-cap", default=str(DEFAULT_VALUE_CAP), help="integer or 'none'")
    sp.add_argument("--filter", help="'auto' or a modulus k for residue filtering")
    sp.add_argument("--letters")
    sp.add_argument("--json", action="store_true")

    sp = add("loops", cmd_loops, [graph_opts], "branch-word pairs of every merger")
    sp.add_argument("--letters")
    sp.add_argument("--eval", metavar="WORDS", help="evaluate comma-separated branch words from --init")

    sp = add("classify", cmd_classify, [], "structural class of n -> {a n + b, c n + d}")
    for name in "abcd":
        sp.add_argument(name, type=int)
    sp.add_argument("--confirm", action="store_true", help="check grid predictions on a built graph")
    sp.add_argument("--steps", type=_nonneg, default=6)

    sp = add("confluence-probe", cmd_confluence_probe, [graph_opts], "merge-search every branch pair")
    sp.add_argument("--pair-steps", type=_nonneg, default=15)
    sp.add_argument("--value-cap", default=str(DEFAULT_VALUE_CAP))
    sp.add_argument("--max-pairs", type=_positive)
    sp.add_argument("--filter", action="store_true", help="use the residue-filtered engine")

    sp = add("modk", cmd_modk, [], "residue automaton of an affine rule")
    sp.add_argument("--rule")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--init", default="1", help="start value for acceptors")
    sp.add_argument("--words", type=int, help="list accepted words of lengths 2..N")
    sp.add_argument("--count", type=int, metavar="M", help="count accepted words of length M")
    sp.add_argument("--fraction", action="store_true")
    sp.add_argument("--residues", action="store_true")
    sp.add_argument("--drop-transients", action="store_true")
    sp.add_argument("--format", choices=("text", "dot", "json"), default="text")
    sp.add_argument("--letters")

    sp = add("remainder", cmd_remainder, [], "n mod k read off the remainder graph")
    sp.add_argument("number", type=int)
    sp.add_argument("--base", type=int, default=10)
    sp.add_argument("--k", type=int, required=True)

    sp = add("frobenius", cmd_frobenius, [], "Frobenius number of a coin set")
    sp.add_argument("coins", type=int, nargs="+")

    sp = add("firstgen", cmd_firstgen, [], "first step at which {n+a, n+b} reaches n from 0")
    sp.add_argument("a", type=int)
    sp.add_argument("b", type=int)
    sp.add_argument("n", type=int)

    sp = add("circumference", cmd_circumference, [], "tube circumference for {n+a, n+b}")
    sp.add_argument("a", type=int)
    sp.add_argument("b", type=int)

    sp = add("knacci", cmd_knacci, [], "all-ones order-a recurrence")
    sp.add_argument("a", type=int)
    sp.add_argument("t", type=int, nargs="?", default=20)
    sp.add_argument("--ratio", action="store_true")

    sp = add("branchial", cmd_branchial, [graph_opts, plot], "branchial graph and layer distributions")
    sp.add_argument("--layer", type=int)
    sp.add_argument("--depth", type=int, default=1)
    sp.add_argument("--distribution", action="store_true")
    sp.add_argument("--weighted", action="store_true")
    sp.add_argument("--linear", action="store_true", help="raw values instead of logs")
    sp.add_argument("--scatter", action="store_true")
    sp.add_argument("--full", action="store_true", help="all connected pairs, not just edges")
    sp.add_argument("--tv", action="store_true", help="total variation between consecutive layer distributions")

    sp = add("collisions", cmd_collisions, [], "branch words giving equal values")
    sp.add_argument("--rule")
    sp.add_argument("--init", default="1")
    sp.add_argument("--depth", type=int, default=8)

    sp = add("invert", cmd_invert, [], "inverse rule")
    sp.add_argument("--rule")
    return p


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def read_config(path: str) -> dict:
    conf = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError(f"{path}:{n}: expected key = value", 2)
        key, val = (s.strip() for s in line.split("=", 1))
        conf[key.replace("_", "-")] = val
    return conf


def _config_tokens(parser: argparse.ArgumentParser, command: str, conf: dict) -> list:
    sp = parser._subparsers._group_actions[0].choices[command]
    known = {opt: a for a in sp._actions for opt in a.option_strings}
    tokens = []
    for key, val in conf.items():
        opt = "--" + key
        if opt not in known or key == "config":
            raise CLIError(f"config key {key!r} is not an option of {command}", 2)
        action = known[opt]
        if action.nargs == 0:
            if val.lower() in ("1", "true", "yes", "on"):
                tokens.append(opt)
            elif val.lower() not in ("0", "false", "no", "off"):
                raise CLIError(f"config key {key!r} expects true or false", 2)
        else:
            tokens += [opt, val]
    return tokens


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            tokens = _config_tokens(parser, args.command, read_config(args.config))
            idx = argv.index(args.command)
            args = parser.parse_args(argv[: idx + 1] + tokens + argv[idx + 1:])
        args.func(args)
        return 0
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    except DSLSyntaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.text:
            print(f"  {exc.text}\n  {' ' * exc.pos}^", file=sys.stderr)
        return 2
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (RuleError, ValueError, OSError, graph.GraphCycleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit status: 0 success, 1 Distinguished / NotBisimilar / mismatch,
2 Unknown, 3 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .alphabet import project_pi, project_sd, weak_bisim
from .explore import DEFAULT_NODES, Budget, Verdict
from .plays import PlayError, parse_play, play_dot
from .position import Position, PositionError, position_dot
from .process import ProcessError, dump, parse, pretty
from .reduction import (enumerate_tests, fair_equiv_pi, graph_dot, normalize, passes,
                        reachable)
from .sd import (SDError, SDState, bot_d, closed_of, closed_successors, fair_equiv_d,
                 passes_d, semtest_from_pitest, succ)
from .strategy import (Definite, PositionStrategy, Strategy, StrategyError, Table, format_definite,
                       parse_strategy, translate)

OK, DIFFERENT, UNKNOWN, BAD_INPUT = 0, 1, 2, 3
_LABELS = {"tau": "τ", "tick": "♥", "id": "id", "silent": "·"}


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None


def _process(path: str):
    return parse(_read(path))


def _strategy_state(path: str):
    """A tested state from a ``.pi`` or ``.strat`` file."""
    if path.endswith(".strat"):
        s = parse_strategy(_read(path))
        base = Position.of(s.arity)
        if isinstance(s, Definite):
            return SDState(base, {"x": s})
        return PositionStrategy(base, {"x": s})
    return SDState.of(_process(path))


def _expand(d: Definite, depth: int) -> Definite:
    """Unfold translated strategies into tables, ``depth`` levels deep."""
    if depth <= 0:
        return d
    ents = {b: Strategy(s.arity, tuple(_expand(e, depth - 1) for e in s.summands))
            for b, s in d.entries().items()}
    return Table(d.arity, ents)


def _emit(args, data: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _budget(args) -> Budget:
    return Budget(args.nodes, args.depth)


def _fair_status(outcome: str) -> int:
    return {"Distinguished": DIFFERENT, "Unknown": UNKNOWN}.get(outcome, OK)


def cmd_parse(args) -> int:
    tp = _process(args.file)
    data = {"ctx": tp.ctx, "debruijn": dump(tp.proc), "pretty": pretty(tp, with_header=True),
            "definitions": {k: {"params": d.params, "body": dump(d.body)} for k, d in tp.defs.items()}}
    text = f"ctx {tp.ctx}\n{dump(tp.proc)}\n{pretty(tp, with_header=True)}\n"
    _emit(args, data, text)
    return OK


def cmd_reduce(args) -> int:
    s = normalize(_process(args.file))
    states, edges, sat = reachable(s, _budget(args))
    idx = {x: i for i, x in enumerate(states)}
    triples = [(e.source, _LABELS[e.label], e.target) for e in edges]
    if args.format == "dot":
        sys.stdout.write(graph_dot(states, triples, "pi"))
    else:
        data = {"states": [str(x) for x in states], "saturated": sat,
                "edges": [[idx[a], lab, idx[b]] for a, lab, b in triples]}
        text = "".join(f"s{i} = {x}\n" for i, x in enumerate(states))
        text += "".join(f"s{idx[a]} -{lab}-> s{idx[b]}\n" for a, lab, b in triples)
        if not sat:
            text += f"# truncated at {args.nodes} states\n"
        _emit(args, data, text)
    return OK if sat else UNKNOWN


def cmd_translate(args) -> int:
    d = translate(_process(args.file))
    out = format_definite(_expand(d, args.expand))
    _emit(args, {"strategy": out}, out)
    return OK


def cmd_step(args) -> int:
    s = _strategy_state(args.file)
    if not isinstance(s, SDState):
        raise InputError("stepping needs a definite strategy")
    rows = []
    for e in succ(s):
        mv = None if e.move is None else {"kind": str(e.move.kind), "acting": list(e.move.acting),
                                          "fresh": list(e.move.fresh)}
        rows.append({"move": mv, "choices": list(e.choices), "label": e.label, "target": str(e.target)})
    text = "".join(f"{'id' if r['move'] is None else r['move']['kind']} "
                   f"{[] if r['move'] is None else r['move']['acting']} {r['choices']} "
                   f"-{_LABELS[r['label']]}-> {r['target']}\n" for r in rows)
    _emit(args, {"state": str(s), "edges": rows}, text)
    return OK


def cmd_explore(args) -> int:
    s = _strategy_state(args.file)
    budget = _budget(args)
    res = bot_d(s, budget)
    data = res.record(str(s))
    if isinstance(s, SDState):
        c = closed_of(s)
        states, seen, sat = [c], {c}, True
        i = 0
        while i < len(states):
            for t in closed_successors(states[i]):
                if t not in seen:
                    if len(seen) >= budget.nodes:
                        sat = False
                        continue
                    seen.add(t)
                    states.append(t)
            i += 1
        data["reachable"] = len(states)
        data["saturated"] = sat
    text = f"{data['verdict']} explored={data['explored']} bound={budget.nodes}\n"
    if data["witness-path"]:
        text += "witness:\n" + "".join(f"  {w}\n" for w in data["witness-path"])
    _emit(args, data, text)
    return UNKNOWN if res.verdict is Verdict.UNKNOWN else OK


def _fair_report(res, side: str) -> tuple[dict, str]:
    rec = res.record()
    rec["side"] = side
    text = f"{side}: {res.outcome}({res.k}) tests={res.tests_run} unknown={res.unknown}\n"
    if res.test is not None:
        text += f"  test {res.test.describe()} verdicts {[v.value for v in res.verdicts]}\n"
    return rec, text


def cmd_fair_pi(args) -> int:
    p, q = _process(args.p), _process(args.q)
    res = fair_equiv_pi(p, q, args.k, _budget(args))
    rec, text = _fair_report(res, "pi")
    _emit(args, rec, text)
    return _fair_status(res.outcome)


def cmd_fair_sd(args) -> int:
    s1, s2 = _strategy_state(args.p), _strategy_state(args.q)
    res = fair_equiv_d(s1, s2, args.k, _budget(args))
    rec, text = _fair_report(res, "strategies")
    _emit(args, rec, text)
    return _fair_status(res.outcome)


def cmd_adequacy(args) -> int:
    """Compare both sides' verdicts on every test, then the two equivalences."""
    p, q = _process(args.p), _process(args.q)
    if p.ctx != q.ctx:
        raise InputError("processes have different numbers of free channels")
    budget = _budget(args)
    sp, sq = SDState.of(p), SDState.of(q)
    iface = Position(sp.position.channels)
    mismatches, unknown, n = [], 0, 0
    for t in enumerate_tests(p.ctx, args.k):
        st = semtest_from_pitest(iface, t)
        for name, proc, state in (("P", p, sp), ("Q", q, sq)):
            n += 1
            v1 = passes(proc, t, budget).verdict
            v2 = passes_d(state, st, budget).verdict
            if not (v1.exact and v2.exact):
                unknown += 1
            elif v1 is not v2:
                mismatches.append({"process": name, "test": t.describe(), "pi": v1.value, "strategy": v2.value})
    fp = fair_equiv_pi(p, q, args.k, budget)
    fd = fair_equiv_d(sp, sq, args.k, budget)
    agree = fp.outcome == fd.outcome
    data = {"k": args.k, "bound": budget.as_dict(), "checks": n, "unknown": unknown,
            "mismatches": mismatches, "pi": fp.record(), "strategies": fd.record(),
            "agree": agree and not mismatches}
    text = (f"k={args.k} checks={n} unknown={unknown} mismatches={len(mismatches)}\n"
            f"pi: {fp.outcome}({args.k})\nstrategies: {fd.outcome}({args.k})\n")
    for m in mismatches[:10]:
        text += f"  mismatch {m}\n"
    _emit(args, data, text)
    if mismatches or not agree:
        return DIFFERENT
    return UNKNOWN if unknown else OK


def cmd_bisim(args) -> int:
    tp = _process(args.file)
    l1, l2 = project_pi(tp), project_sd(SDState.of(tp))
    res = weak_bisim(l1, l2, _budget(args))
    data = res.record()
    text = f"{res.outcome}" + (f" witness {res.witness}" if res.witness else "") + "\n"
    if args.show:
        data["pi"] = l1.dump(_budget(args)).splitlines()
        data["strategy"] = l2.dump(_budget(args)).splitlines()
        text += "-- process\n" + l1.dump(_budget(args)) + "-- strategy\n" + l2.dump(_budget(args))
    _emit(args, data, text)
    return {"Bisimilar": OK, "NotBisimilar": DIFFERENT}.get(res.outcome, UNKNOWN)


def cmd_render(args) -> int:
    path = args.file
    if path.endswith(".play"):
        sys.stdout.write(play_dot(parse_play(_read(path))))
    elif path.endswith(".pos"):
        from .plays import parse_position
        sys.stdout.write(position_dot(parse_position(_read(path).strip())))
    else:
        s = normalize(_process(path))
        states, edges, _ = reachable(s, _budget(args))
        sys.stdout.write(graph_dot(states, [(e.source, _LABELS[e.label], e.target) for e in edges], "pi"))
    return OK


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(BAD_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _ArgParser(prog="pigames", description=__doc__.splitlines()[0])
    common = _ArgParser(add_help=False)
    common.add_argument("--nodes", type=int, default=DEFAULT_NODES, help="state budget per check")
    common.add_argument("--depth", type=int, default=None, help="optional depth bound")
    common.add_argument("--format", choices=("text", "json", "dot"), default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, files, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        for f in files:
            p.add_argument(f)
        p.set_defaults(fn=fn)
        return p

    add("parse", cmd_parse, ["file"], "echo the de Bruijn form of a .pi file")
    add("reduce", cmd_reduce, ["file"], "dump the reduction graph")
    add("translate", cmd_translate, ["file"], "print the strategy of a process").add_argument(
        "--expand", type=int, default=1, help="table levels to unfold")
    add("step", cmd_step, ["file"], "list S_D successors")
    add("explore", cmd_explore, ["file"], "closed-world reachability and the ⊥ verdict")
    for name, fn, help_ in (
            ("check-fair-pi", cmd_fair_pi, "fair testing of two processes, tests up to size k"),
            ("check-fair-sd", cmd_fair_sd, "fair testing of two strategies (.pi or .strat), tests up to size k"),
            ("check-theorem1", cmd_adequacy, "compare process and strategy verdicts on every test up to size k")):
        add(name, fn, ["p", "q"], help_).add_argument("--k", type=int, default=1)
    add("bisim-a", cmd_bisim, ["file"], "weak bisimilarity of both projections over A").add_argument(
        "--show", action="store_true", help="also dump both LTSs")
    add("render", cmd_render, ["file"], "DOT for a .play, .pos or .pi file")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.nodes <= 0 or (args.depth is not None and args.depth < 0) or getattr(args, "k", 0) < 0:
        print("error: bounds must be positive", file=sys.stderr)
        return BAD_INPUT
    try:
        return args.fn(args)
    except (InputError, ProcessError, PlayError, PositionError, StrategyError, SDError) as e:
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Reduction semantics, the ⊥ predicate and fair testing on processes."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

from .canon import canonical
from .explore import Budget, BotResult, bot_check
from .process import (NIL, Call, Defs, New, Par, Process, ProcessError, Recv, Renaming,
                      Send, Sum, Tick, TypedProcess, dump, localize, pretty, reindex,
                      rename, typecheck, unfold)

UNFOLD_FUEL = 10_000


class ReductionError(ProcessError):
    pass


@dataclass(frozen=True, eq=False)
class PiState:
    """A process up to structural congruence.

    ``comps`` are the parallel guarded sums, each as a key and the vector of
    channels its free indices stand for.  Channels ``1..ctx`` are free;
    ``ctx+1..ctx+nbound`` are restricted.
    """
    ctx: int
    nbound: int
    comps: tuple[tuple[str, tuple[int, ...]], ...]
    procs: dict = field(repr=False)
    defs: Defs = field(repr=False)

    def __eq__(self, other):
        return isinstance(other, PiState) and (self.ctx, self.comps) == (other.ctx, other.comps)

    def __hash__(self):
        return hash((self.ctx, self.comps))

    def components(self) -> Iterator[tuple[Sum, tuple[int, ...]]]:
        for label, attach in self.comps:
            yield self.procs[label], attach

    def to_process(self) -> TypedProcess:
        n = self.ctx + self.nbound
        parts = [reindex(q, attach, len(attach), n) for q, attach in self.components()]
        p: Process = NIL
        if parts:
            p = parts[0]
            for q in parts[1:]:
                p = Par(p, q)
        for _ in range(self.nbound):
            p = New(p)
        return TypedProcess(p, self.ctx, self.defs)

    def __str__(self):
        return pretty(self.to_process())


@dataclass(frozen=True)
class PiEdge:
    source: PiState
    target: PiState
    label: str  # "tau", "tick" or "id"
    redex: tuple = ()


@dataclass(frozen=True)
class PiTest:
    h: Renaming
    r: TypedProcess

    def __post_init__(self):
        if self.h.target != self.r.ctx:
            raise ReductionError("test process is not typed in the target of its renaming")

    def describe(self) -> str:
        return f"h={list(self.h.map)} Δ={self.h.target} R={pretty(self.r)}"


def decompose(items, next_id: int, defs) -> tuple[list[tuple[Sum, tuple[int, ...]]], int]:
    """Split processes into guarded sums over global channels.

    ``items`` holds ``(process, env)`` where ``env[i-1]`` is the global
    channel for local index ``i``.  Restrictions get fresh ids from
    ``next_id`` on.
    """
    out = []
    fuel = UNFOLD_FUEL
    stack = list(reversed(items))
    while stack:
        p, env = stack.pop()
        if isinstance(p, Call):
            fuel -= 1
            if fuel < 0:
                raise ReductionError("unfolding does not reach a prefix (unguarded parallel recursion?)")
            stack.append((unfold(p, defs, len(env)), env))
        elif isinstance(p, Par):
            stack.append((p.right, env))
            stack.append((p.left, env))
        elif isinstance(p, New):
            stack.append((p.body, env + (next_id,)))
            next_id += 1
        elif p.branches:
            q, used = localize(p, len(env))
            out.append((q, tuple(env[u - 1] for u in used)))
    return out, next_id


def _state(ctx: int, sums, defs) -> PiState:
    procs = {}
    agents = []
    bound = set()
    for q, attach in sums:
        label = dump(q)
        procs[label] = q
        agents.append((label, attach))
        bound.update(x for x in attach if x > ctx)
    groups = [[i] for i in range(1, ctx + 1)] + [sorted(bound)]
    (sizes, enc), _ = canonical(groups, agents, keep=ctx)
    return PiState(ctx, sizes[-1] if sizes else 0, enc, procs, defs)


def normalize(p: TypedProcess) -> PiState:
    sums, _ = decompose([(p.proc, tuple(range(1, p.ctx + 1)))], p.ctx + 1, p.defs)
    return _state(p.ctx, sums, p.defs)


def successors(s: PiState) -> list[PiEdge]:
    """All reduction edges out of ``s``, plus its identity edge."""
    comps = list(s.components())
    top = s.ctx + s.nbound + 1
    edges = [PiEdge(s, s, "id")]

    def rest(*skip):
        return [(q, att) for i, (q, att) in enumerate(comps) if i not in skip]

    for i, (q, att) in enumerate(comps):
        for j, (pre, cont) in enumerate(q.branches):
            if isinstance(pre, Tick):
                sums, _ = decompose([(cont, att)], top, s.defs)
                edges.append(PiEdge(s, _state(s.ctx, rest(i) + sums, s.defs), "tick", (i, j)))
    for i, (q, att) in enumerate(comps):
        for j, (pre, cont) in enumerate(q.branches):
            if not isinstance(pre, Send):
                continue
            chan, sent = att[pre.a - 1], att[pre.b - 1]
            for k, (q2, att2) in enumerate(comps):
                if k == i:
                    continue
                for l, (pre2, cont2) in enumerate(q2.branches):
                    if isinstance(pre2, Recv) and att2[pre2.a - 1] == chan:
                        sums, _ = decompose([(cont, att), (cont2, att2 + (sent,))], top, s.defs)
                        tgt = _state(s.ctx, rest(i, k) + sums, s.defs)
                        edges.append(PiEdge(s, tgt, "tau", (i, j, k, l)))
    return edges


def tau_successors(s: PiState) -> list[PiState]:
    return [e.target for e in successors(s) if e.label == "tau"]


def can_tick(s: PiState) -> bool:
    return any(isinstance(pre, Tick) for q, _ in s.components() for pre, _ in q.branches)


@lru_cache(maxsize=200_000)
def _bot_cached(s: PiState, budget: Budget) -> BotResult:
    return bot_check(s, lambda x: x, tau_successors, can_tick, budget)


def bot_pi(s: PiState, budget: Budget = Budget()) -> BotResult:
    return _bot_cached(s, budget)


def _merge_defs(a: Defs, b: Defs) -> Defs:
    out = dict(a)
    for k, v in b.items():
        if k in out and out[k] != v:
            raise ReductionError(f"conflicting definitions for {k!r}")
        out[k] = v
    return Defs(out)


def apply_test(p: TypedProcess, t: PiTest) -> TypedProcess:
    """``P[h] | R`` in the test's context."""
    if t.h.source != p.ctx:
        raise ReductionError(f"test expects context {t.h.source}, process has {p.ctx}")
    comp = Par(rename(p.proc, t.h), t.r.proc)
    return TypedProcess(comp, t.h.target, _merge_defs(p.defs, t.r.defs))


def passes(p: TypedProcess, t: PiTest, budget: Budget = Budget()) -> BotResult:
    return bot_pi(normalize(apply_test(p, t)), budget)


# -- test enumeration -----------------------------------------------------

def _prefixes(ctx: int):
    yield Tick()
    for a in range(1, ctx + 1):
        for b in range(1, ctx + 1):
            yield Send(a, b)
    for a in range(1, ctx + 1):
        yield Recv(a)


def _order(p):
    return (test_size(p), dump(p))


def test_size(p: Process) -> int:
    """Size measure for test processes.

    Leaves ``0`` and ``tick.0`` cost nothing; every other prefix, ``|`` and
    ``new`` costs one, and a sum costs the sum of its branches.
    """
    if isinstance(p, Sum):
        if len(p.branches) == 1 and isinstance(p.branches[0][0], Tick) and p.branches[0][1] == NIL:
            return 0
        return sum(1 + test_size(c) for _, c in p.branches)
    if isinstance(p, Par):
        return 1 + test_size(p.left) + test_size(p.right)
    if isinstance(p, New):
        return 1 + test_size(p.body)
    return 0


TICK0 = Sum(((Tick(), NIL),))


@lru_cache(maxsize=None)
def _guarded(ctx: int, n: int) -> tuple[Sum, ...]:
    """Single-branch prefixed terms of size exactly ``n`` (n >= 1)."""
    out = []
    for pre in _prefixes(ctx):
        inner = ctx + (1 if isinstance(pre, Recv) else 0)
        for cont in generate(inner, n - 1):
            t = Sum(((pre, cont),))
            if test_size(t) == n:
                out.append(t)
    return tuple(out)


@lru_cache(maxsize=None)
def generate(ctx: int, n: int) -> tuple[Process, ...]:
    """Test processes in context ``ctx`` of size exactly ``n``.

    Sums are produced once per set of branches and parallel compositions
    once per unordered pair, since reordering does not change the
    reduction graph.
    """
    if n == 0:
        return (NIL, TICK0)
    out: list[Process] = list(_guarded(ctx, n))
    # sums of at least two branches with sizes adding up to n
    pool = [g for m in range(1, n) for g in _guarded(ctx, m)]
    pool.sort(key=_order)
    for r in range(2, n + 1):
        for combo in combinations(pool, r):
            if sum(test_size(g) for g in combo) == n:
                out.append(Sum(tuple(b for g in combo for b in g.branches)))
    for m in range(0, n):
        for left in generate(ctx, m):
            for right in generate(ctx, n - 1 - m):
                if left == NIL or right == NIL or _order(left) > _order(right):
                    continue
                out.append(Par(left, right))
    for body in generate(ctx + 1, n - 1):
        if ctx + 1 in _free(body, ctx + 1):
            out.append(New(body))
    return tuple(out)


def _free(p, ctx):
    from .process import free_channels
    return set(free_channels(p, ctx))


def test_key(h: tuple[int, ...], delta: int, r: TypedProcess):
    """Identifies tests up to renaming of the test's channels."""
    st = normalize(r)
    agents = list(st.comps) + [("#h", h)]
    bound = list(range(delta + 1, delta + st.nbound + 1))
    return canonical([list(range(1, delta + 1)), bound], agents)[0]


def enumerate_tests(ctx: int, k: int, defs: Defs = Defs()) -> Iterator[PiTest]:
    """All tests ``(h, R)`` with ``|Δ| <= ctx + k`` and ``test_size(R) <= k``.

    Order is by size, then ``Δ``, then ``h`` lexicographically, then the
    generation order of ``R``; tests equal up to renaming the test's own
    channels are produced once.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    seen = set()
    for n in range(0, k + 1):
        for delta in range(0, ctx + k + 1):
            for h in product(range(1, delta + 1), repeat=ctx):
                for r in generate(delta, n):
                    tr = TypedProcess(r, delta, defs)
                    key = test_key(h, delta, tr)
                    if key in seen:
                        continue
                    seen.add(key)
                    yield PiTest(Renaming(ctx, delta, h), tr)


@dataclass
class FairResult:
    outcome: str  # "Distinguished", "AgreeUpTo" or "Unknown"
    k: int
    test: object = None
    verdicts: tuple = ()
    tests_run: int = 0
    unknown: int = 0

    def record(self) -> dict:
        d = {"outcome": self.outcome, "k": self.k, "tests": self.tests_run,
             "unknown": self.unknown}
        if self.test is not None:
            d["test"] = self.test.describe()
            d["verdicts"] = [v.value for v in self.verdicts]
        return d


def fair_equiv_pi(p: TypedProcess, q: TypedProcess, k: int,
                  budget: Budget = Budget()) -> FairResult:
    if p.ctx != q.ctx:
        raise ReductionError("processes live in different contexts")
    n = unknown = 0
    for t in enumerate_tests(p.ctx, k):
        n += 1
        vp = passes(p, t, budget).verdict
        vq = passes(q, t, budget).verdict
        if vp.exact and vq.exact:
            if vp is not vq:
                return FairResult("Distinguished", k, t, (vp, vq), n, unknown)
        else:
            unknown += 1
    return FairResult("Unknown" if unknown else "AgreeUpTo", k, None, (), n, unknown)


def check_typed(p: TypedProcess) -> TypedProcess:
    typecheck(p.proc, p.ctx, p.defs)
    return p


def reachable(s: PiState, budget: Budget = Budget()) -> tuple[list[PiState], list[PiEdge], bool]:
    """Breadth-first reachable part of the reduction graph from ``s``."""
    order = [s]
    seen = {s}
    edges: list[PiEdge] = []
    saturated = True
    i = 0
    while i < len(order):
        x = order[i]
        i += 1
        for e in successors(x):
            edges.append(e)
            if e.target not in seen:
                if len(seen) >= budget.nodes:
                    saturated = False
                    continue
                seen.add(e.target)
                order.append(e.target)
    return order, [e for e in edges if e.target in seen], saturated


def graph_dot(states: Sequence, edges: Iterable[tuple[object, str, object]], name: str = "lts") -> str:
    """DOT for a labelled graph given as ``(source, label, target)`` triples."""
    ids = {s: i for i, s in enumerate(states)}
    lines = [f"digraph {name} {{", "  node [shape=box, fontsize=10];"]
    for s, i in ids.items():
        text = str(s).replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  n{i} [label="{text}"{", penwidth=2" if i == 0 else ""}];')
    for src, label, tgt in edges:
        lines.append(f'  n{ids[src]} -> n{ids[tgt]} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

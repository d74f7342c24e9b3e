"""The alphabet graph A and labelled transition systems over it.

A vertex ``Δ -h-> Γ`` says which of an agent's ``Γ`` local channels the
environment knows, through interface channels ``1..Δ``.  Labels name
interface channels by their least preimage under ``h`` so that two agents
with different private numberings can be compared; a private channel is
written ``None``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Sequence

from .canon import canonical
from .explore import Budget
from .plays import ForkL, ForkR
from .process import (Call, New, Par, Process, Recv, Send, Sum, Tick, TypedProcess, dump,
                      localize, reindex, unfold)
from .reduction import UNFOLD_FUEL, ReductionError, PiState
from .sd import SDState, _intern
from .strategy import Translated


class AlphabetError(ValueError):
    pass


@dataclass(frozen=True)
class AVertex:
    delta: int
    gamma: int
    h: tuple[int, ...]

    def __post_init__(self):
        if len(self.h) != self.delta or any(not 1 <= x <= self.gamma for x in self.h):
            raise AlphabetError(f"h={self.h} is not a map {self.delta} -> {self.gamma}")

    def image(self) -> set[int]:
        return set(self.h)

    def rep(self, chan: int) -> int | None:
        """Least interface channel mapped to ``chan``."""
        for i, x in enumerate(self.h, 1):
            if x == chan:
                return i
        return None

    def kernel(self) -> tuple[int, ...]:
        return tuple(self.rep(x) for x in self.h)

    def abstract(self):
        return (self.delta, self.kernel())

    def __str__(self):
        return "h:[" + ",".join(f"{i}↦{x}" for i, x in enumerate(self.h, 1)) + f"] Δ={self.delta} Γ={self.gamma}"


@dataclass(frozen=True, order=True)
class ALabel:
    kind: str  # heart, nu, in, out, psync, delay
    a: int | None = None
    b: int | None = None
    c: int | None = None

    def __str__(self):
        b = "_" if self.b is None else self.b
        return {"heart": "♥", "nu": "ν", "delay": "δ", "in": f"ι({self.a})",
                "out": f"o({self.a},{b})", "psync": f"o({self.a},{b})⇀ι({self.c})"}[self.kind]


HEART = ALabel("heart")
NUSTEP = ALabel("nu")
DELAY = ALabel("delay")


def Inp(a):
    return ALabel("in", a)


def Outp(a, b):
    return ALabel("out", a, b)


def PartialSync(a, b, c):
    return ALabel("psync", a, b, c)


@dataclass(frozen=True)
class AEdge:
    label: ALabel
    source: AVertex
    target: AVertex

    def __str__(self):
        return f"{self.source} -{self.label}-> {self.target}"


def a_successors(v: AVertex) -> list[AEdge]:
    """Every edge of A out of ``v``."""
    im = sorted(v.image())
    out = [AEdge(HEART, v, v), AEdge(DELAY, v, v),
           AEdge(NUSTEP, v, AVertex(v.delta, v.gamma + 1, v.h))]
    for a in im:
        out.append(AEdge(Inp(v.rep(a)), v, AVertex(v.delta + 1, v.gamma + 1, v.h + (v.gamma + 1,))))
    for a in im:
        for b in range(1, v.gamma + 1):
            out.append(AEdge(Outp(v.rep(a), v.rep(b)), v, AVertex(v.delta + 1, v.gamma, v.h + (b,))))
    for a in im:
        for c in im:
            if a == c:
                continue
            if len(im) < v.gamma:  # some private channel b can be sent
                out.append(AEdge(PartialSync(v.rep(a), None, v.rep(c)), v,
                                 AVertex(v.delta, v.gamma + 1, v.h)))
    return out


def edge_shape(e: AEdge) -> str | None:
    """The rule of A that ``e`` instantiates, or ``None``."""
    s, t, lab = e.source, e.target, e.label
    if lab.kind in ("heart", "delay"):
        return lab.kind if t == s else None
    if lab.kind == "nu":
        return "nu" if (t.delta, t.h, t.gamma) == (s.delta, s.h, s.gamma + 1) else None
    if lab.kind == "in":
        ok = (lab.a is not None and 1 <= lab.a <= s.delta
              and (t.delta, t.gamma) == (s.delta + 1, s.gamma + 1) and t.h == s.h + (s.gamma + 1,))
        return "in" if ok else None
    if lab.kind == "out":
        if lab.a is None or not 1 <= lab.a <= s.delta or t.gamma != s.gamma or t.delta != s.delta + 1:
            return None
        if t.h[:-1] != s.h:
            return None
        b = t.h[-1]
        return "out" if s.rep(b) == lab.b else None
    if lab.kind == "psync":
        ok = (lab.a is not None and lab.c is not None and lab.b is None
              and 1 <= lab.a <= s.delta and 1 <= lab.c <= s.delta
              and s.h[lab.a - 1] != s.h[lab.c - 1]
              and (t.delta, t.h, t.gamma) == (s.delta, s.h, s.gamma + 1))
        return "psync" if ok else None
    return None


# -- LTSs over A ----------------------------------------------------------

class ALTS:
    """A lazily generated LTS whose edges lie over edges of A."""

    def initial(self) -> Hashable:
        raise NotImplementedError

    def vertex(self, s) -> AVertex:
        raise NotImplementedError

    def edges(self, s) -> list[tuple[AEdge, Hashable]]:
        raise NotImplementedError

    def describe(self, s) -> str:
        return str(s)

    def dump(self, budget: Budget = Budget()) -> str:
        """Reachable edges as ``src -label-> tgt`` lines."""
        states, order, _ = explore_lts(self, budget)
        names = {s: f"s{i}" for i, s in enumerate(order)}
        lines = []
        for s in order:
            lines.append(f"{names[s]} = {self.vertex(s)} :: {self.describe(s)}")
        for s in order:
            for e, t in states[s]:
                if t in names:
                    lines.append(f"{names[s]} -{e.label}-> {names[t]}")
        return "\n".join(lines) + "\n"


def explore_lts(l: ALTS, budget: Budget = Budget()):
    """Breadth-first exploration; returns (edges per state, order, saturated)."""
    s0 = l.initial()
    edges: dict = {}
    order = [s0]
    seen = {s0}
    queue = deque([(s0, 0)])
    saturated = True
    while queue:
        s, depth = queue.popleft()
        if budget.depth is not None and depth >= budget.depth:
            saturated = False
            continue
        es = l.edges(s)
        edges[s] = es
        for _, t in es:
            if t not in seen:
                if len(seen) >= budget.nodes:
                    saturated = False
                    continue
                seen.add(t)
                order.append(t)
                queue.append((t, depth + 1))
    return edges, order, saturated


@dataclass(frozen=True, eq=False)
class AgentState:
    """Agents attached to channels, with the interface pinned by ``h``."""
    h: tuple[int, ...]
    comps: tuple[tuple[str, tuple[int, ...]], ...]

    def __eq__(self, other):
        return isinstance(other, AgentState) and (self.h, self.comps) == (other.h, other.comps)

    def __hash__(self):
        return hash((self.h, self.comps))

    @property
    def gamma(self) -> int:
        return max([0, *self.h, *(c for _, att in self.comps for c in att)])

    def vertex(self) -> AVertex:
        return AVertex(len(self.h), self.gamma, self.h)


def _pin(h: Sequence[int], agents: list[tuple[str, tuple[int, ...]]]) -> AgentState:
    chans = sorted(set(h) | {c for _, att in agents for c in att})
    (_, enc), relabel = canonical([chans], agents + [("#h", tuple(h))])
    comps = tuple(x for x in enc if x[0] != "#h")
    return AgentState(tuple(relabel[c] for c in h), comps)


def _rep(h, chan):
    for i, x in enumerate(h, 1):
        if x == chan:
            return i
    return None


# Pi side: parallel components are guarded sums or restrictions that have
# not been opened yet, so that a ν is an observable step.

class PiALTS(ALTS):
    def __init__(self, p: TypedProcess, h: Sequence[int] | None = None):
        self.defs = p.defs
        self.procs: dict[str, Process] = {}
        h = tuple(range(1, p.ctx + 1)) if h is None else tuple(h)
        if any(not 1 <= x <= p.ctx for x in h):
            raise AlphabetError("interface map leaves the process context")
        self._init = self._state(h, self._split([(p.proc, tuple(range(1, p.ctx + 1)))]))

    def _split(self, items):
        out = []
        stack = list(reversed(items))
        fuel = UNFOLD_FUEL
        while stack:
            p, env = stack.pop()
            if isinstance(p, Call):
                fuel -= 1
                if fuel < 0:
                    raise ReductionError("unfolding does not reach a prefix")
                stack.append((unfold(p, self.defs, len(env)), env))
            elif isinstance(p, Par):
                stack.append((p.right, env))
                stack.append((p.left, env))
            elif isinstance(p, New) or p.branches:
                q, used = localize(p, len(env))
                out.append((q, tuple(env[u - 1] for u in used)))
        return out

    def _state(self, h, comps) -> AgentState:
        agents = []
        for q, att in comps:
            k = dump(q)
            self.procs[k] = q
            agents.append((k, att))
        return _pin(h, agents)

    def initial(self):
        return self._init

    def vertex(self, s: AgentState) -> AVertex:
        return s.vertex()

    def describe(self, s: AgentState) -> str:
        return " | ".join(f"{k}{list(att)}" for k, att in s.comps) or "0"

    def edges(self, s: AgentState):
        v = s.vertex()
        top = v.gamma + 1
        comps = [(self.procs[k], att) for k, att in s.comps]
        im = set(s.h)
        out = []

        def go(label, tgt_vertex, h, rest, new):
            out.append((AEdge(label, v, tgt_vertex), self._state(h, rest + self._split(new))))

        def rest(*skip):
            return [c for i, c in enumerate(comps) if i not in skip]

        for i, (q, att) in enumerate(comps):
            if isinstance(q, New):
                go(NUSTEP, AVertex(v.delta, v.gamma + 1, v.h), s.h, rest(i), [(q.body, att + (top,))])
                continue
            for pre, cont in q.branches:
                if isinstance(pre, Tick):
                    go(HEART, v, s.h, rest(i), [(cont, att)])
                elif isinstance(pre, Send) and att[pre.a - 1] in im:
                    b = att[pre.b - 1]
                    h2 = s.h + (b,)
                    go(Outp(_rep(s.h, att[pre.a - 1]), _rep(s.h, b)),
                       AVertex(v.delta + 1, v.gamma, h2), h2, rest(i), [(cont, att)])
                elif isinstance(pre, Recv) and att[pre.a - 1] in im:
                    h2 = s.h + (top,)
                    go(Inp(_rep(s.h, att[pre.a - 1])), AVertex(v.delta + 1, v.gamma + 1, h2), h2,
                       rest(i), [(cont, att + (top,))])
        for i, (q, att) in enumerate(comps):
            if isinstance(q, New):
                continue
            for pre, cont in q.branches:
                if not isinstance(pre, Send):
                    continue
                x, b = att[pre.a - 1], att[pre.b - 1]
                for j, (q2, att2) in enumerate(comps):
                    if j == i or isinstance(q2, New):
                        continue
                    for pre2, cont2 in q2.branches:
                        if not isinstance(pre2, Recv):
                            continue
                        y = att2[pre2.a - 1]
                        if x == y:
                            go(DELAY, v, s.h, rest(i, j), [(cont, att), (cont2, att2 + (b,))])
                        elif x in im and y in im and b not in im:
                            go(PartialSync(_rep(s.h, x), None, _rep(s.h, y)),
                               AVertex(v.delta, v.gamma + 1, v.h), s.h, rest(i, j),
                               [(cont, att), (cont2, att2 + (top,))])
        return out


def project_pi(p: TypedProcess | PiState, iface: AVertex | None = None) -> PiALTS:
    """``Pi^A`` from ``p`` over the interface ``iface`` (identity by default)."""
    if isinstance(p, PiState):
        p = p.to_process()
    if iface is not None:
        if iface.gamma != p.ctx:
            raise AlphabetError(f"interface has Γ={iface.gamma}, process has {p.ctx} channels")
        return PiALTS(p, iface.h)
    return PiALTS(p)


# S_D side: players with definite strategies; forks and synchronisations
# are internal.

class SDALTS(ALTS):
    def __init__(self, s: SDState, h: Sequence[int] | None = None):
        chans = s.position.channels
        h = tuple(chans) if h is None else tuple(h)
        if any(x not in chans for x in h):
            raise AlphabetError("interface map leaves the position")
        self._init = self._state(h, [(s.assign[p.id], p.attach) for p in s.position.players])

    def _state(self, h, players) -> AgentState:
        agents = []
        for d, att in players:
            if d.inert():
                continue
            if isinstance(d, Translated):
                d, used = d.strengthen()
                att = tuple(att[u - 1] for u in used)
            d = _intern(d)
            agents.append((d.key, att))
        return _pin(h, agents)

    def initial(self):
        return self._init

    def vertex(self, s: AgentState) -> AVertex:
        return s.vertex()

    def describe(self, s: AgentState) -> str:
        from .sd import _interned
        return " | ".join(f"{_interned[k]!r}{list(att)}" for k, att in s.comps) or "∅"

    def edges(self, s: AgentState):
        from .sd import _interned
        v = s.vertex()
        top = v.gamma + 1
        ps = [(_interned[k], att) for k, att in s.comps]
        im = set(s.h)
        out = []

        def go(label, tgt_vertex, h, players):
            out.append((AEdge(label, v, tgt_vertex), self._state(h, players)))

        for i, (d, att) in enumerate(ps):
            n = len(att)
            rest = ps[:i] + ps[i + 1:]
            ents = d.entries()
            left, right = ents.get(ForkL(n)), ents.get(ForkR(n))
            if left and right:
                for e1 in left.summands:
                    for e2 in right.summands:
                        go(DELAY, v, s.h, rest + [(e1, att), (e2, att)])
            for b, st in ents.items():
                for e in st.summands:
                    if b.kind == "tick":
                        go(HEART, v, s.h, rest + [(e, att)])
                    elif b.kind == "nu":
                        go(NUSTEP, AVertex(v.delta, v.gamma + 1, v.h), s.h, rest + [(e, att + (top,))])
                    elif b.kind == "in" and att[b.args[1] - 1] in im:
                        h2 = s.h + (top,)
                        go(Inp(_rep(s.h, att[b.args[1] - 1])), AVertex(v.delta + 1, v.gamma + 1, h2),
                           h2, rest + [(e, att + (top,))])
                    elif b.kind == "out" and att[b.args[1] - 1] in im:
                        sent = att[b.args[2] - 1]
                        h2 = s.h + (sent,)
                        go(Outp(_rep(s.h, att[b.args[1] - 1]), _rep(s.h, sent)),
                           AVertex(v.delta + 1, v.gamma, h2), h2, rest + [(e, att)])
        for i, (d, att) in enumerate(ps):
            for b, st in d.entries().items():
                if b.kind != "out":
                    continue
                x, sent = att[b.args[1] - 1], att[b.args[2] - 1]
                for j, (d2, att2) in enumerate(ps):
                    if j == i:
                        continue
                    for b2, st2 in d2.entries().items():
                        if b2.kind != "in":
                            continue
                        y = att2[b2.args[1] - 1]
                        rest = [q for k, q in enumerate(ps) if k not in (i, j)]
                        for e1 in st.summands:
                            for e2 in st2.summands:
                                if x == y:
                                    go(DELAY, v, s.h, rest + [(e1, att), (e2, att2 + (sent,))])
                                elif x in im and y in im and sent not in im:
                                    go(PartialSync(_rep(s.h, x), None, _rep(s.h, y)),
                                       AVertex(v.delta, v.gamma + 1, v.h), s.h,
                                       rest + [(e1, att), (e2, att2 + (top,))])
        return out


def project_sd(s: SDState, iface: AVertex | None = None) -> SDALTS:
    if iface is not None:
        chans = s.position.channels
        if iface.gamma != len(chans):
            raise AlphabetError("interface does not match the position's channels")
        return SDALTS(s, tuple(chans[x - 1] for x in iface.h))
    return SDALTS(s)


# -- weak bisimilarity ----------------------------------------------------

@dataclass
class BisimResult:
    outcome: str  # Bisimilar, NotBisimilar, Unknown
    witness: str | None = None
    states: tuple[int, int] = (0, 0)

    def record(self) -> dict:
        return {"outcome": self.outcome, "witness": self.witness, "states": list(self.states)}


def _weak(edges: dict, order: list) -> dict:
    """Saturate: ``s =δ*=> . -l-> . =δ*=> t`` for visible ``l``, ``s =δ*=> t`` for δ."""
    closure = {}
    for s in order:
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for e, t in edges.get(x, ()):
                if e.label.kind == "delay" and t in edges and t not in seen:
                    seen.add(t)
                    stack.append(t)
        closure[s] = seen
    weak = {}
    for s in order:
        out = {(DELAY, t) for t in closure[s]}
        for x in closure[s]:
            for e, t in edges.get(x, ()):
                if e.label.kind != "delay" and t in edges:
                    for u in closure[t]:
                        out.add((e.label, u))
        weak[s] = out
    return weak


def weak_bisim(l1: ALTS, l2: ALTS, budget: Budget = Budget()) -> BisimResult:
    """Weak bisimilarity with δ silent, by partition refinement."""
    e1, o1, sat1 = explore_lts(l1, budget)
    e2, o2, sat2 = explore_lts(l2, budget)
    if l1.vertex(l1.initial()).abstract() != l2.vertex(l2.initial()).abstract():
        return BisimResult("NotBisimilar", "interface", (len(o1), len(o2)))
    if not (sat1 and sat2):
        return BisimResult("Unknown", None, (len(o1), len(o2)))
    # tag states by side so the two systems can share one partition
    edges = {(1, s): [(e, (1, t)) for e, t in es] for s, es in e1.items()}
    edges.update({(2, s): [(e, (2, t)) for e, t in es] for s, es in e2.items()})
    order = [(1, s) for s in o1] + [(2, s) for s in o2]
    vert = {(1, s): l1.vertex(s).abstract() for s in o1}
    vert.update({(2, s): l2.vertex(s).abstract() for s in o2})
    weak = _weak(edges, order)
    block = {s: vert[s] for s in order}
    while True:
        sig = {s: (block[s], frozenset((lab, block[t]) for lab, t in weak[s])) for s in order}
        ids: dict = {}
        new = {s: ids.setdefault(sig[s], len(ids)) for s in order}
        if len(ids) == len(set(block.values())):
            break
        block = new
    a, b = (1, l1.initial()), (2, l2.initial())
    if block[a] == block[b]:
        return BisimResult("Bisimilar", None, (len(o1), len(o2)))
    sa = {(lab, block[t]) for lab, t in weak[a]}
    sb = {(lab, block[t]) for lab, t in weak[b]}
    diff = sorted({lab for lab, _ in sa ^ sb}, key=lambda lab: (lab.kind == "delay", lab))
    wit = str(diff[0]) if diff else "vertex"
    return BisimResult("NotBisimilar", wit, (len(o1), len(o2)))


# -- complementarity -------------------------------------------------------

_SILENTISH = {"delay", "heart", "nu"}


def _pair(x: ALabel, y: ALabel) -> ALabel | None:
    """Merged closed-world label of two aligned labels, if they complement."""
    if x.kind == "delay" and y.kind in _SILENTISH:
        return HEART if y.kind == "heart" else DELAY
    if y.kind == "delay" and x.kind in _SILENTISH:
        return HEART if x.kind == "heart" else DELAY
    if x.kind == "in" and y.kind == "out" and x.a == y.a:
        return DELAY
    if x.kind == "out" and y.kind == "in" and x.a == y.a:
        return DELAY
    return None


def complement_merge(w1: Sequence[ALabel], w2: Sequence[ALabel]) -> list[ALabel] | None:
    """Align the two sequences, inserting δ's; return the merged ♥/δ word."""
    n, m = len(w1), len(w2)
    best: dict = {(n, m): []}
    for i in range(n, -1, -1):
        for j in range(m, -1, -1):
            if (i, j) == (n, m):
                continue
            cands = []
            if i < n and j < m:
                lab = _pair(w1[i], w2[j])
                if lab is not None and best.get((i + 1, j + 1)) is not None:
                    cands.append([lab] + best[(i + 1, j + 1)])
            if i < n:
                lab = _pair(w1[i], DELAY)
                if lab is not None and best.get((i + 1, j)) is not None:
                    cands.append([lab] + best[(i + 1, j)])
            if j < m:
                lab = _pair(DELAY, w2[j])
                if lab is not None and best.get((i, j + 1)) is not None:
                    cands.append([lab] + best[(i, j + 1)])
            best[(i, j)] = min(cands, key=lambda w: (len(w), w)) if cands else None
    return best[(0, 0)]


def complementary(w1: Sequence[ALabel], w2: Sequence[ALabel]) -> bool:
    return complement_merge(w1, w2) is not None


# -- ν inside sums ---------------------------------------------------------

NU = "nu"


def encode_nu_in_sum(branches: Sequence[tuple[object, Process]], ctx: int) -> Process:
    """Encode a sum that may have ``ν.P`` branches as a process.

    ``branches`` holds ``(prefix, P)`` pairs, where the prefix ``NU`` marks
    a restriction whose body ``P`` lives in ``ctx + 1``.  With ``c`` fresh,
    the result is ``new c.(c!c | (c?.new.P + others))``: the restriction
    branch is reached by an internal step on ``c``.
    """
    if not any(pre == NU for pre, _ in branches):
        return Sum(tuple(branches))
    out = []
    for pre, p in branches:
        if pre == NU:
            # inside: ctx channels, c at ctx+1, received at ctx+2, new at ctx+3
            m = {i: i for i in range(1, ctx + 1)}
            m[ctx + 1] = ctx + 3
            out.append((Recv(ctx + 1), New(reindex(p, m, ctx + 1, ctx + 3))))
        else:
            out.append((pre, _weaken_branch(pre, p, ctx)))
    c = ctx + 1
    return New(Par(Sum(((Send(c, c), Sum(())),)), Sum(tuple(out))))


def _weaken_branch(pre, p, ctx):
    # channels 1..ctx keep their index; c sits at ctx+1
    m = {i: i for i in range(1, ctx + 1)}
    if isinstance(pre, Recv):
        m[ctx + 1] = ctx + 2
        return reindex(p, m, ctx + 1, ctx + 2)
    return reindex(p, m, ctx, ctx + 1)

"""The game transition system S_D, its closed world, ⊥ and semantic tests."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator, Mapping

from .canon import canonical
from .explore import Budget, BotResult, Verdict, bot_check, combine
from .plays import (Fork, ForkL, ForkR, GlobalMove, Nu, SeedKind, Tau, instantiate)
from .position import HorizMap, Player, Position, check_horiz, glue, interface_of
from .process import TypedProcess
from .reduction import FairResult, PiTest, enumerate_tests
from .strategy import (Definite, DefinitePositionStrategy, PositionStrategy, Translated,
                       translate)

CLOSED = ("tau", "nu", "tick", "fork")


class SDError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SDState:
    """A position with a definite strategy for each player."""
    position: Position
    assign: Mapping[str, Definite]

    def __post_init__(self):
        if set(self.assign) != set(self.position.ids()):
            raise SDError("strategy assignment does not cover exactly the players")
        for p in self.position.players:
            d = self.assign[p.id]
            if not isinstance(d, Definite):
                raise SDError(f"player {p.id!r} needs a definite strategy")
            if d.arity != p.arity:
                raise SDError(f"player {p.id!r} has arity {p.arity}, strategy {d.arity}")

    @staticmethod
    def of(p: TypedProcess, pid: str = "x") -> "SDState":
        """``([Γ], ⟦P⟧)``."""
        return SDState(Position.of(p.ctx, pid), {pid: translate(p)})

    @property
    def key(self):
        return self.position.key({k: d.key for k, d in self.assign.items()})

    def __eq__(self, other):
        return isinstance(other, SDState) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def as_position_strategy(self) -> DefinitePositionStrategy:
        return DefinitePositionStrategy(self.position, dict(self.assign))

    def __str__(self):
        ps = "; ".join(f"{p.id}{list(p.attach)}={self.assign[p.id]!r}" for p in self.position.players)
        return f"{{{ps}}}"


@dataclass(frozen=True)
class SDEdge:
    source: SDState
    move: GlobalMove | None
    choices: tuple[int, ...]
    target: SDState
    label: str  # "tick", "id" or "silent"

    def __str__(self):
        mv = "id" if self.move is None else f"{self.move.kind} {list(self.move.acting)}"
        return f"{mv} {list(self.choices)} -{self.label}->"


def _label(kind: SeedKind) -> str:
    return "tick" if kind.kind == "tick" else "silent"


def _moves(s: SDState) -> Iterator[tuple[SeedKind, tuple[str, ...], list[list[tuple[str, Definite]]]]]:
    """Each move with, per acting avatar, its possible (avatar, strategy) picks."""
    pos = s.position
    for p in pos.players:
        d, n = s.assign[p.id], p.arity
        ents = d.entries()
        left, right = ents.get(ForkL(n)), ents.get(ForkR(n))
        if left and right:
            yield Fork(n), (p.id,), [[(p.id + ".1", e) for e in left.summands],
                                     [(p.id + ".2", e) for e in right.summands]]
        for b, st in ents.items():
            if b.kind == "forkl":
                yield b, (p.id,), [[(p.id + ".1", e) for e in st.summands]]
            elif b.kind == "forkr":
                yield b, (p.id,), [[(p.id + ".2", e) for e in st.summands]]
            else:
                yield b, (p.id,), [[(p.id, e) for e in st.summands]]
    for x in pos.players:
        for b, st in s.assign[x.id].entries().items():
            if b.kind != "out":
                continue
            m, c, d = b.args
            for y in pos.players:
                if y.id == x.id:
                    continue
                for b2, st2 in s.assign[y.id].entries().items():
                    if b2.kind == "in" and y.attach[b2.args[1] - 1] == x.attach[c - 1]:
                        n, a = b2.args
                        yield (Tau(n, a, m, c, d), (x.id, y.id),
                               [[(x.id, e) for e in st.summands], [(y.id, e) for e in st2.summands]])


def succ(s: SDState, kinds: Iterable[str] | None = None) -> list[SDEdge]:
    """All edges out of ``s``: one per move and per tuple of defined picks."""
    allowed = None if kinds is None else set(kinds)
    edges = [SDEdge(s, None, (), s, "id")]
    for kind, acting, options in _moves(s):
        if allowed is not None and kind.kind not in allowed:
            continue
        mv = instantiate(kind, s.position, acting)
        for combo in product(*[range(len(o)) for o in options]):
            assign = {k: v for k, v in s.assign.items() if k not in acting}
            for o, i in zip(options, combo):
                pid, d = o[i]
                assign[pid] = d
            tgt = SDState(mv.result, assign)
            edges.append(SDEdge(s, mv, tuple(i + 1 for i in combo), tgt, _label(kind)))
    return edges


def closed_world_succ(s: SDState) -> list[SDEdge]:
    return succ(s, CLOSED)


# -- fast closed-world exploration -----------------------------------------

_interned: dict[str, Definite] = {}


def _intern(d: Definite) -> Definite:
    return _interned.setdefault(d.key, d)


@dataclass(frozen=True, eq=False)
class Closed:
    """A garbage-collected, canonically numbered closed-world state.

    Inert players (all-∅ tables) and unused channels are dropped and
    translated strategies are cut down to the channels they mention; none
    of this affects the closed-world behaviour.
    """
    comps: tuple[tuple[str, tuple[int, ...]], ...]

    def __eq__(self, other):
        return isinstance(other, Closed) and self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def players(self) -> list[tuple[Definite, tuple[int, ...]]]:
        return [(_interned[k], att) for k, att in self.comps]

    def to_state(self) -> SDState:
        chans = {c for _, att in self.comps for c in att}
        ps = tuple(Player(f"p{i}", att) for i, (_, att) in enumerate(self.comps, 1))
        return SDState(Position(tuple(chans), ps), {f"p{i}": _interned[k] for i, (k, _) in enumerate(self.comps, 1)})

    def __str__(self):
        return str(self.to_state())


def _gc(players: Iterable[tuple[Definite, tuple[int, ...]]]) -> Closed:
    agents = []
    for d, att in players:
        if d.inert():
            continue
        if isinstance(d, Translated):
            d, used = d.strengthen()
            att = tuple(att[u - 1] for u in used)
        d = _intern(d)
        agents.append((d.key, att))
    chans = sorted({c for _, att in agents for c in att})
    (_, enc), _ = canonical([chans], agents)
    return Closed(enc)


def closed_of(s: SDState) -> Closed:
    return _gc((s.assign[p.id], p.attach) for p in s.position.players)


def _closed_silent(c: Closed) -> list[Closed]:
    ps = c.players()
    top = max((x for _, att in ps for x in att), default=0) + 1
    out = []
    for i, (d, att) in enumerate(ps):
        n = len(att)
        ents = d.entries()
        rest = ps[:i] + ps[i + 1:]
        nu = ents.get(Nu(n))
        if nu:
            for e in nu.summands:
                out.append(_gc(rest + [(e, att + (top,))]))
        left, right = ents.get(ForkL(n)), ents.get(ForkR(n))
        if left and right:
            for e1 in left.summands:
                for e2 in right.summands:
                    out.append(_gc(rest + [(e1, att), (e2, att)]))
    # index inputs by the channel they listen on
    inputs: dict[int, list] = {}
    for j, (d, att) in enumerate(ps):
        for b, st in d.entries().items():
            if b.kind == "in":
                inputs.setdefault(att[b.args[1] - 1], []).append((j, st))
    for i, (d, att) in enumerate(ps):
        for b, st in d.entries().items():
            if b.kind != "out":
                continue
            _, cc, dd = b.args
            for j, st2 in inputs.get(att[cc - 1], ()):
                if j == i:
                    continue
                att2 = ps[j][1]
                rest = [q for k, q in enumerate(ps) if k not in (i, j)]
                for e1 in st.summands:
                    for e2 in st2.summands:
                        out.append(_gc(rest + [(e1, att), (e2, att2 + (att[dd - 1],))]))
    return out


def _closed_heart(c: Closed) -> bool:
    return any(b.kind == "tick" for d, att in c.players() for b in d.entries())


def closed_successors(c: Closed) -> list[Closed]:
    return _closed_silent(c)


@lru_cache(maxsize=200_000)
def _bot_closed(c: Closed, budget: Budget) -> BotResult:
    return bot_check(c, lambda x: x, _closed_silent, _closed_heart, budget)


def bot_d(s: SDState | PositionStrategy, budget: Budget = Budget()) -> BotResult:
    """⊥ over the closed-world graph.

    A position strategy that is not definite is in ⊥ when all of its
    definite expansions are; with an ∅ player there are none and the
    answer is ``InBot``.
    """
    if isinstance(s, SDState):
        return _bot_closed(closed_of(s), budget)
    results = []
    for ex in s.expansions():
        r = bot_d(SDState(ex.base, ex.assign), budget)
        if r.verdict is Verdict.NOT_IN_BOT:
            return r
        results.append(r)
    v = combine(r.verdict for r in results)
    return BotResult(v, sum(r.explored for r in results), v.exact, [], budget)


# -- tests ----------------------------------------------------------------

@dataclass(frozen=True)
class SemTest:
    h: HorizMap  # from the interface of the tested position
    t: PositionStrategy

    def __post_init__(self):
        check_horiz(self.h)
        if self.h.source.players:
            raise SDError("a test map starts at an interface")
        if self.h.target != self.t.base:
            raise SDError("test strategy lives over another position")

    def describe(self) -> str:
        ps = ", ".join(f"{k}={v!r}" for k, v in self.t.assign.items())
        h = ", ".join(f"{c}↦{self.h.chan_map[c]}" for c in self.h.source.channels)
        return f"h=[{h}] Y={self.t.base} T={{{ps}}}"


def compose_test(s: SDState | PositionStrategy, t: SemTest) -> SDState | PositionStrategy:
    """Glue the tested position and the test along the interface."""
    pos = s.position if isinstance(s, SDState) else s.base
    iface, inc = interface_of(pos)
    if t.h.source != iface:
        raise SDError("test is not sourced at the interface of the tested position")
    w, inj_x, inj_y = glue(pos, inc, t.h)
    assign = {inj_y.player_map[k]: v for k, v in t.t.assign.items()}
    for k, v in s.assign.items():
        assign[inj_x.player_map[k]] = v
    if all(isinstance(v, Definite) for v in assign.values()):
        return SDState(w, assign)
    return PositionStrategy(w, assign)


def semtest_from_pitest(iface: Position, t: PiTest) -> SemTest:
    """The test ``(h, ⟦R⟧)``: one player seeing all of Δ, playing ``⟦R⟧``."""
    chans = iface.channels
    if len(chans) != t.h.source:
        raise SDError(f"interface has {len(chans)} channels, test expects {t.h.source}")
    delta = t.h.target
    y = Position(tuple(range(1, delta + 1)), (Player("t", tuple(range(1, delta + 1))),))
    h = HorizMap(Position(chans), y, {c: t.h.map[i] for i, c in enumerate(chans)}, {})
    return SemTest(h, PositionStrategy(y, {"t": translate(t.r)}))


def passes_d(s: SDState | PositionStrategy, t: SemTest, budget: Budget = Budget()) -> BotResult:
    return bot_d(compose_test(s, t), budget)


def fair_equiv_d(s1: SDState | PositionStrategy, s2: SDState | PositionStrategy, k: int,
                 budget: Budget = Budget()) -> FairResult:
    """Compare the two sides on translated tests of size at most ``k``."""
    i1 = (s1.position if isinstance(s1, SDState) else s1.base).channels
    i2 = (s2.position if isinstance(s2, SDState) else s2.base).channels
    if len(i1) != len(i2):
        raise SDError("interfaces differ in size")
    n = unknown = 0
    for pt in enumerate_tests(len(i1), k):
        n += 1
        r1 = passes_d(s1, semtest_from_pitest(Position(i1), pt), budget).verdict
        r2 = passes_d(s2, semtest_from_pitest(Position(i2), pt), budget).verdict
        if r1.exact and r2.exact:
            if r1 is not r2:
                return FairResult("Distinguished", k, semtest_from_pitest(Position(i1), pt), (r1, r2), n, unknown)
        else:
            unknown += 1
    return FairResult("Unknown" if unknown else "AgreeUpTo", k, None, (), n, unknown)

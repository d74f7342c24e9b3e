"""Syntactic innocent strategies, the translation of processes, and acceptance."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

from .plays import (ForkL, ForkR, Heart, In, Nu, Out, Play, SeedKind, View, basic_seeds, parse_seed,
                    views_of)
from .position import Position
from .process import (Defs, New, Par, Process, Send, Tick, TypedProcess, dump, localize, parse,
                      pretty, unfold)

MAX_FUEL = 1000


class StrategyError(ValueError):
    pass


class Definite:
    """A definite strategy: a total table from basic seeds to strategies.

    Subclasses only list the non-∅ entries; every other basic seed of the
    right arity maps to ∅.
    """
    arity: int

    def entries(self) -> Mapping[SeedKind, "Strategy"]:
        raise NotImplementedError

    @property
    def key(self) -> str:
        raise NotImplementedError

    def entry(self, b: SeedKind) -> "Strategy":
        if not b.basic or b.arity != self.arity:
            raise StrategyError(f"{b} is not a basic seed at arity {self.arity}")
        s = self.entries().get(b)
        return s if s is not None else Strategy.empty(b.final_arity)

    def table(self) -> dict[SeedKind, "Strategy"]:
        """The full table, including ∅ entries."""
        return {b: self.entry(b) for b in basic_seeds(self.arity)}

    def inert(self) -> bool:
        return not self.entries()

    def __eq__(self, other):
        return isinstance(other, Definite) and self.arity == other.arity and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return format_definite(self)


class Table(Definite):
    def __init__(self, arity: int, entries: Mapping[SeedKind, "Strategy | Ref"] = ()):
        self.arity = arity
        ents = dict(entries)
        for b, s in ents.items():
            if not b.basic or b.arity != arity:
                raise StrategyError(f"{b} is not a basic seed at arity {arity}")
            if isinstance(s, Strategy) and s.arity != b.final_arity:
                raise StrategyError(f"entry for {b} has arity {s.arity}, expected {b.final_arity}")
        # drop explicit ∅ entries so that keys are canonical
        self._entries = {b: s for b, s in ents.items()
                         if not (isinstance(s, Strategy) and not s.summands)}
        self._key = None

    def entries(self):
        return {b: resolve(s) for b, s in self._entries.items()}

    def raw_entries(self):
        return dict(self._entries)

    @property
    def key(self) -> str:
        if self._key is None:
            self._key = format_definite(self)
        return self._key


class Translated(Definite):
    """``⟦Γ ⊢ P⟧``, with its table computed on demand."""

    def __init__(self, proc: Process, ctx: int, defs: Defs = Defs()):
        self.proc = unfold(proc, defs, ctx)
        self.arity = ctx
        self.defs = defs
        self._entries = None
        self._key = None

    @property
    def typed(self) -> TypedProcess:
        return TypedProcess(self.proc, self.arity, self.defs)

    def entries(self):
        if self._entries is None:
            self._entries = _translate_entries(self.proc, self.arity, self.defs)
        return self._entries

    @property
    def key(self) -> str:
        if self._key is None:
            self._key = f"P{self.arity}:{dump(self.proc)}{_defs_tag(self.defs)}"
        return self._key

    def strengthen(self) -> tuple["Translated", tuple[int, ...]]:
        """Drop unused channels; returns the new strategy and the kept positions."""
        q, used = localize(self.proc, self.arity)
        if used == tuple(range(1, self.arity + 1)):
            return self, used
        return Translated(q, len(used), self.defs), used


@lru_cache(maxsize=None)
def _defs_tag(defs: Defs) -> str:
    if not defs:
        return ""
    return "|" + ";".join(f"{k}/{d.params}={dump(d.body)}" for k, d in sorted(defs.items()))


def _translate_entries(p: Process, n: int, defs: Defs) -> dict[SeedKind, "Strategy"]:
    if isinstance(p, Par):
        return {ForkL(n): Strategy(n, (Translated(p.left, n, defs),)),
                ForkR(n): Strategy(n, (Translated(p.right, n, defs),))}
    if isinstance(p, New):
        return {Nu(n): Strategy(n + 1, (Translated(p.body, n + 1, defs),))}
    acc: dict[SeedKind, list[Definite]] = {}
    for pre, cont in p.branches:
        if isinstance(pre, Tick):
            b, k = Heart(n), n
        elif isinstance(pre, Send):
            b, k = Out(n, pre.a, pre.b), n
        else:
            b, k = In(n, pre.a), n + 1
        acc.setdefault(b, []).append(Translated(cont, k, defs))
    return {b: Strategy(b.final_arity, tuple(ds)) for b, ds in acc.items()}


def translate(p: TypedProcess) -> Translated:
    return Translated(p.proc, p.ctx, p.defs)


@dataclass(frozen=True)
class Strategy:
    """An ordered sum of definite strategies; the empty sum is ∅."""
    arity: int
    summands: tuple[Definite, ...] = ()

    def __post_init__(self):
        for d in self.summands:
            if d.arity != self.arity:
                raise StrategyError(f"summand of arity {d.arity} in a sum of arity {self.arity}")

    @staticmethod
    def empty(n: int) -> "Strategy":
        return Strategy(n, ())

    @staticmethod
    def of(d: Definite) -> "Strategy":
        return Strategy(d.arity, (d,))

    def __len__(self):
        return len(self.summands)

    def __repr__(self):
        return format_strategy(self)


@dataclass
class Ref:
    """A named reference to a strategy, resolved lazily through ``env``."""
    name: str
    env: dict = field(repr=False, compare=False)

    def resolve(self) -> Strategy:
        if self.name not in self.env:
            raise StrategyError(f"undefined strategy {self.name!r}")
        return resolve(self.env[self.name])


def resolve(s: "Strategy | Ref") -> Strategy:
    fuel = MAX_FUEL
    while isinstance(s, Ref):
        fuel -= 1
        if fuel < 0:
            raise StrategyError("unguarded strategy reference")
        if s.name not in s.env:
            raise StrategyError(f"undefined strategy {s.name!r}")
        s = s.env[s.name]
    return s


def derive(d: Definite, b: SeedKind) -> Strategy:
    """``∂_B d``: the entry of ``d``'s table at ``b``."""
    return d.entry(b)


def pick(s: Strategy, i: int) -> Definite:
    """``s|i`` (1-based); partial."""
    if not 1 <= i <= len(s.summands):
        raise StrategyError(f"no summand {i} in a sum of {len(s.summands)}")
    return s.summands[i - 1]


def ways(s: Strategy | Definite, v: View | Iterable[SeedKind]) -> int:
    """Number of ways ``s`` accepts the view ``v``."""
    seeds = tuple(v.seeds if isinstance(v, View) else v)
    if isinstance(v, View) and v.arity != s.arity:
        raise StrategyError(f"view of arity {v.arity} for strategy of arity {s.arity}")
    return _ways(s, seeds)


def _ways(s, seeds) -> int:
    if isinstance(s, Definite):
        if not seeds:
            return 1
        return _ways(s.entry(seeds[0]), seeds[1:])
    return sum(_ways(d, seeds) for d in s.summands)


accepts_view = ways


@dataclass(frozen=True)
class PositionStrategy:
    base: Position
    assign: Mapping[str, Strategy | Definite]

    def __post_init__(self):
        if set(self.assign) != set(self.base.ids()):
            raise StrategyError("strategy assignment does not cover exactly the players")
        for p in self.base.players:
            if self.assign[p.id].arity != p.arity:
                raise StrategyError(f"player {p.id!r} has arity {p.arity}, strategy {self.assign[p.id].arity}")

    def __hash__(self):
        return hash((self.base, tuple(sorted((k, str(v)) for k, v in self.assign.items()))))

    def expansions(self) -> Iterable["DefinitePositionStrategy"]:
        """Every way of picking one summand per player."""
        ids = self.base.ids()
        choices = []
        for pid in ids:
            s = self.assign[pid]
            choices.append((s,) if isinstance(s, Definite) else s.summands)

        def go(i, acc):
            if i == len(ids):
                yield DefinitePositionStrategy(self.base, dict(zip(ids, acc)))
                return
            for d in choices[i]:
                yield from go(i + 1, acc + (d,))

        yield from go(0, ())


@dataclass(frozen=True)
class DefinitePositionStrategy(PositionStrategy):
    assign: Mapping[str, Definite]

    def __post_init__(self):
        super().__post_init__()
        for k, d in self.assign.items():
            if not isinstance(d, Definite):
                raise StrategyError(f"player {k!r} needs a definite strategy")


def accepts_play(ps: PositionStrategy, p: Play) -> bool:
    if p.initial != ps.base:
        raise StrategyError("play does not start at the strategy's position")
    for pl in ps.base.players:
        s = ps.assign[pl.id]
        for v in views_of(p, pl.id):
            if ways(s, v) == 0:
                return False
    return True


# -- text format ----------------------------------------------------------

def format_strategy(s: Strategy | Ref) -> str:
    if isinstance(s, Ref):
        return f"(ref {s.name})"
    return "(+" + "".join(" " + format_definite(d) for d in s.summands) + ")"


def format_definite(d: Definite) -> str:
    if isinstance(d, Translated):
        text = pretty(d.typed, with_header=True).replace("\\", "\\\\").replace('"', '\\"')
        return f'(proc {d.arity} "{text}")'
    ents = d.raw_entries() if isinstance(d, Table) else d.entries()
    order = {b: i for i, b in enumerate(basic_seeds(d.arity))}
    body = "".join(f" ({b} {format_strategy(s)})" for b, s in sorted(ents.items(), key=lambda e: order[e[0]]))
    return f"<{d.arity}{body}>"


_TOK = re.compile(r'\s*(?:(;[^\n]*)|([a-z]+\([\d,\s]*\))|(\(\+|\(ref|\(proc|\(define|\(|\)|<|>)|("(?:[^"\\]|\\.)*")|([^\s()<>"]+))')


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m or m.end() == pos:
            raise StrategyError(f"unexpected character at offset {pos}")
        pos = m.end()
        if m.group(1):
            continue
        out.append(next(g for g in m.groups()[1:] if g is not None))
    return out


class _Reader:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0
        self.env: dict = {}

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, want=None):
        t = self.peek()
        if t is None or (want is not None and t != want):
            raise StrategyError(f"expected {want or 'token'}, found {t!r}")
        self.i += 1
        return t

    def strategy(self, arity: int | None):
        t = self.peek()
        if t == "(ref":
            self.take()
            name = self.take()
            self.take(")")
            return Ref(name, self.env)
        self.take("(+")
        ds = []
        while self.peek() != ")":
            ds.append(self.definite())
        self.take(")")
        if arity is None:
            if not ds:
                raise StrategyError("cannot infer the arity of an empty top-level sum")
            arity = ds[0].arity
        return Strategy(arity, tuple(ds))

    def definite(self) -> Definite:
        t = self.peek()
        if t == "(proc":
            self.take()
            n = int(self.take())
            lit = self.take()
            if not lit.startswith('"'):
                raise StrategyError("expected a quoted process")
            text = re.sub(r'\\(.)', r'\1', lit[1:-1])
            tp = parse(text)
            if tp.ctx != n:
                raise StrategyError(f"process has {tp.ctx} channels, expected {n}")
            self.take(")")
            return translate(tp)
        self.take("<")
        n = int(self.take())
        ents = {}
        while self.peek() == "(":
            self.take("(")
            b = parse_seed(self.take())
            if not b.basic or b.arity != n:
                raise StrategyError(f"{b} is not a basic seed at arity {n}")
            ents[b] = self.strategy(b.final_arity)
            self.take(")")
        self.take(">")
        return Table(n, ents)

    def top(self):
        while self.peek() == "(define":
            self.take()
            name = self.take()
            self.env[name] = self.strategy(None)
            self.take(")")
        if self.peek() is None:
            raise StrategyError("no strategy given")
        if self.peek() in ("(+", "(ref"):
            s = resolve(self.strategy(None))
        else:
            s = self.definite()
        if self.peek() is not None:
            raise StrategyError(f"trailing input {self.peek()!r}")
        return s


def parse_strategy(text: str) -> Strategy | Definite:
    """Read a ``.strat`` text: optional ``(define NAME S)`` forms, then one strategy."""
    return _Reader(text).top()


def empty_table(n: int) -> Table:
    return Table(n, {})

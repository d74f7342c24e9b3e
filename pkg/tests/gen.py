"""Hypothesis generators shared by the test modules."""
from __future__ import annotations

from hypothesis import strategies as st

from pigames.plays import (Fork, ForkL, ForkR, Heart, In, Nu, Out, Play, Tau, instantiate)
from pigames.position import Player, Position
from pigames.process import NIL, New, Par, Recv, Send, Sum, Tick, TypedProcess


def prefixes(ctx: int):
    opts = [st.just(Tick())]
    if ctx:
        ch = st.integers(1, ctx)
        opts.append(st.builds(Send, ch, ch))
        opts.append(st.builds(Recv, ch))
    return st.one_of(opts)


@st.composite
def procs(draw, ctx: int, depth: int = 3):
    if depth <= 0:
        return draw(st.sampled_from([NIL, Sum(((Tick(), NIL),))]))
    kind = draw(st.sampled_from(["nil", "sum", "sum", "par", "new"]))
    if kind == "nil":
        return NIL
    if kind == "par":
        return Par(draw(procs(ctx, depth - 1)), draw(procs(ctx, depth - 1)))
    if kind == "new":
        return New(draw(procs(ctx + 1, depth - 1)))
    branches = []
    for _ in range(draw(st.integers(1, 2))):
        pre = draw(prefixes(ctx))
        inner = ctx + (1 if isinstance(pre, Recv) else 0)
        branches.append((pre, draw(procs(inner, depth - 1))))
    return Sum(tuple(branches))


@st.composite
def typed(draw, max_ctx: int = 2, depth: int = 3):
    ctx = draw(st.integers(0, max_ctx))
    return TypedProcess(draw(procs(ctx, depth)), ctx)


@st.composite
def positions(draw, max_players: int = 3, max_chans: int = 4, max_arity: int = 3):
    nch = draw(st.integers(1, max_chans))
    players = []
    for i in range(draw(st.integers(1, max_players))):
        ar = draw(st.integers(1, max_arity))
        att = tuple(draw(st.lists(st.integers(1, nch), min_size=ar, max_size=ar)))
        players.append(Player(f"p{i}", att))
    return Position(tuple(range(1, nch + 1)), tuple(players))


def applicable(x: Position):
    """Every move that can be played in ``x``."""
    out = []
    for p in x.players:
        n = p.arity
        out += [(Fork(n), (p.id,)), (ForkL(n), (p.id,)), (ForkR(n), (p.id,)),
                (Heart(n), (p.id,)), (Nu(n), (p.id,))]
        out += [(In(n, a), (p.id,)) for a in range(1, n + 1)]
        out += [(Out(n, a, b), (p.id,)) for a in range(1, n + 1) for b in range(1, n + 1)]
    for s in x.players:
        for r in x.players:
            if s.id == r.id:
                continue
            for c in range(1, s.arity + 1):
                for a in range(1, r.arity + 1):
                    if s.attach[c - 1] == r.attach[a - 1]:
                        for d in range(1, s.arity + 1):
                            out.append((Tau(r.arity, a, s.arity, c, d), (s.id, r.id)))
    return out


@st.composite
def plays(draw, max_len: int = 3, max_players: int = 3):
    x = draw(positions(max_players=max_players))
    p = Play(x)
    for _ in range(draw(st.integers(0, max_len))):
        moves = applicable(p.final)
        kind, acting = draw(st.sampled_from(moves))
        p = Play(p.initial, p.steps + (instantiate(kind, p.final, acting),))
    return p

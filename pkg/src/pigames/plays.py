"""Seeds, global moves, plays, restriction and views."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .position import (HorizMap, Player, Position, PositionError, check_horiz, glue)

BASIC = ("forkl", "forkr", "tick", "nu", "in", "out")
KINDS = ("fork",) + BASIC + ("tau",)
# parameter count per kind
_NARGS = {"fork": 1, "forkl": 1, "forkr": 1, "tick": 1, "nu": 1, "in": 2, "out": 3, "tau": 5}


class PlayError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SeedKind:
    """A seed shape such as ``in(2,1)`` or ``tau(1,1,3,2,3)``.

    For ``tau(n, a, m, c, d)`` the sender has arity ``m`` and sends its
    channel ``d`` on its channel ``c``; the receiver has arity ``n`` and
    receives on its channel ``a``.
    """
    kind: str
    args: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in _NARGS:
            raise PlayError(f"unknown seed kind {self.kind!r}")
        if len(self.args) != _NARGS[self.kind]:
            raise PlayError(f"{self.kind} takes {_NARGS[self.kind]} parameters")
        if any(x < 0 for x in self.args):
            raise PlayError("negative seed parameter")
        a = self.args
        if self.kind == "in" and not 1 <= a[1] <= a[0]:
            raise PlayError(f"channel {a[1]} out of range for arity {a[0]}")
        if self.kind == "out" and not (1 <= a[1] <= a[0] and 1 <= a[2] <= a[0]):
            raise PlayError(f"channels {a[1:]} out of range for arity {a[0]}")
        if self.kind == "tau":
            n, ra, m, c, d = a
            if not (1 <= ra <= n and 1 <= c <= m and 1 <= d <= m):
                raise PlayError(f"tau parameters out of range: {a}")

    @property
    def basic(self) -> bool:
        return self.kind in BASIC

    @property
    def arity(self) -> int:
        """Arity of the acting player (the sender for ``tau``)."""
        return self.args[2] if self.kind == "tau" else self.args[0]

    @property
    def final_arity(self) -> int:
        return self.args[0] + (1 if self.kind in ("in", "nu") else 0)

    def __str__(self):
        return f"{self.kind}({','.join(map(str, self.args))})"


def Fork(n):
    return SeedKind("fork", (n,))


def ForkL(n):
    return SeedKind("forkl", (n,))


def ForkR(n):
    return SeedKind("forkr", (n,))


def Heart(n):
    return SeedKind("tick", (n,))


def Nu(n):
    return SeedKind("nu", (n,))


def In(n, a):
    return SeedKind("in", (n, a))


def Out(n, a, b):
    return SeedKind("out", (n, a, b))


def Tau(n, a, m, c, d):
    return SeedKind("tau", (n, a, m, c, d))


def basic_seeds(n: int) -> list[SeedKind]:
    """Basic seeds at arity n in canonical order."""
    out = [ForkL(n), ForkR(n), Heart(n), Nu(n)]
    out += [In(n, a) for a in range(1, n + 1)]
    out += [Out(n, a, b) for a in range(1, n + 1) for b in range(1, n + 1)]
    return out


_SEED_RE = re.compile(r"\s*([a-z]+)\s*\(([\d\s,]*)\)\s*$")


def parse_seed(text: str) -> SeedKind:
    m = _SEED_RE.match(text)
    if not m:
        raise PlayError(f"malformed seed {text!r}")
    args = tuple(int(x) for x in m.group(2).replace(" ", "").split(",") if x)
    return SeedKind(m.group(1), args)


@dataclass(frozen=True)
class SeedCospan:
    kind: SeedKind
    initial: Position
    final: Position
    avatar: Mapping[str, str]  # final player -> initial player it continues
    fresh: tuple[int, ...]

    def __hash__(self):
        return hash(self.kind)


def seed(kind: SeedKind) -> SeedCospan:
    k, a = kind.kind, kind.args
    if k == "tau":
        n, ra, m, c, d = a
        sender = tuple(range(1, m + 1))
        others = iter(range(m + 1, m + n))
        recv = tuple(c if i == ra else next(others) for i in range(1, n + 1))
        init = Position(tuple(range(1, m + n)), (Player("x", sender), Player("y", recv)))
        fin = Position(init.channels, (Player("x", sender), Player("y", recv + (d,))))
        return SeedCospan(kind, init, fin, {"x": "x", "y": "y"}, ())
    n = a[0]
    init = Position.of(n)
    chans = tuple(range(1, n + 1))
    if k in ("in", "nu"):
        fin = Position.of(n + 1)
        return SeedCospan(kind, init, fin, {"x": "x"}, (n + 1,))
    if k == "fork":
        fin = Position(chans, (Player("x.1", chans), Player("x.2", chans)))
        return SeedCospan(kind, init, fin, {"x.1": "x", "x.2": "x"}, ())
    if k in ("forkl", "forkr"):
        pid = "x.1" if k == "forkl" else "x.2"
        return SeedCospan(kind, init, Position(chans, (Player(pid, chans),)), {pid: "x"}, ())
    return SeedCospan(kind, init, init, {"x": "x"}, ())


@dataclass(frozen=True)
class GlobalMove:
    kind: SeedKind
    base: Position
    acting: tuple[str, ...]
    result: Position
    avatar: Mapping[str, str]  # result player -> base player
    fresh: tuple[int, ...]

    def __hash__(self):
        return hash((self.kind, self.base, self.acting, self.result))

    def __eq__(self, other):
        return (isinstance(other, GlobalMove) and self.kind == other.kind
                and self.base == other.base and self.acting == other.acting
                and self.result == other.result and dict(self.avatar) == dict(other.avatar))

    @property
    def spectators(self) -> tuple[str, ...]:
        return tuple(p for p in self.base.ids() if p not in self.acting)

    def produced(self) -> tuple[str, ...]:
        return tuple(q for q, p in self.avatar.items() if p in self.acting)

    def tracking(self) -> HorizMap:
        """Spectators and channels carried from base to result."""
        spec = Position(self.base.channels, tuple(self.base.player(p) for p in self.spectators))
        return HorizMap(spec, self.result, {c: c for c in spec.channels},
                        {p: p for p in self.spectators})

    def __str__(self):
        return f"move({self.kind}, [{', '.join(self.acting)}], [{', '.join(map(str, self.fresh))}])"


def _avatar_id(base_id: str, seed_id: str) -> str:
    return base_id + seed_id[1:]


def instantiate(kind: SeedKind, base: Position, acting: Sequence[str]) -> GlobalMove:
    """Glue the seed into ``base`` with its initial players at ``acting``."""
    sd = seed(kind)
    roles = sd.initial.ids()
    acting = tuple(acting)
    if len(acting) != len(roles) or len(set(acting)) != len(acting):
        raise PlayError(f"{kind} needs {len(roles)} distinct acting players")
    # where the seed's channels land in base
    cmap: dict[int, int] = {}
    for role, pid in zip(roles, acting):
        sp, bp = sd.initial.player(role), base.player(pid)
        if sp.arity != bp.arity:
            raise PlayError(f"{kind}: player {pid!r} has arity {bp.arity}, expected {sp.arity}")
        for sc, bc in zip(sp.attach, bp.attach):
            if cmap.setdefault(sc, bc) != bc:
                raise PlayError(f"{kind}: carrier channels of {acting} differ")
    spectators = Position(base.channels, tuple(p for p in base.players if p.id not in acting))
    names = dict(zip(roles, acting))
    # the seed's final players are named after the players they continue
    rename = {q.id: _avatar_id(names[sd.avatar[q.id]], q.id) for q in sd.final.players}
    fin = Position(sd.final.channels, tuple(Player(rename[q.id], q.attach) for q in sd.final.players))
    iface = Position(sd.initial.channels)
    i = HorizMap(iface, fin, {c: c for c in iface.channels}, {})
    f = HorizMap(iface, spectators, cmap, {})
    glued, inj_x, _ = glue(fin, i, f)
    new_id = {q.id: inj_x.player_map[rename[q.id]] for q in sd.final.players}
    # keep the base's player order, with avatars in place of acting players
    players = []
    for p in base.players:
        if p.id in acting:
            role = roles[acting.index(p.id)]
            players += [glued.player(new_id[q.id]) for q in sd.final.players if sd.avatar[q.id] == role]
        else:
            players.append(p)
    result = Position(glued.channels, tuple(players))
    avatar = {p.id: p.id for p in spectators.players}
    for q in sd.final.players:
        avatar[new_id[q.id]] = names[sd.avatar[q.id]]
    fresh = tuple(inj_x.chan_map[c] for c in sd.fresh)
    return GlobalMove(kind, base, acting, result, avatar, fresh)


@dataclass(frozen=True)
class Play:
    initial: Position
    steps: tuple[GlobalMove, ...] = ()

    def __post_init__(self):
        cur = self.initial
        for s in self.steps:
            if s.base != cur:
                raise PlayError("steps do not compose")
            cur = s.result

    @property
    def final(self) -> Position:
        return self.steps[-1].result if self.steps else self.initial

    def __len__(self):
        return len(self.steps)

    def then(self, kind: SeedKind, *acting: str) -> "Play":
        return Play(self.initial, self.steps + (instantiate(kind, self.final, acting),))

    def moves(self) -> tuple[tuple[SeedKind, tuple[str, ...]], ...]:
        return tuple((s.kind, s.acting) for s in self.steps)

    def key(self):
        return (self.initial, self.moves())

    def __str__(self):
        return format_play(self)


def play(initial: Position, moves: Iterable[tuple[SeedKind, Sequence[str]]]) -> Play:
    p = Play(initial)
    for kind, acting in moves:
        p = p.then(kind, *acting)
    return p


def compose(p: Play, q: Play) -> Play:
    if q.initial != p.final:
        raise PlayError("plays do not share a boundary")
    return Play(p.initial, p.steps + q.steps)


# -- restriction ----------------------------------------------------------

@dataclass(frozen=True)
class Restriction:
    play: Play
    maps: tuple[HorizMap, ...]  # embedding of each restricted stage
    origin: tuple[int, ...]  # index of the original step behind each emitted step


def restrict(p: Play, r: HorizMap) -> Restriction:
    """Restrict ``p`` along ``r: S -> p.initial``.

    Moves by untracked players are dropped.  A synchronisation whose two
    parties are tracked stays a synchronisation only if its carrier channel
    is already shared in the restricted position; otherwise it splits into
    an output followed by an input on a fresh channel.  A synchronisation
    with one tracked party becomes that party's output or input.
    """
    check_horiz(r)
    if r.target != p.initial:
        raise PlayError("restriction map does not land in the play's initial position")
    cur = r.source
    chan = dict(r.chan_map)  # restricted channel -> current channel
    back = {v: k for k, v in r.player_map.items()}  # current player -> restricted player
    steps: list[GlobalMove] = []
    maps = [r]
    origin: list[int] = []

    def emit(kind, acting, idx):
        nonlocal cur
        mv = instantiate(kind, cur, acting)
        steps.append(mv)
        origin.append(idx)
        cur = mv.result
        return mv

    for idx, mv in enumerate(p.steps):
        kind = mv.kind
        tracked = [back.get(a) for a in mv.acting]
        if kind.kind == "tau":
            n, a, m, c, d = kind.args
            xs, ys = tracked
            sx, sy = mv.acting
            sent = mv.base.player(sx).attach[d - 1]
            if xs is not None and ys is not None and \
                    cur.player(xs).attach[c - 1] == cur.player(ys).attach[a - 1]:
                emit(kind, (xs, ys), idx)
            else:
                if xs is not None:
                    emit(Out(m, c, d), (xs,), idx)
                if ys is not None:
                    new = emit(In(n, a), (ys,), idx)
                    chan[new.fresh[0]] = sent
        elif tracked[0] is not None:
            new = emit(kind, tracked, idx)
            for rc, bc in zip(new.fresh, mv.fresh):
                chan[rc] = bc
        # carry player tracking to the avatars
        nb = {}
        for q, pq in mv.avatar.items():
            if pq in back:
                rp = back[pq]
                nb[q] = rp + q[len(pq):] if pq in mv.acting else rp
        back = nb
        fwd = {v: k for k, v in back.items()}
        maps.append(HorizMap(cur, mv.result, dict(chan), fwd))
    return Restriction(Play(r.source, tuple(steps)), tuple(maps), tuple(origin))


# -- independent moves ----------------------------------------------------

def _depends(a: GlobalMove, b: GlobalMove) -> bool:
    touched = set(a.acting) | set(a.produced())
    return bool(touched & set(b.acting))


def normalize_play(p: Play) -> Play:
    """Least representative under swapping adjacent independent moves."""
    n = len(p.steps)
    preds = [{i for i in range(j) if _depends(p.steps[i], p.steps[j])} for j in range(n)]
    # transitively close, so dependencies survive across reorderings
    for j in range(n):
        for i in list(preds[j]):
            preds[j] |= preds[i]
    done: set[int] = set()
    order = []
    while len(order) < n:
        ready = [j for j in range(n) if j not in done and preds[j] <= done]
        j = min(ready, key=lambda j: (str(p.steps[j].kind), p.steps[j].acting, j))
        done.add(j)
        order.append(j)
    return play(p.initial, [(p.steps[j].kind, p.steps[j].acting) for j in order])


def equivalent_plays(p: Play, q: Play) -> bool:
    return normalize_play(p).key() == normalize_play(q).key()


# -- views ----------------------------------------------------------------

@dataclass(frozen=True, order=True)
class View:
    arity: int
    seeds: tuple[SeedKind, ...] = ()

    def __len__(self):
        return len(self.seeds)

    def prefixes(self) -> list["View"]:
        return [View(self.arity, self.seeds[:i]) for i in range(len(self.seeds) + 1)]

    def to_play(self, pid: str = "x") -> Play:
        p = Play(Position.of(self.arity, pid))
        for s in self.seeds:
            p = p.then(s, p.final.players[0].id)
        return p

    def __str__(self):
        return f"[{self.arity}]" + "".join(f" {s}" for s in self.seeds)


def views_of(p: Play, player: str) -> set[View]:
    """All views of ``player``: its avatar chains, one per choice of fork branch."""
    x = p.initial.player(player)
    single = Position.of(x.arity, player)
    r = HorizMap(single, p.initial, dict(zip(single.players[0].attach, x.attach)), {player: player})
    rp = restrict(p, r).play
    out: set[View] = set()

    def walk(i: int, who: str, seeds: tuple[SeedKind, ...]):
        out.add(View(x.arity, seeds))
        for j in range(i, len(rp.steps)):
            mv = rp.steps[j]
            if who not in mv.acting:
                continue
            k = mv.kind
            if k.kind == "fork":
                n = k.args[0]
                walk(j + 1, who + ".1", seeds + (ForkL(n),))
                walk(j + 1, who + ".2", seeds + (ForkR(n),))
                return
            if k.kind == "tau":
                n, a, m, c, d = k.args
                step = Out(m, c, d) if mv.acting[0] == who else In(n, a)
            else:
                step = k
            seeds = seeds + (step,)
            out.add(View(x.arity, seeds))
            if k.kind in ("forkl", "forkr"):
                who = who + (".1" if k.kind == "forkl" else ".2")

    walk(0, player, ())
    return out


# -- text and DOT ---------------------------------------------------------

def format_play(p: Play) -> str:
    lines = ["position " + str(p.initial)]
    lines += [str(s) for s in p.steps]
    return "\n".join(lines) + "\n"


_POS_PLAYER = re.compile(r"^\s*(\S+)((?:\s+\d+)*)\s*$")
_MOVE = re.compile(r"^\s*move\(\s*([a-z]+\([\d,\s]*\))\s*,\s*\[([^\]]*)\]\s*,\s*\[([^\]]*)\]\s*\)\s*$")


def parse_position(text: str) -> Position:
    parts = [s.strip() for s in text.split(";")]
    if not parts or not parts[0].startswith("channels"):
        raise PlayError("position must start with 'channels'")
    chans = [int(c) for c in parts[0].split()[1:]]
    players = []
    for s in parts[1:]:
        if not s:
            continue
        m = _POS_PLAYER.match(s)
        if not m:
            raise PlayError(f"malformed player {s!r}")
        players.append(Player(m.group(1), tuple(int(c) for c in m.group(2).split())))
    try:
        return Position(tuple(chans), tuple(players))
    except PositionError as e:
        raise PlayError(str(e)) from None


def parse_play(text: str) -> Play:
    """Inverse of ``format_play``; ``#`` starts a comment."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("position "):
        raise PlayError("a play starts with a 'position' line")
    p = Play(parse_position(lines[0][len("position "):]))
    for n, ln in enumerate(lines[1:], 2):
        m = _MOVE.match(ln)
        if not m:
            raise PlayError(f"line {n}: malformed move {ln!r}")
        kind = parse_seed(m.group(1))
        acting = [s.strip() for s in m.group(2).split(",") if s.strip()]
        try:
            p = p.then(kind, *acting)
        except (PositionError, PlayError) as e:
            raise PlayError(f"line {n}: {e}") from None
        fresh = [int(s) for s in m.group(3).split(",") if s.strip()]
        if fresh and tuple(fresh) != p.steps[-1].fresh:
            raise PlayError(f"line {n}: fresh channels {fresh} do not match {list(p.steps[-1].fresh)}")
    return p


def play_dot(p: Play, name: str = "play") -> str:
    """String-diagram rendering: one cluster per stage, moves as boxes.

    Channels are circles and players are points, as in position drawings;
    dashed edges link each player to its avatars in the next stage.
    """
    lines = [f"digraph {name} {{", "  rankdir=TB;", "  node [fontsize=10];", "  edge [arrowhead=none];"]
    stages = [p.initial] + [s.result for s in p.steps]
    for k, x in enumerate(stages):
        lines.append(f"  subgraph cluster_{k} {{")
        lines.append(f'    label="X{k}";')
        for c in x.channels:
            lines.append(f'    s{k}c{c} [shape=circle, label="{c}"];')
        for pl in x.players:
            lines.append(f'    "s{k}_{pl.id}" [shape=point, width=0.15, xlabel="{pl.id}"];')
            for i, c in enumerate(pl.attach, 1):
                lines.append(f'    "s{k}_{pl.id}" -> s{k}c{c} [label="{i}"];')
        lines.append("  }")
    for k, mv in enumerate(p.steps):
        lines.append(f'  m{k} [shape=box, label="{mv.kind}"];')
        for a in mv.acting:
            lines.append(f'  "s{k}_{a}" -> m{k} [style=bold];')
        for q, a in sorted(mv.avatar.items()):
            if a in mv.acting:
                lines.append(f'  m{k} -> "s{k + 1}_{q}" [style=bold];')
            else:
                lines.append(f'  "s{k}_{a}" -> "s{k + 1}_{q}" [style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"

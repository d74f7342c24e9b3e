"""Positions: players attached to channels, horizontal maps and gluing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .canon import canonical


class PositionError(ValueError):
    pass


@dataclass(frozen=True)
class Player:
    id: str
    attach: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.attach)


@dataclass(frozen=True)
class Position:
    """Channels are integers; each player sees an ordered vector of them."""
    channels: tuple[int, ...]
    players: tuple[Player, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(sorted(set(self.channels))))
        known = set(self.channels)
        ids = set()
        for p in self.players:
            if p.id in ids:
                raise PositionError(f"duplicate player id {p.id!r}")
            ids.add(p.id)
            bad = [c for c in p.attach if c not in known]
            if bad:
                raise PositionError(f"player {p.id!r} attached to undeclared channels {bad}")

    @staticmethod
    def of(n: int, pid: str = "x") -> "Position":
        """The single n-ary player ``[n]`` on distinct channels ``1..n``."""
        chans = tuple(range(1, n + 1))
        return Position(chans, (Player(pid, chans),))

    @staticmethod
    def build(players: Mapping[str, Iterable[int]], channels: Iterable[int] = ()) -> "Position":
        ps = tuple(Player(k, tuple(v)) for k, v in players.items())
        chans = set(channels) | {c for p in ps for c in p.attach}
        return Position(tuple(chans), ps)

    def player(self, pid: str) -> Player:
        for p in self.players:
            if p.id == pid:
                return p
        raise PositionError(f"no player {pid!r}")

    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.players)

    def fresh(self, k: int = 1) -> tuple[int, ...]:
        top = max(self.channels, default=0)
        return tuple(range(top + 1, top + 1 + k))

    def key(self, labels: Mapping[str, str] | None = None):
        """Isomorphism-invariant key; ``labels`` optionally colours players."""
        agents = [((labels or {}).get(p.id, str(p.arity)), p.attach) for p in self.players]
        return canonical([self.channels], agents, keep=1)[0]

    def __str__(self):
        ps = "; ".join(f"{p.id} {' '.join(map(str, p.attach))}".rstrip() for p in self.players)
        head = "channels " + " ".join(map(str, self.channels))
        return f"{head}; {ps}" if ps else head


@dataclass(frozen=True)
class HorizMap:
    """Injective on players, arbitrary on channels."""
    source: Position
    target: Position
    chan_map: Mapping[int, int]
    player_map: Mapping[str, str]

    def __hash__(self):
        return hash((self.source, self.target, tuple(sorted(self.chan_map.items())),
                     tuple(sorted(self.player_map.items()))))

    def __eq__(self, other):
        return (isinstance(other, HorizMap) and self.source == other.source
                and self.target == other.target and dict(self.chan_map) == dict(other.chan_map)
                and dict(self.player_map) == dict(other.player_map))

    def then(self, k: "HorizMap") -> "HorizMap":
        """``k ∘ self``."""
        if k.source != self.target:
            raise PositionError("maps are not composable")
        return HorizMap(self.source, k.target,
                        {c: k.chan_map[d] for c, d in self.chan_map.items()},
                        {p: k.player_map[q] for p, q in self.player_map.items()})

    @staticmethod
    def identity(x: Position) -> "HorizMap":
        return HorizMap(x, x, {c: c for c in x.channels}, {p.id: p.id for p in x.players})


def check_horiz(h: HorizMap) -> None:
    """Raise ``PositionError`` unless ``h`` is a valid horizontal map."""
    src, tgt = h.source, h.target
    if set(h.chan_map) != set(src.channels):
        raise PositionError("channel map is not total")
    tc = set(tgt.channels)
    if any(v not in tc for v in h.chan_map.values()):
        raise PositionError("channel map leaves the target")
    if set(h.player_map) != set(src.ids()):
        raise PositionError("player map is not total")
    images = list(h.player_map.values())
    if len(set(images)) != len(images):
        raise PositionError("player map is not injective")
    for p in src.players:
        q = tgt.player(h.player_map[p.id])
        if q.arity != p.arity:
            raise PositionError(f"arity mismatch for {p.id!r}")
        if tuple(h.chan_map[c] for c in p.attach) != q.attach:
            raise PositionError(f"attachment of {p.id!r} not preserved")


def is_horiz(h: HorizMap) -> bool:
    try:
        check_horiz(h)
    except PositionError:
        return False
    return True


def interface_of(x: Position) -> tuple[Position, HorizMap]:
    iface = Position(x.channels)
    return iface, HorizMap(iface, x, {c: c for c in x.channels}, {})


def glue(x: Position, i: HorizMap, f: HorizMap) -> tuple[Position, HorizMap, HorizMap]:
    """Pushout of ``x <-i- I -f-> z`` where ``I`` has no players.

    Channels of ``x`` outside the image of ``i`` become fresh channels of
    the result, numbered after those of ``z`` in increasing order.  Players
    of ``x`` whose id clashes with a player of ``z`` get primes appended.
    Returns the result with the injections from ``x`` and ``z``.
    """
    if i.source != f.source or i.source.players:
        raise PositionError("glue expects two maps out of a common interface")
    if i.target != x:
        raise PositionError("inclusion does not land in the glued position")
    z = f.target
    # channels of x identified through the interface
    cm: dict[int, int] = {}
    for c in i.source.channels:
        xc, zc = i.chan_map[c], f.chan_map[c]
        if xc in cm and cm[xc] != zc:
            # two interface channels with the same image in x: merge in z
            raise PositionError("interface inclusion is not injective")
        cm[xc] = zc
    rest = [c for c in x.channels if c not in cm]
    for c, new in zip(rest, z.fresh(len(rest))):
        cm[c] = new
    taken = set(z.ids())
    pm: dict[str, str] = {}
    players = list(z.players)
    for p in x.players:
        pid = p.id
        while pid in taken:
            pid += "'"
        taken.add(pid)
        pm[p.id] = pid
        players.append(Player(pid, tuple(cm[c] for c in p.attach)))
    w = Position(tuple(z.channels) + tuple(cm.values()), tuple(players))
    inj_x = HorizMap(x, w, cm, pm)
    inj_z = HorizMap(z, w, {c: c for c in z.channels}, {p.id: p.id for p in z.players})
    return w, inj_x, inj_z


def position_dot(x: Position, name: str = "position") -> str:
    """DOT drawing: circles are channels, bullets are players."""
    lines = [f"graph {name} {{", "  node [fontsize=10];"]
    for c in x.channels:
        lines.append(f'  c{c} [shape=circle, label="{c}"];')
    for p in x.players:
        lines.append(f'  "{p.id}" [shape=point, width=0.15, xlabel="{p.id}"];')
        for k, c in enumerate(p.attach, 1):
            lines.append(f'  "{p.id}" -- c{c} [label="{k}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

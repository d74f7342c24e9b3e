"""Canonical forms for multisets of agents attached to channels.

Both process states (parallel components) and game states (players) are
finite sets of *agents*, each carrying a label and an ordered vector of
channels.  Two such configurations are identified when a renaming of
channels maps one onto the other, where channels are only allowed to move
inside their group (e.g. free names stay put, private names permute).

The canonical form is found by colour refinement followed by
individualisation of the first ambiguous class, keeping the
lexicographically least encoding over all branches.
"""
from __future__ import annotations

from typing import Hashable, Sequence

Agent = tuple[str, tuple[Hashable, ...]]


def _refine(colour: dict, agents: Sequence[Agent]) -> dict:
    while True:
        sig = {c: [colour[c]] for c in colour}
        for label, attach in agents:
            cols = tuple(colour[x] for x in attach)
            for pos, x in enumerate(attach):
                sig[x].append((label, pos, cols))
        keyed = {c: (s[0], tuple(sorted(s[1:]))) for c, s in sig.items()}
        ranks = {k: i for i, k in enumerate(sorted(set(keyed.values())))}
        new = {c: ranks[keyed[c]] for c in colour}
        if len(set(new.values())) == len(set(colour.values())):
            return new
        colour = new


def canonical(groups: Sequence[Sequence[Hashable]], agents: Sequence[Agent],
              keep: int = 0):
    """Return ``(encoding, relabel)``.

    ``groups`` lists channel groups in a fixed order; channels permute only
    within their group; unused channels are dropped except in the first
    ``keep`` groups.  ``relabel`` maps each kept channel to its canonical
    number (1-based, group order first).  ``encoding`` is
    ``(group_sizes, sorted agents)`` and equal encodings mean isomorphic
    configurations.
    """
    used = {x for _, att in agents for x in att}
    gs = [list(g) if gi < keep else [c for c in g if c in used] for gi, g in enumerate(groups)]
    colour = {}
    for gi, g in enumerate(gs):
        for c in g:
            colour[c] = gi
    stray = used - colour.keys()
    if stray:
        raise ValueError(f"agents attached to undeclared channels {sorted(stray, key=repr)}")
    colour = _refine(colour, agents)
    best = None
    for order in _leaves(colour, agents):
        relabel = {c: i + 1 for i, c in enumerate(order)}
        enc = tuple(sorted((lab, tuple(relabel[x] for x in att)) for lab, att in agents))
        if best is None or enc < best[0]:
            best = (enc, relabel)
    sizes = tuple(len(g) for g in gs)
    if best is None:
        return (sizes, ()), {}
    return (sizes, best[0]), best[1]


def _leaves(colour, agents):
    classes: dict[int, list] = {}
    for c, k in colour.items():
        classes.setdefault(k, []).append(c)
    amb = [k for k in sorted(classes) if len(classes[k]) > 1]
    if not amb:
        yield [c for k in sorted(classes) for c in classes[k]]
        return
    k = amb[0]
    for c in sorted(classes[k], key=repr):
        # individualise c: it sorts before the rest of its class
        col = {x: 2 * v + (1 if v == k and x != c else 0) for x, v in colour.items()}
        yield from _leaves(_refine(col, agents), agents)

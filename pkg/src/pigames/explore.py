"""Bounded exploration of closed-world graphs and the ⊥ predicate.

A state is in ⊥ when every state silently reachable from it can still
reach a ♥ edge along silent steps.  The check is exact when the silent
reachable set fits in the budget; otherwise a state whose whole silent
closure was explored without meeting ♥ still refutes ⊥ exactly, and
anything else is reported as unknown.
"""
from __future__ import annotations

import enum
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, TypeVar

S = TypeVar("S")

DEFAULT_NODES = int(os.environ.get("PIGAMES_BUDGET", "100000"))


class Verdict(str, enum.Enum):
    IN_BOT = "InBot"
    NOT_IN_BOT = "NotInBot"
    UNKNOWN = "Unknown"

    @property
    def exact(self) -> bool:
        return self is not Verdict.UNKNOWN


@dataclass(frozen=True)
class Budget:
    nodes: int = DEFAULT_NODES
    depth: int | None = None

    def __post_init__(self):
        if self.nodes <= 0 or (self.depth is not None and self.depth < 0):
            raise ValueError("budget bounds must be positive")

    def as_dict(self):
        return {"nodes": self.nodes, "depth": self.depth}


@dataclass
class BotResult:
    verdict: Verdict
    explored: int
    saturated: bool
    witness: list = field(default_factory=list)
    budget: Budget = field(default_factory=Budget)

    def record(self, state: str) -> dict:
        return {
            "state": state,
            "verdict": self.verdict.value,
            "bound": self.budget.as_dict(),
            "explored": self.explored,
            "witness-path": [str(w) for w in self.witness],
        }


def bot_check(initial: S, key: Callable[[S], Hashable],
              silent: Callable[[S], Iterable[S]], heart: Callable[[S], bool],
              budget: Budget = Budget()) -> BotResult:
    """Decide ⊥ for ``initial`` by breadth-first search over silent edges."""
    k0 = key(initial)
    states = {k0: initial}
    parent: dict[Hashable, Hashable | None] = {k0: None}
    depth = {k0: 0}
    succ: dict[Hashable, list[Hashable]] = {}
    good: set[Hashable] = set()
    queue = deque([k0])
    saturated = True
    while queue:
        k = queue.popleft()
        if budget.depth is not None and depth[k] >= budget.depth:
            saturated = False
            continue
        s = states[k]
        if heart(s):
            good.add(k)
        out = []
        for t in silent(s):
            kt = key(t)
            out.append(kt)
            if kt not in states:
                if len(states) >= budget.nodes:
                    saturated = False
                    continue
                states[kt] = t
                parent[kt] = k
                depth[kt] = depth[k] + 1
                queue.append(kt)
        succ[k] = out
    # states not expanded, or with edges cut off by the budget, may still tick
    open_ = {k for k in states if k not in succ}
    for k, out in succ.items():
        if any(kt not in states for kt in out):
            open_.add(k)
    pred: dict[Hashable, list[Hashable]] = {}
    for k, out in succ.items():
        for kt in out:
            if kt in states:
                pred.setdefault(kt, []).append(k)
    maybe = set(good) | open_
    stack = list(maybe)
    while stack:
        k = stack.pop()
        for kp in pred.get(k, ()):
            if kp not in maybe:
                maybe.add(kp)
                stack.append(kp)
    bad = [k for k in states if k not in maybe]
    if bad:
        # witness: the first refuting state in BFS order
        target = min(bad, key=lambda k: depth[k])
        path = []
        k = target
        while k is not None:
            path.append(k)
            k = parent[k]
        return BotResult(Verdict.NOT_IN_BOT, len(states), saturated, path[::-1], budget)
    if saturated and not open_:
        return BotResult(Verdict.IN_BOT, len(states), True, [], budget)
    return BotResult(Verdict.UNKNOWN, len(states), False, [], budget)


def combine(verdicts: Iterable[Verdict]) -> Verdict:
    """Conjunction of ⊥ verdicts (all members must be in ⊥)."""
    out = Verdict.IN_BOT
    for v in verdicts:
        if v is Verdict.NOT_IN_BOT:
            return v
        if v is Verdict.UNKNOWN:
            out = v
    return out

"""π-calculus terms in de Bruijn form.

Channels of a context of size ``n`` are the indices ``1..n``.  An input
prefix binds the next index (``n + 1``) in its continuation and so does
``New``.  Infinite terms are written with named, parametrised definitions
that are unfolded one step at a time.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union


class ProcessError(ValueError):
    pass


class ParseError(ProcessError):
    def __init__(self, msg: str, pos: int, text: str = ""):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{msg} at line {line}, column {col}")
        self.pos = pos


class TypeError_(ProcessError):
    """Typing failure: index out of range, arity mismatch, unknown name."""


# -- prefixes -------------------------------------------------------------

@dataclass(frozen=True)
class Send:
    a: int
    b: int


@dataclass(frozen=True)
class Recv:
    a: int


@dataclass(frozen=True)
class Tick:
    pass


Prefix = Union[Send, Recv, Tick]


def extends(prefix: Prefix) -> int:
    """How many channels the prefix adds to its continuation's context."""
    return 1 if isinstance(prefix, Recv) else 0


# -- processes ------------------------------------------------------------

@dataclass(frozen=True)
class Sum:
    branches: tuple[tuple[Prefix, "Process"], ...] = ()


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class New:
    body: "Process"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[int, ...] = ()


Process = Union[Sum, Par, New, Call]

NIL = Sum(())


def prefixed(prefix: Prefix, cont: Process = NIL) -> Sum:
    return Sum(((prefix, cont),))


def par(*ps: Process) -> Process:
    if not ps:
        return NIL
    out = ps[0]
    for p in ps[1:]:
        out = Par(out, p)
    return out


@dataclass(frozen=True)
class Definition:
    params: int
    body: Process


class Defs(Mapping[str, Definition]):
    """Immutable, hashable definition table."""

    def __init__(self, items: Mapping[str, Definition] | Iterable[tuple[str, Definition]] = ()):
        d = dict(items.items() if isinstance(items, Mapping) else items)
        self._items = dict(sorted(d.items()))
        self._hash = hash(tuple(self._items.items()))

    def __getitem__(self, k):
        return self._items[k]

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Defs) and self._items == other._items

    def __repr__(self):
        return f"Defs({self._items!r})"


EMPTY_DEFS = Defs()


@dataclass(frozen=True)
class TypedProcess:
    proc: Process
    ctx: int
    defs: Defs = EMPTY_DEFS
    names: tuple[str, ...] | None = field(default=None, compare=False)

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True)
class Renaming:
    """A total map ``1..source -> 1..target``; ``map[i-1]`` is the image of i."""
    source: int
    target: int
    map: tuple[int, ...]

    def __post_init__(self):
        if len(self.map) != self.source:
            raise ProcessError(f"renaming has {len(self.map)} entries, expected {self.source}")
        for x in self.map:
            if not 1 <= x <= self.target:
                raise ProcessError(f"renaming image {x} outside 1..{self.target}")

    @classmethod
    def identity(cls, n: int) -> "Renaming":
        return cls(n, n, tuple(range(1, n + 1)))

    def __call__(self, i: int) -> int:
        return self.map[i - 1]

    def then(self, k: "Renaming") -> "Renaming":
        """``k ∘ self``."""
        if k.source != self.target:
            raise ProcessError("renamings not composable")
        return Renaming(self.source, k.target, tuple(k(x) for x in self.map))


# -- renaming -------------------------------------------------------------

def reindex(p: Process, m: Mapping[int, int] | Sequence[int], src: int, tgt: int) -> Process:
    """Rename free channels of ``p`` (typed in ``src``) into context ``tgt``.

    ``m`` only needs entries for channels that actually occur free.  Binders
    go to the new top index of the target.
    """
    if isinstance(m, Mapping):
        look = m.__getitem__
    else:
        look = lambda i: m[i - 1]  # noqa: E731
    return _reindex(p, look, src, tgt, {})


def _reindex(p, look, src, tgt, memo):
    k = (id(p), src, tgt)
    hit = memo.get(k)
    if hit is not None:
        return hit[1]

    def under(i, s=src, t=tgt):
        return t + (i - s) if i > s else look(i)

    if isinstance(p, Sum):
        bs = []
        for pre, cont in p.branches:
            if isinstance(pre, Send):
                bs.append((Send(look(pre.a), look(pre.b)), _reindex(cont, look, src, tgt, memo)))
            elif isinstance(pre, Recv):
                bs.append((Recv(look(pre.a)), _reindex(cont, under, src + 1, tgt + 1, {})))
            else:
                bs.append((pre, _reindex(cont, look, src, tgt, memo)))
        out = Sum(tuple(bs))
    elif isinstance(p, Par):
        out = Par(_reindex(p.left, look, src, tgt, memo), _reindex(p.right, look, src, tgt, memo))
    elif isinstance(p, New):
        out = New(_reindex(p.body, under, src + 1, tgt + 1, {}))
    else:
        out = Call(p.name, tuple(look(a) for a in p.args))
    memo[k] = (p, out)
    return out


def rename(p: Process, h: Renaming) -> Process:
    return reindex(p, h.map, h.source, h.target)


def weaken(p: Process, ctx: int, extra: int = 1) -> Process:
    """View ``p`` (typed in ctx) in context ``ctx + extra``."""
    return reindex(p, tuple(range(1, ctx + 1)), ctx, ctx + extra)


# -- definitions ----------------------------------------------------------

def unfold(p: Process, defs: Mapping[str, Definition], ctx: int) -> Process:
    """Expand top-level calls (typed in ``ctx``) until the head is not a ``Call``."""
    seen = set()
    while isinstance(p, Call):
        if p.name not in defs:
            raise TypeError_(f"unknown definition {p.name!r}")
        if p.name in seen:
            raise TypeError_(f"unguarded recursion through {p.name!r}")
        seen.add(p.name)
        d = defs[p.name]
        if len(p.args) != d.params:
            raise TypeError_(f"{p.name} expects {d.params} arguments, got {len(p.args)}")
        p = reindex(d.body, p.args, d.params, ctx)
    return p


# -- typing ---------------------------------------------------------------

def typecheck(p: Process, ctx: int, defs: Mapping[str, Definition] = EMPTY_DEFS) -> None:
    """Raise ``TypeError_`` unless ``ctx ⊢ p`` is derivable."""
    if ctx < 0:
        raise TypeError_("negative context")
    _check_defs(defs)
    _check(p, ctx, defs)


def _check_defs(defs):
    for name, d in defs.items():
        _check(d.body, d.params, defs)
    for name in defs:
        # guardedness: following bare calls from a body must not loop
        seen = [name]
        body = defs[name].body
        while isinstance(body, Call):
            if body.name not in defs:
                raise TypeError_(f"unknown definition {body.name!r}")
            if body.name in seen:
                raise TypeError_(f"unguarded recursion: {' -> '.join(seen + [body.name])}")
            seen.append(body.name)
            body = defs[body.name].body


def _check(p, ctx, defs):
    def chan(i):
        if not 1 <= i <= ctx:
            raise TypeError_(f"channel index {i} not in 1..{ctx}")

    if isinstance(p, Sum):
        for pre, cont in p.branches:
            if isinstance(pre, Send):
                chan(pre.a)
                chan(pre.b)
            elif isinstance(pre, Recv):
                chan(pre.a)
            elif not isinstance(pre, Tick):
                raise TypeError_(f"bad prefix {pre!r}")
            _check(cont, ctx + extends(pre), defs)
    elif isinstance(p, Par):
        _check(p.left, ctx, defs)
        _check(p.right, ctx, defs)
    elif isinstance(p, New):
        _check(p.body, ctx + 1, defs)
    elif isinstance(p, Call):
        if p.name not in defs:
            raise TypeError_(f"unknown definition {p.name!r}")
        if len(p.args) != defs[p.name].params:
            raise TypeError_(f"{p.name} expects {defs[p.name].params} arguments, got {len(p.args)}")
        for a in p.args:
            chan(a)
    else:
        raise TypeError_(f"not a process: {p!r}")


def free_channels(p: Process, ctx: int) -> list[int]:
    """Free channel indices of ``p`` in order of first occurrence."""
    out: list[int] = []
    seen: set[int] = set()

    def see(i, depth):
        if i <= ctx and i not in seen:
            seen.add(i)
            out.append(i)

    def go(q, depth):
        # depth = size of the current local context; indices > ctx are bound
        if isinstance(q, Sum):
            for pre, cont in q.branches:
                if isinstance(pre, Send):
                    see(pre.a, depth)
                    see(pre.b, depth)
                elif isinstance(pre, Recv):
                    see(pre.a, depth)
                go(cont, depth + extends(pre))
        elif isinstance(q, Par):
            go(q.left, depth)
            go(q.right, depth)
        elif isinstance(q, New):
            go(q.body, depth + 1)
        else:
            for a in q.args:
                see(a, depth)

    go(p, ctx)
    return out


def localize(p: Process, ctx: int) -> tuple[Process, tuple[int, ...]]:
    """Strengthen ``p`` to exactly its free channels.

    Returns ``(q, used)`` with ``len(used) ⊢ q`` and ``q[used] = p``.
    """
    used = free_channels(p, ctx)
    if used == list(range(1, ctx + 1)):
        return p, tuple(used)
    pos = {c: i + 1 for i, c in enumerate(used)}
    return reindex(p, pos, ctx, len(used)), tuple(used)


# -- compact keys ---------------------------------------------------------

def dump(p: Process) -> str:
    """Compact, injective serialisation used as a hashing/sorting key."""
    parts: list[str] = []
    _dump(p, parts)
    return "".join(parts)


def _dump(p, out):
    if isinstance(p, Sum):
        out.append("[")
        for j, (pre, cont) in enumerate(p.branches):
            if j:
                out.append("+")
            if isinstance(pre, Send):
                out.append(f"o{pre.a},{pre.b}.")
            elif isinstance(pre, Recv):
                out.append(f"i{pre.a}.")
            else:
                out.append("t.")
            _dump(cont, out)
        out.append("]")
    elif isinstance(p, Par):
        out.append("(")
        _dump(p.left, out)
        out.append("|")
        _dump(p.right, out)
        out.append(")")
    elif isinstance(p, New):
        out.append("v")
        _dump(p.body, out)
    else:
        out.append(f"{p.name}<{','.join(map(str, p.args))}>")


def size(p: Process) -> int:
    """Number of constructors, ignoring leaves ``0`` and calls."""
    if isinstance(p, Sum):
        return sum(1 + size(c) for _, c in p.branches)
    if isinstance(p, Par):
        return 1 + size(p.left) + size(p.right)
    if isinstance(p, New):
        return 1 + size(p.body)
    return 0


# -- concrete syntax ------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<comment>#[^\n]*)|(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<num>0)|(?P<op>[!?.|+()=,;:]))"
)
_KEYWORDS = {"new", "tick", "where", "channels"}


def _tokens(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}",
                             len(text) - len(text[pos:].lstrip()), text)
        pos = m.end()
        if m.group("comment"):
            continue
        for kind in ("id", "num", "op"):
            if m.group(kind) is not None:
                toks.append((kind, m.group(kind), m.start(kind)))
                break
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0

    def peek(self, off=0):
        return self.toks[min(self.i + off, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok[2], self.text)

    def expect(self, val):
        t = self.next()
        if t[1] != val:
            raise self.error(f"expected {val!r}, found {t[1] or 'end of input'!r}", t)
        return t

    def ident(self):
        t = self.next()
        if t[0] != "id" or t[1] in _KEYWORDS:
            raise self.error(f"expected a name, found {t[1] or 'end of input'!r}", t)
        return t

    # Raw syntax trees use names; conversion to indices happens afterwards so
    # definitions can be referenced before they are declared.
    def proc(self):
        left = self.sum_()
        while self.peek()[1] == "|":
            self.next()
            left = ("par", left, self.sum_())
        return left

    def sum_(self):
        first_tok = self.peek()
        terms = [self.term()]
        while self.peek()[1] == "+":
            self.next()
            terms.append(self.term())
        if len(terms) == 1:
            return terms[0]
        branches = []
        for t in terms:
            if t[0] != "sum":
                raise self.error("only prefixed terms may be summed", first_tok)
            branches.extend(t[1])
        return ("sum", branches)

    def term(self):
        t = self.peek()
        if t[1] == "new":
            self.next()
            name = self.ident()[1]
            self.expect(".")
            return ("new", name, self.term())
        if t[1] == "tick":
            self.next()
            return ("sum", [(("tick",), self.cont())])
        if t[0] == "id" and self.peek(1)[1] == "!":
            a = self.next()
            self.next()
            b = self.ident()
            return ("sum", [(("send", a, b), self.cont())])
        if t[0] == "id" and self.peek(1)[1] == "?":
            a = self.next()
            self.next()
            binder = None
            if self.peek()[1] == "(":
                self.next()
                binder = self.ident()[1]
                self.expect(")")
            return ("sum", [(("recv", a, binder), self.cont())])
        return self.atom()

    def cont(self):
        if self.peek()[1] == ".":
            self.next()
            return self.term()
        return ("sum", [])

    def atom(self):
        t = self.next()
        if t[1] == "0":
            return ("sum", [])
        if t[1] == "(":
            p = self.proc()
            self.expect(")")
            return p
        if t[0] == "id" and t[1] not in _KEYWORDS:
            args = []
            if self.peek()[1] == "(":
                self.next()
                if self.peek()[1] != ")":
                    args.append(self.ident())
                    while self.peek()[1] == ",":
                        self.next()
                        args.append(self.ident())
                self.expect(")")
            return ("call", t, args)
        raise self.error(f"unexpected {t[1] or 'end of input'!r}", t)

    def names_list(self):
        names = []
        while self.peek()[0] == "id" and self.peek()[1] not in _KEYWORDS:
            names.append(self.next()[1])
            if self.peek()[1] == ",":
                self.next()
        return names

    def definition(self):
        name = self.ident()
        params = []
        if self.peek()[1] == "(":
            self.next()
            if self.peek()[1] != ")":
                params.append(self.ident()[1])
                while self.peek()[1] == ",":
                    self.next()
                    params.append(self.ident()[1])
            self.expect(")")
        self.expect("=")
        return name, params, self.proc()

    def file(self):
        declared = None
        if self.peek()[1] == "channels":
            self.next()
            if self.peek()[1] == ":":
                self.next()
            declared = self.names_list()
            if self.peek()[1] == ";":
                self.next()
        main = self.proc()
        defs = []
        if self.peek()[1] == "where":
            self.next()
            defs.append(self.definition())
            while self.peek()[1] in (";", ","):
                self.next()
                if self.peek()[0] == "eof":
                    break
                defs.append(self.definition())
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return declared, main, defs


def _free_names(raw, bound, out, calls):
    kind = raw[0]
    if kind == "sum":
        for pre, cont in raw[1]:
            b = bound
            if pre[0] == "send":
                for t in (pre[1], pre[2]):
                    if t[1] not in bound and t[1] not in out:
                        out.append(t[1])
            elif pre[0] == "recv":
                if pre[1][1] not in bound and pre[1][1] not in out:
                    out.append(pre[1][1])
                b = bound | ({pre[2]} if pre[2] else set())
            _free_names(cont, b, out, calls)
    elif kind == "par":
        _free_names(raw[1], bound, out, calls)
        _free_names(raw[2], bound, out, calls)
    elif kind == "new":
        _free_names(raw[2], bound | {raw[1]}, out, calls)
    else:
        for t in raw[2]:
            if t[1] not in bound and t[1] not in out:
                out.append(t[1])


def _convert(raw, env: list[str | None], defs_arity, parser):
    """``env[i]`` names de Bruijn index ``i + 1``."""

    def idx(tok):
        name = tok[1]
        for i in range(len(env) - 1, -1, -1):
            if env[i] == name:
                return i + 1
        raise ParseError(f"unbound name {name!r}", tok[2], parser.text)

    kind = raw[0]
    if kind == "sum":
        bs = []
        for pre, cont in raw[1]:
            if pre[0] == "send":
                bs.append((Send(idx(pre[1]), idx(pre[2])), _convert(cont, env, defs_arity, parser)))
            elif pre[0] == "recv":
                bs.append((Recv(idx(pre[1])), _convert(cont, env + [pre[2]], defs_arity, parser)))
            else:
                bs.append((Tick(), _convert(cont, env, defs_arity, parser)))
        return Sum(tuple(bs))
    if kind == "par":
        return Par(_convert(raw[1], env, defs_arity, parser), _convert(raw[2], env, defs_arity, parser))
    if kind == "new":
        return New(_convert(raw[2], env + [raw[1]], defs_arity, parser))
    tok, args = raw[1], raw[2]
    if tok[1] not in defs_arity:
        raise ParseError(f"unknown definition {tok[1]!r}", tok[2], parser.text)
    if len(args) != defs_arity[tok[1]]:
        raise ParseError(f"{tok[1]} expects {defs_arity[tok[1]]} arguments, got {len(args)}",
                         tok[2], parser.text)
    return Call(tok[1], tuple(idx(a) for a in args))


def parse(text: str, defs: Mapping[str, Definition] | None = None,
          names: Sequence[str] | None = None) -> TypedProcess:
    """Parse concrete syntax into a typed de Bruijn process.

    Free channel names are taken from ``names`` or a ``channels`` header when
    given, otherwise in order of first occurrence.  ``where`` clauses add
    definitions to ``defs``.
    """
    parser = _Parser(text)
    declared, main, raw_defs = parser.file()
    table = dict(defs or {})
    arity = {k: v.params for k, v in table.items()}
    for name_tok, params, _ in raw_defs:
        if name_tok[1] in arity and name_tok[1] not in table:
            raise ParseError(f"duplicate definition {name_tok[1]!r}", name_tok[2], text)
        arity[name_tok[1]] = len(params)
    for name_tok, params, body in raw_defs:
        free = []
        _free_names(body, set(params), free, None)
        if free:
            raise ParseError(f"definition {name_tok[1]} has free name {free[0]!r}", name_tok[2], text)
        table[name_tok[1]] = Definition(len(params), _convert(body, list(params), arity, parser))
    if names is None:
        names = declared
    if names is None:
        found: list[str] = []
        _free_names(main, set(), found, None)
        names = found
    names = tuple(names)
    proc = _convert(main, list(names), arity, parser)
    d = Defs(table)
    try:
        typecheck(proc, len(names), d)
    except TypeError_ as e:
        raise ParseError(str(e), 0, text) from None
    return TypedProcess(proc, len(names), d, names)


def _fresh(base: str, taken: set[str]) -> str:
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def _pretty(p, env: list[str], prec: int) -> str:
    # prec: 0 = anywhere, 1 = operand of "|" on the right, 2 = term position
    if isinstance(p, Sum):
        if not p.branches:
            return "0"
        parts = []
        for pre, cont in p.branches:
            if isinstance(pre, Send):
                head = f"{env[pre.a - 1]}!{env[pre.b - 1]}"
                sub = env
            elif isinstance(pre, Recv):
                x = _fresh("x", set(env))
                head = f"{env[pre.a - 1]}?({x})"
                sub = env + [x]
            else:
                head = "tick"
                sub = env
            if isinstance(cont, Sum) and not cont.branches:
                parts.append(head)
            else:
                parts.append(f"{head}.{_pretty(cont, sub, 2)}")
        s = " + ".join(parts)
        return f"({s})" if len(parts) > 1 and prec >= 2 else s
    if isinstance(p, Par):
        s = f"{_pretty(p.left, env, 0)} | {_pretty(p.right, env, 1)}"
        return f"({s})" if prec >= 1 else s
    if isinstance(p, New):
        x = _fresh("n", set(env))
        return f"new {x}. {_pretty(p.body, env + [x], 2)}"
    args = ", ".join(env[a - 1] for a in p.args)
    return f"{p.name}({args})" if p.args else p.name


def pretty_process(p: Process, names: Sequence[str]) -> str:
    return _pretty(p, list(names), 0)


def default_names(n: int) -> tuple[str, ...]:
    pool = "abcdefghijklm"
    return tuple(pool[i] if i < len(pool) else f"c{i + 1}" for i in range(n))


def pretty(tp: TypedProcess, with_header: bool = False) -> str:
    names = list(tp.names) if tp.names is not None else list(default_names(tp.ctx))
    s = _pretty(tp.proc, names, 0)
    if tp.defs:
        ds = []
        for name, d in tp.defs.items():
            params = [f"p{i + 1}" for i in range(d.params)]
            head = f"{name}({', '.join(params)})" if params else name
            ds.append(f"{head} = {_pretty(d.body, params, 0)}")
        s = f"{s} where " + "; ".join(ds)
    if with_header or tp.names is None and tp.ctx or free_channels(tp.proc, tp.ctx) != list(range(1, tp.ctx + 1)):
        s = f"channels {' '.join(names)}; {s}"
    return s


def subterms(p: Process) -> Iterator[Process]:
    yield p
    if isinstance(p, Sum):
        for _, c in p.branches:
            yield from subterms(c)
    elif isinstance(p, Par):
        yield from subterms(p.left)
        yield from subterms(p.right)
    elif isinstance(p, New):
        yield from subterms(p.body)

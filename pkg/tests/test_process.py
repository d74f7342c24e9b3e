import itertools

import pytest
from hypothesis import given, settings, strategies as st

from gen import typed
from pigames.process import (NIL, Call, Definition, Defs, New, Par, ParseError, Recv, Renaming,
                             Send, Sum, Tick, TypeError_, dump, free_channels, localize,
                             parse, pretty, rename, typecheck, unfold, weaken)


def test_parse_new_input():
    tp = parse("new a. a?(x).0")
    assert tp.ctx == 0
    assert tp.proc == New(Sum(((Recv(1), NIL),)))


def test_parse_par_in_context():
    tp = parse("channels a b; a!b.0 | a?(x).0")
    assert tp.ctx == 2
    assert tp.proc == Par(Sum(((Send(1, 2), NIL),)), Sum(((Recv(1), NIL),)))


def test_parse_recursive_definition():
    tp = parse("X where X = tick.X")
    assert tp.proc == Call("X", ())
    assert tp.defs["X"] == Definition(0, Sum(((Tick(), Call("X", ())),)))


@pytest.mark.parametrize("text", [
    "new a. a?(x).0",
    "channels a b; a!b.0 | a?(x).0",
    "X where X = tick.X",
    "channels a b; X(a, b) where X(p, q) = p?(y).X(q, p)",
    "channels a; new n. (a!n | n?(x).tick + tick.a!a)",
])
def test_round_trip_examples(text):
    tp = parse(text)
    back = parse(pretty(tp, with_header=True))
    assert (back.proc, back.ctx, back.defs) == (tp.proc, tp.ctx, tp.defs)


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as e:
        parse("channels a; a?(x).x!y")
    assert "line 1" in str(e.value)


def test_unbound_name_rejected():
    with pytest.raises(ParseError):
        parse("channels a; b!a")


@settings(max_examples=300, deadline=None)
@given(typed(max_ctx=3, depth=4))
def test_pretty_parse_round_trip(tp):
    back = parse(pretty(tp, with_header=True))
    assert back.ctx == tp.ctx
    assert dump(back.proc) == dump(tp.proc)


# -- typing --------------------------------------------------------------

def test_typecheck_examples():
    typecheck(Sum(((Send(1, 2), NIL),)), 2)
    with pytest.raises(TypeError_):
        typecheck(Sum(((Send(2, 1), NIL),)), 1)
    typecheck(New(Sum(((Recv(1), NIL),))), 0)


def _need(p):
    """Least context in which ``p`` has a derivation (weakening is admissible)."""
    if isinstance(p, Sum):
        n = 0
        for pre, cont in p.branches:
            idx = {Send: lambda q: (q.a, q.b), Recv: lambda q: (q.a,), Tick: lambda q: ()}[type(pre)](pre)
            n = max(n, *idx, _need(cont) - (1 if isinstance(pre, Recv) else 0), 0)
        return n
    if isinstance(p, Par):
        return max(_need(p.left), _need(p.right))
    return max(_need(p.body) - 1, 0)


def _derivable(p, ctx):
    """Search for a derivation of ``ctx ⊢ p`` rule by rule."""
    if isinstance(p, Sum):
        for pre, cont in p.branches:
            if isinstance(pre, Send) and not (1 <= pre.a <= ctx and 1 <= pre.b <= ctx):
                return False
            if isinstance(pre, Recv) and not 1 <= pre.a <= ctx:
                return False
            if not _derivable(cont, ctx + (1 if isinstance(pre, Recv) else 0)):
                return False
        return True
    if isinstance(p, Par):
        return _derivable(p.left, ctx) and _derivable(p.right, ctx)
    return _derivable(p.body, ctx + 1)


def _raw_terms(size, top=4):
    """All raw terms with ``size`` constructors, indices in 1..top (possibly ill-scoped)."""
    if size == 1:
        yield NIL
        return
    for pre in [Tick()] + [Recv(a) for a in range(1, top + 1)] + \
               [Send(a, b) for a in range(1, top + 1) for b in range(1, top + 1)]:
        for c in _raw_terms(size - 1, top):
            yield Sum(((pre, c),))
    yield from (New(b) for b in _raw_terms(size - 1, top))
    for k in range(1, size - 1):
        for l, r in itertools.product(list(_raw_terms(k, top)), list(_raw_terms(size - 1 - k, top))):
            yield Par(l, r)


def test_typecheck_matches_derivation_search():
    checked = 0
    for size in range(1, 5):
        for p in _raw_terms(size):
            for ctx in range(0, 4):
                ok = True
                try:
                    typecheck(p, ctx)
                except TypeError_:
                    ok = False
                assert ok == _derivable(p, ctx) == (ctx >= _need(p)), (p, ctx)
                checked += 1
    assert checked > 1000


@settings(max_examples=200, deadline=None)
@given(typed(max_ctx=3, depth=4))
def test_generated_processes_typecheck(tp):
    typecheck(tp.proc, tp.ctx)
    assert _need(tp.proc) <= tp.ctx


# -- renaming ------------------------------------------------------------

def test_rename_identity_and_collapse():
    p = Sum(((Send(1, 2), NIL),))
    assert rename(p, Renaming.identity(2)) == p
    assert rename(p, Renaming(2, 2, (1, 1))) == Sum(((Send(1, 1), NIL),))


def test_rename_under_binder_uses_fresh_index():
    p = New(Sum(((Send(1, 2), NIL),)))
    assert rename(p, Renaming(1, 3, (3,))) == New(Sum(((Send(3, 4), NIL),)))


def renamings(src):
    return st.integers(0, 3).flatmap(
        lambda tgt: st.lists(st.integers(1, max(tgt, 1)), min_size=src, max_size=src).map(
            lambda m: Renaming(src, max(tgt, 1) if src else tgt, tuple(m))))


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_rename_respects_composition(data):
    tp = data.draw(typed(max_ctx=3, depth=3))
    h = data.draw(renamings(tp.ctx))
    k = data.draw(renamings(h.target))
    q = rename(tp.proc, h)
    typecheck(q, h.target)
    assert rename(q, k) == rename(tp.proc, h.then(k))
    assert rename(tp.proc, Renaming.identity(tp.ctx)) == tp.proc


@settings(max_examples=200, deadline=None)
@given(typed(max_ctx=3, depth=3))
def test_localize_inverts_by_renaming(tp):
    q, used = localize(tp.proc, tp.ctx)
    assert list(used) == free_channels(tp.proc, tp.ctx)
    typecheck(q, len(used))
    assert rename(q, Renaming(len(used), tp.ctx, used)) == tp.proc


@settings(max_examples=100, deadline=None)
@given(typed(max_ctx=2, depth=3))
def test_weaken_is_inclusion(tp):
    incl = Renaming(tp.ctx, tp.ctx + 1, tuple(range(1, tp.ctx + 1)))
    assert weaken(tp.proc, tp.ctx) == rename(tp.proc, incl)


# -- definitions ---------------------------------------------------------

def test_unfold_examples():
    defs = Defs({"X": Definition(0, Sum(((Tick(), Call("X", ())),)))})
    assert unfold(Call("X", ()), defs, 0) == Sum(((Tick(), Call("X", ())),))
    assert unfold(NIL, defs, 0) == NIL


def _finite_unfold(p, defs, ctx, fuel):
    # oracle: substitute arguments by hand, one call at a time
    for _ in range(fuel):
        if not isinstance(p, Call):
            return p
        d = defs[p.name]
        p = rename(d.body, Renaming(d.params, ctx, p.args))
    return p


def test_unfold_mutual_recursion_has_input_head():
    tp = parse("channels a; X(a) where X(p) = p?(x).Y(p); Y(q) = q?(x).X(q)")
    head = unfold(tp.proc, tp.defs, tp.ctx)
    assert isinstance(head, Sum) and isinstance(head.branches[0][0], Recv)
    assert head == _finite_unfold(tp.proc, tp.defs, tp.ctx, 5)
    typecheck(head, tp.ctx, tp.defs)


def test_unguarded_recursion_rejected():
    defs = Defs({"X": Definition(0, Call("Y", ())), "Y": Definition(0, Call("X", ()))})
    with pytest.raises(TypeError_):
        typecheck(Call("X", ()), 0, defs)
    with pytest.raises(TypeError_):
        unfold(Call("X", ()), defs, 0)


def test_unfold_chain_with_arguments():
    tp = parse("channels a b; X(b, a) where X(p, q) = Y(q); Y(r) = r!r")
    assert unfold(tp.proc, tp.defs, 2) == Sum(((Send(1, 1), NIL),))

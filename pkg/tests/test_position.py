import pytest
from hypothesis import given, settings, strategies as st

from gen import positions
from pigames.position import (HorizMap, Player, Position, PositionError, check_horiz, glue,
                              interface_of, is_horiz, position_dot)


def test_interface_of_single_player():
    iface, incl = interface_of(Position.of(3))
    assert iface.channels == (1, 2, 3) and iface.players == ()
    check_horiz(incl)


def test_interface_of_empty_position():
    iface, _ = interface_of(Position(()))
    assert iface == Position(())


def test_interface_of_player_plus_channel():
    x = Position((1, 2, 3), (Player("y", (1, 2)),))
    assert interface_of(x)[0].channels == (1, 2, 3)


def test_check_horiz_identity():
    check_horiz(HorizMap.identity(Position.build({"x": (1, 2), "y": (2, 3)})))


def test_check_horiz_collapsing_channels_is_allowed():
    src = Position.of(2)
    tgt = Position((1,), (Player("x", (1, 1)),))
    check_horiz(HorizMap(src, tgt, {1: 1, 2: 1}, {"x": "x"}))


def test_check_horiz_collapsing_players_is_rejected():
    src = Position.build({"x": (1,), "y": (1,)})
    tgt = Position.build({"z": (1,)})
    with pytest.raises(PositionError):
        check_horiz(HorizMap(src, tgt, {1: 1}, {"x": "z", "y": "z"}))


def test_check_horiz_rejects_broken_attachment():
    src = Position.of(2)
    tgt = Position((1, 2), (Player("x", (2, 1)),))
    assert not is_horiz(HorizMap(src, tgt, {1: 1, 2: 2}, {"x": "x"}))


def _commutes(i, f, inj_x, inj_z):
    return all(inj_x.chan_map[i.chan_map[c]] == inj_z.chan_map[f.chan_map[c]] for c in i.source.channels)


def test_glue_fork_example():
    # a binary player x glued to the interface {a, b} of z = y on (b, c) plus a
    x = Position.of(2)
    iface, i = interface_of(x)
    z = Position((1, 2, 3), (Player("y", (2, 3)),))
    f = HorizMap(iface, z, {1: 1, 2: 2}, {})
    w, inj_x, inj_z = glue(x, i, f)
    assert w == Position((1, 2, 3), (Player("y", (2, 3)), Player("x", (1, 2))))
    assert _commutes(i, f, inj_x, inj_z)
    check_horiz(inj_x)
    check_horiz(inj_z)


def test_glue_along_identity_is_identity():
    x = Position.build({"x": (1, 2), "y": (2, 3)})
    iface, i = interface_of(x)
    f = HorizMap(iface, iface, {c: c for c in iface.channels}, {})
    w, inj_x, _ = glue(x, i, f)
    assert w == x and inj_x == HorizMap.identity(x)


def test_glue_collapsing_interface():
    x = Position.of(2)
    iface, i = interface_of(x)
    z = Position((1,))
    f = HorizMap(iface, z, {1: 1, 2: 1}, {})
    w, inj_x, inj_z = glue(x, i, f)
    assert w.player("x").attach == (1, 1)
    assert _commutes(i, f, inj_x, inj_z)


def test_glue_renames_clashing_players():
    x = Position.of(1)
    iface, i = interface_of(x)
    z = Position.of(1)
    w, inj_x, _ = glue(x, i, HorizMap(iface, z, {1: 1}, {}))
    assert w.ids() == ("x", "x'") and inj_x.player_map == {"x": "x'"}


@st.composite
def glue_data(draw):
    x = draw(positions())
    iface, i = interface_of(x)
    z = draw(positions())
    f = HorizMap(iface, z, {c: draw(st.sampled_from(z.channels)) for c in iface.channels}, {})
    return x, i, f


@settings(max_examples=300, deadline=None)
@given(glue_data())
def test_glue_is_a_commuting_square(data):
    x, i, f = data
    w, inj_x, inj_z = glue(x, i, f)
    check_horiz(inj_x)
    check_horiz(inj_z)
    assert _commutes(i, f, inj_x, inj_z)
    # every channel and player of w comes from exactly one side or is shared
    assert set(w.channels) == set(inj_x.chan_map.values()) | set(inj_z.chan_map.values())
    assert len(w.players) == len(x.players) + len(f.target.players)


@settings(max_examples=200, deadline=None)
@given(positions())
def test_position_key_invariant_under_renumbering(x):
    shift = {c: 10 - c for c in x.channels}
    y = Position(tuple(shift.values()), tuple(Player(p.id, tuple(shift[c] for c in p.attach))
                                               for p in reversed(x.players)))
    assert x.key() == y.key()


def test_position_dot_mentions_every_attachment():
    out = position_dot(Position.build({"x": (1, 2), "y": (2,)}))
    assert out.startswith("graph position {")
    assert '"x" -- c2 [label="2"];' in out and '"y" -- c2 [label="1"];' in out

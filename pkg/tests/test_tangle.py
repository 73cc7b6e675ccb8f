"""Tangle store: interning, sharing, equality, stats, metering."""

import random

import pytest

from esmtangle.cost import CostMeter
from esmtangle.tangle import NodeId, TangleError, UndefNodeError, new_tangle
from esmtangle.terms import Symbol, Term, Vocabulary, compact_size, parse_term, symbol_count


def vocab_fc():
    return Vocabulary(
        [
            Symbol("c", 0),
            Symbol("eps", 0),
            Symbol("d0", 1),
            Symbol("d1", 1),
            Symbol("f", 2),
            Symbol("g", 2),
        ]
    )


def test_fresh_tangle_stats():
    g = new_tangle(vocab_fc())
    st = g.stats()
    assert (st.vertices, st.edges, st.word_bits) == (1, 0, 1)


def test_two_tangles_independent():
    v = vocab_fc()
    a, b = new_tangle(v), new_tangle(v)
    assert a.stats() == b.stats()
    assert a.tag != b.tag


def test_max_arity_recorded():
    g = new_tangle(vocab_fc())
    assert g.max_arity == 2


def test_intern_idempotent():
    g = new_tangle(vocab_fc())
    c = g.vocab.get("c")
    assert g.intern(c, ()) == g.intern(c, ())
    assert g.stats().vertices == 2


def test_merge_example():
    # Importing f(c,c) and g(c,c) into one store: one c vertex, one f, one g,
    # two edges from each binary node down to c.
    v = vocab_fc()
    g = new_tangle(v)
    g.import_term(parse_term("f(c,c)", v))
    g.import_term(parse_term("g(c,c)", v))
    st = g.stats()
    assert st.vertices == 4  # undef + c + f + g
    assert st.edges == 4


def test_intern_reuses_children():
    v = vocab_fc()
    g = new_tangle(v)
    cid = g.import_term(parse_term("c", v))
    before = g.stats().vertices
    g.intern(v.get("f"), (cid, cid))
    assert g.stats().vertices == before + 1


def test_node_eq_reflexive_and_shared():
    v = vocab_fc()
    g = new_tangle(v)
    a = g.import_term(parse_term("f(c,c)", v))
    b = g.import_term(parse_term("f(c,c)", v))
    other = g.import_term(parse_term("g(c,c)", v))
    assert g.node_eq(a, a)
    assert g.node_eq(a, b)
    assert g.extract_term(a) == g.extract_term(b)
    assert not g.node_eq(a, other)


def test_node_eq_rejects_foreign_ids():
    v = vocab_fc()
    g1, g2 = new_tangle(v), new_tangle(v)
    a = g1.import_term(parse_term("c", v))
    b = g2.import_term(parse_term("c", v))
    with pytest.raises(TangleError, match="different tangle"):
        g1.node_eq(a, b)


def test_node_eq_meters_exactly_one_compare():
    v = vocab_fc()
    g = new_tangle(v)
    d0 = v.get("d0")
    t = Term(v.get("eps"))
    for _ in range(10_000):
        t = Term(d0, (t,))
    a = g.import_term(t)
    b = g.import_term(t)
    assert compact_size(t) == 10_001
    before = g.meter.compare, g.meter.ram_ops
    assert g.node_eq(a, b)
    assert g.meter.compare == before[0] + 1
    assert g.meter.ram_ops == before[1] + 1


def test_import_delta_matches_compact_size():
    v = vocab_fc()
    g = new_tangle(v)
    t = parse_term("f(c,c)", v)
    before = g.stats().vertices
    g.import_term(t)
    assert g.stats().vertices == before + compact_size(t)


def test_reimport_is_free():
    v = vocab_fc()
    g = new_tangle(v)
    t = parse_term("g(f(c,c),f(c,c))", v)
    g.import_term(t)
    before = g.stats().vertices
    assert g.import_term(t) == g.import_term(t)
    assert g.stats().vertices == before


def test_intern_rejects_undef_child_and_bad_arity():
    v = vocab_fc()
    g = new_tangle(v)
    cid = g.import_term(parse_term("c", v))
    with pytest.raises(TangleError, match="undef cannot be a child"):
        g.intern(v.get("d0"), (g.undef,))
    with pytest.raises(TangleError, match="interned with"):
        g.intern(v.get("f"), (cid,))
    with pytest.raises(TangleError, match="not in this tangle's vocabulary"):
        g.intern(Symbol("zz", 0), ())
    g2 = new_tangle(v)
    with pytest.raises(TangleError, match="different tangle"):
        g2.intern(v.get("d0"), (cid,))


def test_extract_undef_is_distinct_error():
    g = new_tangle(vocab_fc())
    with pytest.raises(UndefNodeError):
        g.extract_term(g.undef)


def test_extract_roundtrip():
    v = vocab_fc()
    g = new_tangle(v)
    for text in ["c", "f(c,c)", "g(f(c,c),f(c,c))", "d0(d1(eps))"]:
        t = parse_term(text, v)
        nid = g.import_term(t)
        assert g.extract_term(nid) == t
        assert g.import_term(g.extract_term(nid)) == nid


def test_balanced_sharing_readback():
    # s_0 = c, s_{i+1} = f(s_i, s_i): the store keeps d+2 vertices while the
    # extracted tree has 2^(d+1) - 1 symbol occurrences.
    v = vocab_fc()
    g = new_tangle(v)
    f = v.get("f")
    nid = g.import_term(parse_term("c", v))
    d = 20
    for _ in range(d):
        nid = g.intern(f, (nid, nid))
    t = g.extract_term(nid)
    assert symbol_count(t) == 2 ** (d + 1) - 1
    assert compact_size(t) == d + 1
    assert g.stats().vertices == d + 2


def random_intern_sequence(rng, g, rounds):
    v = g.vocab
    ids = []
    for _ in range(rounds):
        sym = rng.choice(v.symbols)
        if sym.arity == 0:
            ids.append(g.intern(sym, ()))
        elif ids:
            children = tuple(rng.choice(ids) for _ in range(sym.arity))
            if any(c.index == 0 for c in children):
                continue
            ids.append(g.intern(sym, children))
    return ids


def test_minimality_and_edge_bound_random():
    rng = random.Random(42)
    for _ in range(200):
        g = new_tangle(vocab_fc())
        random_intern_sequence(rng, g, rng.randint(1, 60))
        g.check_invariants()
        st = g.stats()
        assert st.edges <= g.max_arity * st.vertices


def test_equality_coherence_all_pairs():
    v = vocab_fc()
    g = new_tangle(v)
    rng = random.Random(5)
    ids = random_intern_sequence(rng, g, 40)
    for a in ids:
        for b in ids:
            eq = g.node_eq(a, b)
            assert eq == (g.extract_term(a) == g.extract_term(b))


def test_determinism_replay():
    v = vocab_fc()
    dumps = []
    meters = []
    for _ in range(2):
        g = new_tangle(v)
        rng = random.Random(99)
        random_intern_sequence(rng, g, 200)
        dumps.append(g.dump())
        meters.append(g.meter.categories())
    assert dumps[0] == dumps[1]
    assert meters[0] == meters[1]


def test_dump_format():
    v = vocab_fc()
    g = new_tangle(v)
    g.import_term(parse_term("f(c,c)", v))
    lines = g.dump().splitlines()
    assert lines[0] == "0\tundef\t"
    assert lines[1] == "1\tc\t"
    assert lines[2] == "2\tf\t1 1"


def test_import_cost_affine_in_compact_size():
    v = vocab_fc()
    rng = random.Random(3)
    points = []
    for _ in range(120):
        g = new_tangle(v, CostMeter())
        # Mix of chains and shared trees with sizes up to a few thousand.
        t = Term(v.get("c"))
        size = rng.randint(1, 2000)
        for _ in range(size):
            sym = v.get(rng.choice(["d0", "d1", "f"]))
            t = Term(sym, (t,) * sym.arity)
        before = g.meter.ram_ops
        g.import_term(t)
        points.append((compact_size(t), g.meter.ram_ops - before))
    # The declared menu charges at most (3 + 2*arity) ops per distinct node
    # plus one probe per dag edge; a slope of 10 covers vocab arity 2.
    for k, ops in points:
        assert ops <= 10 * k + 10


def test_word_bits_tracks_growth():
    v = vocab_fc()
    g = new_tangle(v)
    d0 = v.get("d0")
    nid = g.intern(v.get("c"), ())
    for _ in range(100):
        nid = g.intern(d0, (nid,))
    st = g.stats()
    assert st.word_bits == g.meter.word_bits_max
    assert 2 ** st.word_bits >= st.vertices

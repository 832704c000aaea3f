"""Engines: oracle, evaluation, enumeration, dedup wrapper, delay stats."""

import pytest

from conftest import random_graph_db
from cqsj import engines as en
from cqsj import fixtures as fx
from cqsj import structure as st
from cqsj.qmodel import Database, Pair, make_query, parse_database, parse_query


def section3_database() -> Database:
    return parse_database(
        "R(pair(a,x), pair(b,u)). R(pair(b,u), pair(c,y)). "
        "R(pair(a,x), pair(d,v)). R(pair(d,v), pair(c,y))."
    )


# -- oracle --------------------------------------------------------------------


def test_oracle_on_encoded_diamond():
    q = fx.fixture("diamond")
    got = en.oracle_enumerate(q, section3_database())
    expect = {
        (Pair("a", "x"), Pair("b", "u"), Pair("c", "y"), Pair("d", "v")),
        (Pair("a", "x"), Pair("d", "v"), Pair("c", "y"), Pair("b", "u")),
        (Pair("a", "x"), Pair("b", "u"), Pair("c", "y"), Pair("b", "u")),
        (Pair("a", "x"), Pair("d", "v"), Pair("c", "y"), Pair("d", "v")),
    }
    assert got == expect
    # the construction forces the y tag in the third slot: the variant with
    # an x tag there is not an answer
    assert (Pair("a", "x"), Pair("d", "v"), Pair("c", "x"), Pair("b", "u")) not in got


def test_oracle_boolean_triangle_on_triangle_free_graph():
    q = make_query(fx.fixture("triangle").atoms, ())
    db = parse_database("R(a,b). R(b,c). R(c,d).")
    assert en.oracle_enumerate(q, db) == set()


def test_oracle_path_answers():
    q = fx.fixture("path2_full")
    db = parse_database("R(a,b). R(b,c).")
    assert en.oracle_enumerate(q, db) == {("a", "b", "c")}


def test_oracle_empty_query_yields_empty_tuple():
    q = make_query((), ())
    assert en.oracle_enumerate(q, Database()) == {()}


# -- evaluation ------------------------------------------------------------------


def test_eval_boolean_examples():
    q = make_query(fx.fixture("path2_full").atoms, ())
    assert en.eval_boolean(q, parse_database("R(a,b). R(b,c)."))
    assert not en.eval_boolean(q, parse_database("R(a,b). R(c,d)."))


def test_eval_boolean_requires_acyclic():
    q = make_query(fx.fixture("triangle").atoms, ())
    with pytest.raises(st.NotAcyclicError):
        en.eval_boolean(q, Database())


def test_eval_unary_example():
    q = fx.fixture("unary_path")
    assert en.eval_unary(q, parse_database("R(a,b). R(b,c).")) == {"b"}


def test_eval_matches_oracle_random():
    bq = make_query(fx.fixture("path2_full").atoms, ())
    uq = fx.fixture("unary_path")
    for seed in range(40):
        db = random_graph_db(10, 18, seed)
        assert en.eval_boolean(bq, db) == bool(en.oracle_enumerate(bq, db))
        assert en.eval_unary(uq, db) == {t[0] for t in en.oracle_enumerate(uq, db)}


def test_eval_ticks_linear():
    bq = make_query(fx.fixture("path2_full").atoms, ())
    sizes = (500, 1000, 2000)
    ticks = []
    for m in sizes:
        db = random_graph_db(m // 2, m, 3)
        t = en.Ticker()
        en.eval_boolean(bq, db, t)
        ticks.append(t.count / db.size)
    assert max(ticks) / min(ticks) < 2.5


# -- first solution ----------------------------------------------------------------


def test_first_solution_examples(diamond, diamond_red):
    db = parse_database("R(a,b). R(b,c).")
    assert en.first_solution(diamond, db) == ("a", "b", "c", "b")
    assert en.first_solution(diamond, Database()) is None


def test_first_solution_on_single_edge_gadget(diamond_red):
    from cqsj import reductions as rd

    g = rd.make_graph([("a", "b")])
    db = rd.gadget_triangle_mirrorfig1(g)
    got = en.first_solution(diamond_red, db)
    assert got == (Pair("a", "x"), Pair("b", "y"), Pair("b", "z"), Pair("b", "y"))


def test_first_solution_rejects_cyclic_core():
    with pytest.raises(en.CyclicCoreError):
        en.first_solution(fx.fixture("diamond_reversed"), Database())


def test_first_solution_agrees_with_boolean_truth():
    q = fx.fixture("diamond_red")
    bq = make_query(st.full_core(q).atoms, ())
    for seed in range(30):
        db = random_graph_db(12, 24, seed, red_p=0.3)
        got = en.first_solution(q, db)
        assert (got is None) == (not en.eval_boolean(bq, db))
        if got is not None:
            assert got in en.oracle_enumerate(q, db)


# -- full acyclic enumeration ---------------------------------------------------------


def test_enum_full_acyclic_examples():
    q = fx.fixture("path2_full")
    db = parse_database("R(a,b). R(b,c). R(b,d).")
    assert set(en.enum_full_acyclic(q, db)) == {("a", "b", "c"), ("a", "b", "d")}


def test_enum_full_acyclic_empty_database():
    q = fx.fixture("path2_full")
    cursor = en.enum_full_acyclic(q, Database())
    assert cursor.next() is None
    assert cursor.phase == "done"


def test_enum_full_acyclic_rejects_cyclic():
    with pytest.raises(st.NotAcyclicError):
        en.enum_full_acyclic(fx.fixture("triangle"), Database())


def test_enum_full_acyclic_disconnected_components():
    q = parse_query("Q(x,y,u,v) :- R(x,y), S(u,v).")
    db = parse_database("R(a,b). S(c,d). S(c,e).")
    assert set(en.enum_full_acyclic(q, db)) == {
        ("a", "b", "c", "d"), ("a", "b", "c", "e")}


def test_enum_full_acyclic_repeated_variable_atom():
    q = parse_query("Q(x,y) :- R(x,x), R(x,y).")
    db = parse_database("R(a,a). R(a,b). R(b,c).")
    assert set(en.enum_full_acyclic(q, db)) == {("a", "a"), ("a", "b")}


# -- untangle / mirror enumeration -----------------------------------------------------


def test_enum_untangle_matches_oracle(diamond_red):
    _, witness = st.is_untangleable(diamond_red)
    for seed in range(25):
        db = random_graph_db(12, 26, seed, red_p=0.4)
        got = list(en.enum_untangle(diamond_red, witness, db))
        assert len(got) == len(set(got))
        assert set(got) == en.oracle_enumerate(diamond_red, db)


def test_enum_untangle_on_encoded_database(diamond_red):
    # four-edge pair-encoded instance from the worked example, marked middle
    db = section3_database()
    db.add_fact("P", (Pair("b", "u"),))
    _, witness = st.is_untangleable(diamond_red)
    got = set(en.enum_untangle(diamond_red, witness, db))
    assert got == en.oracle_enumerate(diamond_red, db)


def test_enum_untangle_rejects_foreign_witness(diamond, diamond_red):
    _, witness = st.is_untangleable(diamond_red)
    with pytest.raises(en.InvalidWitnessError):
        en.enum_untangle(diamond, witness, Database())


def test_enum_untangle_multi_step_chain():
    q = fx.fixture("bowtie_chain")
    _, witness = st.is_untangleable(q)
    for seed in range(10):
        db = random_graph_db(7, 14, seed, hubs=3)
        got = list(en.enum_untangle(q, witness, db))
        assert len(got) == len(set(got))
        assert set(got) == en.oracle_enumerate(q, db)


def test_enum_mirror_examples(diamond):
    witness = st.is_mirror(diamond)
    db = parse_database("R(a,b). R(b,c). R(a,d). R(d,c).")
    assert set(en.enum_mirror(diamond, witness, db)) == {
        ("a", "b", "c", "b"), ("a", "b", "c", "d"),
        ("a", "d", "c", "b"), ("a", "d", "c", "d")}
    db = parse_database("R(a,b). R(b,c).")
    assert list(en.enum_mirror(diamond, witness, db)) == [("a", "b", "c", "b")]


def test_enum_mirror_matches_oracle(diamond):
    witness = st.is_mirror(diamond)
    for seed in range(25):
        db = random_graph_db(14, 30, seed)
        got = list(en.enum_mirror(diamond, witness, db))
        assert len(got) == len(set(got))
        assert set(got) == en.oracle_enumerate(diamond, db)


# -- bespoke strategies ------------------------------------------------------------------


def test_two_triangles_self_loop_only():
    db = parse_database("R(a,a).")
    assert list(en.enum_bespoke("TWO_TRIANGLES", db)) == [("a", "a", "a", "a")]


def test_two_loops_self_loop_only():
    db = parse_database("R(a,a).")
    assert list(en.enum_bespoke("TWO_LOOPS", db)) == [("a", "a", "a", "a", "a")]


@pytest.mark.parametrize("strategy,kwargs", [
    ("TWO_LOOPS", dict(loops=4)),
    ("TWO_TRIANGLES", dict(loops=4)),
    ("SPIKE_Q2", dict(red_p=0.3)),
    ("SPIKE_Q3", dict(red_p=0.2)),
])
def test_bespoke_matches_oracle(strategy, kwargs):
    q = en.bespoke_query(strategy)
    for seed in range(20):
        db = random_graph_db(12, 20, seed, **kwargs)
        got = list(en.enum_bespoke(strategy, db))
        assert len(got) == len(set(got))
        assert set(got) == en.oracle_enumerate(q, db), (strategy, seed)


def test_bespoke_raw_duplication_bound():
    for strategy in ("SPIKE_Q2", "SPIKE_Q3"):
        bound = en.BESPOKE_DUPLICATION[strategy]
        for seed in range(6):
            db = random_graph_db(10, 16, seed, red_p=0.3)
            raw = list(en.enum_bespoke(strategy, db, dedup=False))
            counts = {}
            for item in raw:
                counts[item] = counts.get(item, 0) + 1
            assert max(counts.values(), default=0) <= bound


def test_bespoke_rejects_wrong_schema():
    db = parse_database("R(a,b). T(a,b).")
    with pytest.raises(en.WrongSchemaError):
        en.enum_bespoke("TWO_LOOPS", db)
    db = parse_database("R(a,b). P(a).")
    with pytest.raises(en.WrongSchemaError):
        en.enum_bespoke("TWO_TRIANGLES", db)  # marked nodes not in this schema


def test_bespoke_unknown_strategy():
    with pytest.raises(ValueError):
        en.enum_bespoke("NOPE", Database())


# -- cheater's wrapper ----------------------------------------------------------------


def _stream_cursor(items, gap_ticks=1):
    ticker = en.Ticker()

    def gen():
        for item in items:
            ticker.tick(gap_ticks)
            yield item

    return en.EnumerationCursor(ticker, 0, gen())


def test_cheater_dedup_basic():
    out = list(en.cheater_dedup(_stream_cursor(list("aabbcc")), 2))
    assert out == ["a", "b", "c"]


def test_cheater_dedup_violation():
    cursor = en.cheater_dedup(_stream_cursor(list("aba")), 1)
    assert cursor.next() == "a"
    assert cursor.next() == "b"
    with pytest.raises(en.DuplicateBoundError):
        cursor.next()


def test_cheater_dedup_gap_bound():
    for c in (1, 2, 3, 4):
        items = [x for x in range(50) for _ in range(c)]
        inner = _stream_cursor(items, gap_ticks=7)
        stats = en.measure_delay(lambda: en.cheater_dedup(_stream_cursor(items, 7), c))
        inner_stats = en.measure_delay(lambda: _stream_cursor(items, 7))
        assert stats.answers == 50
        assert stats.max_gap <= c * inner_stats.max_gap + 4 * c + 4


def test_cheater_dedup_set_equality_on_mirror_stream(diamond):
    witness = st.is_mirror(diamond)
    db = random_graph_db(12, 25, 5)
    plain = set(en.enum_mirror(diamond, witness, db))
    wrapped = list(en.cheater_dedup(en.enum_mirror(diamond, witness, db), 2))
    assert set(wrapped) == plain and len(wrapped) == len(plain)


# -- delay measurement -------------------------------------------------------------------


def test_measure_delay_counts_answers():
    q = fx.fixture("path2_full")
    db = random_graph_db(6, 10, 1)
    stats = en.measure_delay(lambda: en.enum_full_acyclic(q, db))
    assert stats.answers == len(en.oracle_enumerate(q, db))
    assert stats.max_gap >= 1
    assert stats.preprocessing_ticks > 0
    payload = stats.to_json()
    assert set(payload) == {"preprocessing_ticks", "max_gap", "answers", "wall_ms"}


def test_streams_are_deterministic():
    q = fx.fixture("diamond")
    witness = st.is_mirror(q)
    db = random_graph_db(12, 25, 9)
    first = list(en.enum_mirror(q, witness, db))
    second = list(en.enum_mirror(q, witness, db))
    assert first == second

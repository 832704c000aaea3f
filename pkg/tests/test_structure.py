"""Structural analysis: acyclicity, cores, images, untangling, mirrors."""

from conftest import random_query
from cqsj import fixtures as fx
from cqsj import structure as st
from cqsj.qmodel import make_query, parse_query, serialize_query


# -- acyclicity ----------------------------------------------------------------


def test_gyo_path_is_acyclic():
    tree = st.gyo_acyclic(fx.fixture("path2_full"))
    assert tree is not None
    assert tree.satisfies_running_intersection()


def test_gyo_triangle_is_cyclic():
    assert st.gyo_acyclic(fx.fixture("triangle")) is None


def test_gyo_projected_triangle_is_cyclic():
    assert st.gyo_acyclic(fx.fixture("cyclic_triple")) is None


def test_gyo_self_loop():
    assert st.gyo_acyclic(parse_query("Q() :- R(x,x).")) is not None


def test_gyo_deterministic():
    q = parse_query("Q(a,b,c,d) :- S(a,b,c), R(a,b), R(b,c), R(c,a), R(a,d).")
    t1 = st.gyo_acyclic(q)
    t2 = st.gyo_acyclic(q)
    assert t1 is not None and t1.parent == t2.parent


def test_gyo_matches_brute_force_on_fixtures():
    for name in fx.fixture_names():
        q = fx.fixture(name)
        if len(q.atoms) <= 6:
            assert st.is_acyclic(q) == st.brute_force_acyclic(q), name


def test_gyo_matches_brute_force_random():
    for seed in range(60):
        q = random_query(seed)
        assert st.is_acyclic(q) == st.brute_force_acyclic(q), serialize_query(q)


def test_returned_trees_satisfy_running_intersection():
    for name in fx.fixture_names():
        tree = st.gyo_acyclic(fx.fixture(name))
        if tree is not None:
            assert tree.satisfies_running_intersection(), name


# -- free-connexity ---------------------------------------------------------------


def test_projected_path_not_free_connex():
    assert not st.is_free_connex(fx.fixture("path2_proj"))


def test_full_acyclic_always_free_connex():
    assert st.is_free_connex(fx.fixture("path2_full"))


def test_unary_acyclic_free_connex():
    assert st.is_free_connex(fx.fixture("unary_path"))


def test_cyclic_not_free_connex():
    assert not st.is_free_connex(fx.fixture("triangle"))


# -- endomorphisms, minimality, cores ------------------------------------------------


def test_diamond_endomorphisms():
    endos = st.endomorphisms(fx.fixture("diamond"))
    assert len(endos) == 4
    bijective = [m for m in endos if len(set(m.values())) == len(m)]
    assert len(bijective) == 2
    swap = {"x": "x", "y": "y", "u": "v", "v": "u"}
    assert {tuple(sorted(m.items())) for m in bijective} == {
        tuple(sorted({"x": "x", "y": "y", "u": "u", "v": "v"}.items())),
        tuple(sorted(swap.items())),
    }


def test_single_atom_only_identity():
    q = parse_query("Q(x,y) :- R(x,y).")
    assert st.endomorphisms(q) == [{"x": "x", "y": "y"}]


def test_self_join_free_is_minimal():
    assert st.is_minimal(fx.fixture("path2_proj"))
    assert st.is_minimal(fx.fixture("cyclic_triple"))


def test_boolean_closure_of_marked_diamond_not_minimal():
    q = make_query(fx.fixture("diamond_red").atoms, ())
    assert not st.is_minimal(q)


def test_full_queries_trivially_minimal():
    assert st.is_minimal(fx.fixture("ring8"))


def test_minimal_form_idempotent():
    q = make_query(fx.fixture("diamond_red").atoms, ())
    m1 = st.minimal_form(q)
    assert st.is_minimal(m1)
    assert st.queries_isomorphic(m1, st.minimal_form(m1))


def test_minimal_form_homomorphic_both_ways():
    for name in ("diamond", "diamond_red", "ring8", "twin_loops"):
        q = make_query(fx.fixture(name).atoms, ())
        m, _ = st.minimal_form_with_retraction(q)
        assert st.homomorphism_exists(q, m)
        assert st.homomorphism_exists(m, q)


def test_marked_diamond_full_core_is_marked_path():
    fc = st.full_core(fx.fixture("diamond_red"))
    expect = parse_query("Q(x,y,z) :- R(x,y), R(y,z), P(y).")
    assert st.queries_isomorphic(fc, expect)


def test_reversed_diamond_core_is_itself():
    q = fx.fixture("diamond_reversed")
    c = st.core(q)
    assert set(c.atoms) == set(q.atoms)
    assert not st.is_acyclic(c)


def test_ring8_full_core_is_marked_path():
    fc = st.full_core(fx.fixture("ring8"))
    expect = parse_query("Q(x,y,z) :- R(x,y), R(y,z), P(y).")
    assert st.queries_isomorphic(fc, expect)


def test_spiked_rings_share_the_marked_path_core():
    expect = parse_query("Q(x,y,z) :- R(x,y), R(y,z), P(y).")
    for name in ("ring8_io", "ring8_spikes", "ring8_spikes_flip"):
        assert st.queries_isomorphic(st.full_core(fx.fixture(name)), expect), name


def test_windmill_core_is_hub_with_inner_triangle():
    expect = parse_query("Q(a,b,c) :- S(a,b,c), R(a,b), R(b,c), R(c,a).")
    for name in ("windmill", "windmill_tail", "double_kite"):
        fc = st.full_core(fx.fixture(name))
        assert st.queries_isomorphic(fc, expect), name
        assert st.is_acyclic(fc)


def test_twin_loop_cores_are_self_loops():
    expect = parse_query("Q(a) :- R(a,a).")
    for name in ("twin_loops", "twin_triangles", "square_loops"):
        assert st.queries_isomorphic(st.full_core(fx.fixture(name)), expect), name


def test_cycle20_core_is_two_path():
    fc = st.full_core(fx.fixture("cycle20"))
    assert st.queries_isomorphic(fc, parse_query("Q(x,y,z) :- R(x,y), R(y,z)."))


# -- images ---------------------------------------------------------------------


def test_images_of_diamond():
    q = fx.fixture("diamond")
    imgs = st.images(q)
    assert len(imgs) == 3  # whole query plus the two symmetric paths
    assert len(st.images_up_to_renaming(q)) == 2
    atom_sets = {img.atoms for img in imgs}
    assert frozenset(q.atoms) in atom_sets


def test_images_of_ring8_match_known_shapes():
    q = fx.fixture("ring8")
    imgs = st.images(q)
    assert len(imgs) == 4
    sizes = sorted(len(i.atoms) for i in imgs)
    assert sizes == [3, 5, 5, 9]
    fc = st.full_core(q)
    assert any(st.queries_isomorphic(i.query, fc) for i in imgs)


def test_single_atom_single_image():
    q = parse_query("Q(x,y) :- R(x,y).")
    assert len(st.images(q)) == 1


def test_every_image_is_an_endomorphism_range():
    for name in ("diamond", "ring8", "windmill", "twin_loops"):
        q = fx.fixture(name)
        for img in st.images(q):
            assert st.has_endo_with_range(q, img.atoms) is not None


# -- untangling -------------------------------------------------------------------


def test_untangling_step_windmill_tail():
    # removing the hub-plus-pendant image leaves one binary atom and four
    # unary atoms over two rewritten symbols, an acyclic pattern
    q = fx.fixture("windmill_tail")
    wanted = frozenset(
        parse_query("Q(u,w1,w2,w3,v,y) :- S(w1,w2,w3), R(u,w1), R(w1,w2), "
                    "R(w2,w3), R(w3,w1), R(w2,v), R(y,v).").atoms)
    image = next(i for i in st.images(q) if i.atoms == wanted)
    out = st.untangling_step(q, image.atoms)
    binaries = [a for a in out.atoms if a.symbol.arity == 2]
    unaries = [a for a in out.atoms if a.symbol.arity == 1]
    assert len(binaries) == 1 and len(unaries) == 4
    assert len({a.symbol.name for a in unaries}) == 2
    assert len(out.all_vars) == 3
    assert st.is_acyclic(out)


def test_untangling_step_windmill():
    # removing the hub image leaves the outer triangle with two marks
    q = fx.fixture("windmill")
    image = next(i for i in st.images(q) if len(i.atoms) == 6)
    out = st.untangling_step(q, image.atoms)
    assert st.queries_isomorphic(
        out,
        parse_query("Q(x,y,z) :- R(x,y), R(y,z), R(z,x), R__0(x), R__1(y)."))
    assert not st.is_acyclic(out)


def test_untangling_with_whole_query_is_empty():
    q = fx.fixture("diamond")
    out = st.untangling_step(q, frozenset(q.atoms))
    assert out.atoms == () and out.free_vars == ()


def test_untangleable_fixtures():
    assert st.is_untangleable(fx.fixture("windmill_tail"))[0] == "yes"
    assert st.is_untangleable(fx.fixture("windmill"))[0] == "no"
    assert st.is_untangleable(fx.fixture("bowtie_chain"))[0] == "yes"
    assert st.is_untangleable(fx.fixture("twin_loops"))[0] == "no"
    assert st.is_untangleable(fx.fixture("twin_triangles"))[0] == "no"
    assert st.is_untangleable(fx.fixture("square_loops"))[0] == "no"
    assert st.is_untangleable(fx.fixture("double_kite"))[0] == "no"


def test_untangleable_ring_family():
    for name in ("ring8", "ring8_io", "ring8_spikes", "ring8_spikes_flip"):
        status, witness = st.is_untangleable(fx.fixture(name))
        assert status == "yes", name
        assert st.validate_untangling_witness(fx.fixture(name), witness), name


def test_bowtie_chain_witness_has_three_steps():
    status, witness = st.is_untangleable(fx.fixture("bowtie_chain"))
    assert status == "yes"
    assert len(witness.steps) >= 2  # the chain cannot shortcut to one step
    assert st.validate_untangling_witness(fx.fixture("bowtie_chain"), witness)


def test_budget_exhaustion_reports_unknown():
    status, witness = st.is_untangleable(fx.fixture("windmill"), budget=0)
    assert status == "unknown" and witness is None


def test_witness_validation_rejects_wrong_target():
    _, witness = st.is_untangleable(fx.fixture("windmill_tail"))
    assert not st.validate_untangling_witness(fx.fixture("diamond"), witness)


# -- mirrors ----------------------------------------------------------------------


def test_diamond_is_mirror():
    witness = st.is_mirror(fx.fixture("diamond"))
    assert witness is not None
    assert len(witness.image_atoms) == 2
    assert st.validate_mirror_witness(fx.fixture("diamond"), witness)


def test_marked_diamond_is_not_mirror():
    assert st.is_mirror(fx.fixture("diamond_red")) is None


def test_cycle20_is_not_mirror():
    assert st.is_mirror(fx.fixture("cycle20")) is None


def test_acyclic_fork_is_mirror():
    q = parse_query("Q(x,y,z) :- R(x,y), R(x,z).")
    witness = st.is_mirror(q)
    assert witness is not None


# -- hardness transfer ---------------------------------------------------------------


def test_windmill_hardness_witness():
    got = st.hardness_transfer(fx.fixture("windmill"))
    assert got is not None
    image, rewritten = got
    assert not st.is_acyclic(st.core(rewritten))
    assert st.queries_isomorphic(
        rewritten,
        parse_query("Q(x,y,z) :- R(x,y), R(y,z), R(z,x), R__0(x), R__1(y)."))


def test_no_transfer_for_diamond_or_double_kite():
    assert st.hardness_transfer(fx.fixture("diamond")) is None
    assert st.hardness_transfer(fx.fixture("double_kite")) is None
    assert st.hardness_transfer(fx.fixture("square_loops")) is None


# -- canonical forms -------------------------------------------------------------------


def test_canonical_invariant_under_renaming():
    q = fx.fixture("ring8")
    renamed = q.rename({v: f"w{i}" for i, v in enumerate(q.all_vars)})
    assert st.canonical_key(q) == st.canonical_key(renamed)


def test_canonical_distinguishes_orientation():
    assert st.canonical_key(fx.fixture("diamond")) != st.canonical_key(
        fx.fixture("diamond_reversed"))


def test_classify_minimizes_first():
    q = parse_query("Q(x) :- R(x,y), R(x,z).")  # y/z fold together
    report = st.classify(q)
    assert report.minimized
    assert len(report.analyzed.atoms) == 1


def test_classify_verdicts_never_contradict():
    # a single query must not be both constant-delay and conditionally hard
    # for linear delay
    for name in fx.fixture_names():
        budget = 400 if name == "cycle20" else st.DEFAULT_UNTANGLE_BUDGET
        report = st.classify(fx.fixture(name), untangle_budget=budget)
        const = report.verdict_for(st.PROBLEM_CONST)
        linear = report.verdict_for(st.PROBLEM_LINEAR)
        if const.verdict == st.V_CONSTANT:
            assert linear.verdict == st.V_LINEAR_DELAY, name
        if linear.verdict == st.V_COND_HARD:
            assert const.verdict != st.V_CONSTANT, name

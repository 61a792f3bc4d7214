import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relcluster.corpus import IdfWeights, ValidationError, compute_idf
from relcluster.embeddings import EmbeddingTable
from relcluster.features import (
    HEAD,
    KB_TYPE,
    NER_TAG,
    TAIL,
    DegeneratePathError,
    TypeVocabulary,
    WeightingConfig,
    build_type_vocabulary,
    dep_reweighted_vector,
    dep_weight,
    entity_type_vector,
    featurize_corpus,
    idf_embedding_vector,
    load_features,
    save_features,
    sum_embedding_vector,
    tfidf_vector,
)

from .conftest import make_instance, make_mention, small_corpus


def table2d(**vectors) -> EmbeddingTable:
    return EmbeddingTable(
        dim=2, vectors={k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
    )


CFG = WeightingConfig(c_in=1.85, c_out=0.02)


# --- dep_weight -------------------------------------------------------------


def test_in_path_weight_value():
    w = ["t"] * 10
    assert dep_weight("t", w, {"t", "u", "v", "x"}, CFG) == 1.85 * 10 / 4 == 4.625


def test_out_of_path_weight_is_constant():
    assert dep_weight("far", ["a", "b", "far"], {"a"}, CFG) == 0.02


def test_weight_reduces_to_membership_when_w_equals_d():
    cfg = WeightingConfig(c_in=1.0, c_out=0.0)
    assert dep_weight("a", ["a", "b"], {"a", "b"}, cfg) == 1.0


def test_membership_is_case_insensitive():
    assert dep_weight("Loves", ["x", "Loves"], {"loves"}, CFG) == 1.85 * 2 / 1


def test_empty_path_raises():
    with pytest.raises(DegeneratePathError):
        dep_weight("a", ["a", "b"], set(), CFG)


def test_config_bounds():
    with pytest.raises(ValidationError):
        WeightingConfig(c_in=0.5)
    with pytest.raises(ValidationError):
        WeightingConfig(c_out=-0.1)


@given(
    w=st.lists(st.sampled_from("abcdef"), min_size=1, max_size=12),
    d=st.sets(st.sampled_from("abcdef"), min_size=1, max_size=6),
    token=st.sampled_from("abcdef"),
    c_in=st.floats(min_value=1.0, max_value=5.0),
    c_out=st.floats(min_value=0.0, max_value=0.5),
)
def test_weight_dichotomy(w, d, token, c_in, c_out):
    cfg = WeightingConfig(c_in=c_in, c_out=c_out)
    value = dep_weight(token, w, d, cfg)
    assert value in (c_in * len(w) / len(d), c_out)
    assert (value == c_out) == (token not in d)


# --- embedding sums ---------------------------------------------------------


def test_dep_reweighted_hand_computed():
    table = table2d(alice=[1, 0], loves=[2, 1], bob=[0, 3])
    inst = make_instance(tokens=("alice", "loves", "bob"), dep_path=("loves",))
    vec = dep_reweighted_vector(inst, table, CFG)
    # in-path weight = 1.85 * 3 / 1 = 5.55; out weight 0.02
    np.testing.assert_allclose(vec, [0.02 * 1 + 5.55 * 2, 5.55 * 1 + 0.02 * 3])
    np.testing.assert_allclose(vec, [11.12, 5.61])


def test_dep_reweighted_scales_plain_sum_when_path_covers_sentence():
    table = table2d(a=[1.0, -2.0], b=[0.5, 4.0])
    inst = make_instance(tokens=("a", "b", "a"), dep_path=("a", "b"))
    cfg = WeightingConfig(c_in=1.7, c_out=0.0)
    # |W|/|D| = 3/2, so every token carries c_in * 1.5
    np.testing.assert_allclose(
        dep_reweighted_vector(inst, table, cfg),
        1.7 * 1.5 * sum_embedding_vector(inst, table),
    )


def test_dep_reweighted_all_oov_is_zero():
    table = table2d(known=[1, 1])
    inst = make_instance(tokens=("mystery", "words", "only"), dep_path=("words",))
    np.testing.assert_array_equal(dep_reweighted_vector(inst, table, CFG), [0.0, 0.0])


def test_dep_reweighted_matches_per_occurrence_sum():
    rng = np.random.default_rng(3)
    words = ["w%d" % i for i in range(8)]
    table = EmbeddingTable(
        dim=4, vectors={w: rng.normal(size=4) for w in words[:6]}
    )
    tokens = tuple(rng.choice(words, size=11))
    path = frozenset(rng.choice(words[:4], size=2))
    inst = make_instance(tokens=tokens, dep_path=tuple(t for t in path if t in tokens) or (tokens[1],))
    expected = np.zeros(4)
    for tok in inst.tokens:
        vec = table.lookup(tok)
        if vec is not None:
            expected += dep_weight(tok, inst.tokens, inst.dep_path_terms, CFG) * vec
    np.testing.assert_allclose(dep_reweighted_vector(inst, table, CFG), expected)


def test_sum_single_token():
    table = table2d(a=[2.0, 7.0])
    inst = make_instance(tokens=("a", "zz"), dep_path=("a",))
    np.testing.assert_array_equal(sum_embedding_vector(inst, table), [2.0, 7.0])


def test_sum_counts_multiplicity():
    table = table2d(a=[1.0, -1.0])
    inst = make_instance(tokens=("a", "a"), dep_path=("a",))
    np.testing.assert_array_equal(sum_embedding_vector(inst, table), [2.0, -2.0])


def test_sum_hand_computed():
    table = table2d(a=[1, 2], b=[3, 4], c=[-1, 0])
    inst = make_instance(tokens=("a", "b", "c"), dep_path=("b",))
    np.testing.assert_array_equal(sum_embedding_vector(inst, table), [3.0, 6.0])


def test_idf_sum_reduces_to_plain_sum_with_unit_weights():
    table = table2d(a=[1, 2], b=[3, 4])
    idf = IdfWeights(values={"a": 1.0, "b": 1.0}, unseen=1.0)
    inst = make_instance(tokens=("a", "b"), dep_path=("a",))
    np.testing.assert_array_equal(
        idf_embedding_vector(inst, table, idf), sum_embedding_vector(inst, table)
    )


def test_idf_sum_hand_computed():
    corpus = small_corpus(
        [
            make_instance("1", tokens=("a", "b"), dep_path=("a",)),
            make_instance("2", tokens=("a", "c"), dep_path=("a",)),
        ]
    )
    idf = compute_idf(corpus)
    table = table2d(a=[1, 0], b=[0, 2])
    vec = idf_embedding_vector(corpus.instances[0], table, idf)
    # idf(a) = ln(3/3)+1 = 1, idf(b) = ln(3/2)+1
    np.testing.assert_allclose(vec, [1.0, 2 * (math.log(1.5) + 1)])
    np.testing.assert_allclose(vec, [1.0, 2.8109302162163288])


def test_idf_sum_all_oov_is_zero():
    table = table2d(known=[5, 5])
    idf = IdfWeights(values={}, unseen=2.0)
    inst = make_instance(tokens=("other", "words"), dep_path=("other",))
    np.testing.assert_array_equal(idf_embedding_vector(inst, table, idf), [0.0, 0.0])


# --- tfidf ------------------------------------------------------------------


def test_tfidf_hand_computed():
    idf = IdfWeights(values={"born": 2.0, "in": 1.0}, unseen=9.0)
    inst = make_instance(tokens=("born", "in", "born"), dep_path=("in",))
    vocab = ["born", "in"]
    assert tfidf_vector(inst, vocab, idf) == {0: 4.0, 1: 1.0}


def test_tfidf_outside_vocab_dropped():
    idf = IdfWeights(values={"x": 1.0}, unseen=1.0)
    inst = make_instance(tokens=("born", "in"), dep_path=("in",))
    assert tfidf_vector(inst, ["x"], idf) == {}


def test_tfidf_linear_in_count():
    idf = IdfWeights(values={"born": 1.5}, unseen=1.0)
    one = make_instance(tokens=("born", "x"), dep_path=("x",))
    two = make_instance(tokens=("born", "born", "x"), dep_path=("x",))
    vocab = ["born"]
    assert tfidf_vector(two, vocab, idf)[0] == 2 * tfidf_vector(one, vocab, idf)[0]


@given(
    tokens=st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=2, max_size=10)
)
def test_tfidf_matches_brute_force(tokens):
    corpus = small_corpus([make_instance("i", tokens=tokens, dep_path=(tokens[0],))])
    idf = compute_idf(corpus)
    vocab = corpus.vocabulary()
    inst = corpus.instances[0]
    got = tfidf_vector(inst, vocab, idf)
    for col, token in enumerate(vocab):
        count = sum(1 for t in inst.tokens if t.lower() == token)
        if count:
            assert got[col] == count * idf[token]
        else:
            assert col not in got


# --- entity types -----------------------------------------------------------


def test_type_vocabulary_from_homogeneous_corpus():
    instances = [
        make_instance(
            f"i{j}",
            head=make_mention(0, 1, ner="PERSON", kb=()),
            tail=make_mention(2, 3, ner="LOCATION", kb=()),
        )
        for j in range(3)
    ]
    tv = build_type_vocabulary(small_corpus(instances))
    assert tv.entries == (
        (HEAD, NER_TAG, "PERSON"),
        (TAIL, NER_TAG, "LOCATION"),
    )


def test_type_vocabulary_without_kb_types_has_only_ner_entries():
    inst = make_instance(head=make_mention(0, 1, kb=()), tail=make_mention(2, 3, kb=()))
    tv = build_type_vocabulary(small_corpus([inst]))
    assert all(kind == NER_TAG for _, kind, _ in tv.entries)


def test_same_label_on_both_roles_is_two_entries():
    inst = make_instance(
        head=make_mention(0, 1, ner="PERSON", kb=("Agent",)),
        tail=make_mention(2, 3, ner="PERSON", kb=("Agent",)),
    )
    tv = build_type_vocabulary(small_corpus([inst]))
    assert (HEAD, KB_TYPE, "Agent") in tv.entries
    assert (TAIL, KB_TYPE, "Agent") in tv.entries
    assert len(tv) == 4


def test_entity_type_vector_sets_expected_indices():
    inst = make_instance(
        head=make_mention(0, 1, ner="PERSON", kb=()),
        tail=make_mention(2, 3, ner="LOCATION", kb=()),
    )
    tv = build_type_vocabulary(small_corpus([inst]))
    assert entity_type_vector(inst, tv) == [0, 1]


def test_entity_type_vector_keeps_o_tag():
    inst = make_instance(
        head=make_mention(0, 1, ner="O", kb=()),
        tail=make_mention(2, 3, ner="O", kb=()),
    )
    tv = build_type_vocabulary(small_corpus([inst]))
    assert entity_type_vector(inst, tv) == [0, 1]
    assert tv.entries == ((HEAD, NER_TAG, "O"), (TAIL, NER_TAG, "O"))


def test_entity_type_vector_drops_unseen_labels():
    known = make_instance(
        "k",
        head=make_mention(0, 1, ner="PERSON", kb=()),
        tail=make_mention(2, 3, ner="LOCATION", kb=()),
    )
    tv = build_type_vocabulary(small_corpus([known]))
    alien = make_instance(
        "a",
        head=make_mention(0, 1, ner="MONEY", kb=("Currency",)),
        tail=make_mention(2, 3, ner="LOCATION", kb=()),
    )
    assert entity_type_vector(alien, tv) == [1]


@given(
    head_kb=st.lists(st.sampled_from(["A", "B", "C"]), unique=True, max_size=3),
    tail_kb=st.lists(st.sampled_from(["A", "B", "C"]), unique=True, max_size=3),
)
def test_entity_type_vector_nonzero_bound(head_kb, tail_kb):
    inst = make_instance(
        head=make_mention(0, 1, kb=head_kb),
        tail=make_mention(2, 3, kb=tail_kb),
    )
    tv = build_type_vocabulary(small_corpus([inst]))
    nonzeros = entity_type_vector(inst, tv)
    assert len(nonzeros) <= len(head_kb) + len(tail_kb) + 2


# --- featurize_corpus -------------------------------------------------------


def full_corpus():
    return small_corpus(
        [
            make_instance("a", tokens=("x", "loves", "y"), dep_path=("loves",), gold="r1"),
            make_instance("b", tokens=("x", "hates", "y"), dep_path=("hates",), gold="r2"),
            make_instance("c", tokens=("x", "loves", "z"), dep_path=("loves",), gold="r1"),
        ]
    )


def full_table():
    rng = np.random.default_rng(0)
    words = ["x", "y", "z", "loves", "hates"]
    return EmbeddingTable(dim=3, vectors={w: rng.normal(size=3) for w in words})


def test_single_block_selection():
    fm = featurize_corpus(full_corpus(), full_table(), None, CFG, ["emb_dep"])
    assert fm.block_names() == ["emb_dep"]
    assert fm.block("emb_dep").data.shape == (3, 3)
    assert not fm.block("emb_dep").is_sparse


def test_all_blocks_bookkeeping():
    corpus, table = full_corpus(), full_table()
    idf = compute_idf(corpus)
    fm = featurize_corpus(
        corpus, table, idf, CFG, ["tfidf", "emb_sum", "emb_idf", "emb_dep", "ent_types"]
    )
    assert fm.block_names() == ["tfidf", "emb_sum", "emb_idf", "emb_dep", "ent_types"]
    tv = build_type_vocabulary(corpus)
    widths = [blk.width for blk in fm.blocks]
    assert widths == [len(corpus.vocabulary()), 3, 3, 3, len(tv)]
    assert all(blk.data.shape[0] == 3 for blk in fm.blocks)
    assert fm.block("tfidf").is_sparse and fm.block("ent_types").is_sparse


def test_empty_selection_rejected():
    with pytest.raises(ValidationError, match="empty"):
        featurize_corpus(full_corpus(), full_table(), None, CFG, [])


def test_unknown_block_rejected():
    with pytest.raises(ValidationError, match="embeddings_v2"):
        featurize_corpus(full_corpus(), full_table(), None, CFG, ["embeddings_v2"])


def degenerate_corpus():
    return small_corpus(
        [
            make_instance("good", tokens=("x", "loves", "y"), dep_path=("loves",)),
            make_instance("bad", tokens=("x", "q", "y"), dep_path=()),
        ]
    )


def test_degenerate_path_error_names_instances():
    with pytest.raises(DegeneratePathError, match="bad"):
        featurize_corpus(degenerate_corpus(), full_table(), None, CFG, ["emb_dep"])


def test_degenerate_path_skip_drops_rows():
    fm = featurize_corpus(
        degenerate_corpus(), full_table(), None, CFG, ["emb_dep"],
        on_degenerate_path="skip",
    )
    assert fm.instance_ids == ("good",)
    assert fm.block("emb_dep").data.shape == (1, 3)


def test_degenerate_path_all_out_uses_out_weight():
    table = full_table()
    fm = featurize_corpus(
        degenerate_corpus(), table, None, CFG, ["emb_dep"],
        on_degenerate_path="all_out",
    )
    corpus = degenerate_corpus()
    bad = corpus.instances[1]
    np.testing.assert_allclose(
        fm.block("emb_dep").data[1], 0.02 * sum_embedding_vector(bad, table)
    )


def test_unknown_policy_rejected():
    with pytest.raises(ValidationError, match="policy"):
        featurize_corpus(
            full_corpus(), full_table(), None, CFG, ["emb_dep"],
            on_degenerate_path="panic",
        )


def test_missing_idf_rejected_when_needed():
    with pytest.raises(ValidationError, match="idf"):
        featurize_corpus(full_corpus(), full_table(), None, CFG, ["emb_idf"])


def test_worker_threads_produce_identical_blocks():
    corpus, table = full_corpus(), full_table()
    idf = compute_idf(corpus)
    selection = ["tfidf", "emb_sum", "emb_idf", "emb_dep", "ent_types"]
    one = featurize_corpus(corpus, table, idf, CFG, selection, workers=1)
    four = featurize_corpus(corpus, table, idf, CFG, selection, workers=4)
    assert one.instance_ids == four.instance_ids
    for b1, b4 in zip(one.blocks, four.blocks):
        if b1.is_sparse:
            assert (b1.data != b4.data).nnz == 0
        else:
            assert np.array_equal(b1.data, b4.data)


def test_l2_normalize_option():
    fm = featurize_corpus(
        full_corpus(), full_table(), None, CFG, ["emb_dep"], l2_normalize=True
    )
    norms = np.linalg.norm(fm.block("emb_dep").data, axis=1)
    np.testing.assert_allclose(norms, 1.0)


# --- binary container -------------------------------------------------------


def test_container_round_trip(tmp_path):
    corpus, table = full_corpus(), full_table()
    idf = compute_idf(corpus)
    fm = featurize_corpus(
        corpus, table, idf, CFG, ["tfidf", "emb_dep", "ent_types"]
    )
    path = tmp_path / "features.bin"
    save_features(fm, path)
    loaded = load_features(path)
    assert loaded.instance_ids == fm.instance_ids
    assert loaded.block_names() == fm.block_names()
    for orig, back in zip(fm.blocks, loaded.blocks):
        assert back.is_sparse == orig.is_sparse
        a = orig.dense()
        b = back.dense()
        # container stores float32
        np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-5)


def test_container_rejects_other_files(tmp_path):
    path = tmp_path / "bogus.bin"
    path.write_bytes(b"\x00\x01\x02not json\n")
    with pytest.raises(ValidationError):
        load_features(path)

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gazener.corpus import (
    FormatError,
    LABELS,
    Sentence,
    Token,
    align_split_tokens,
    corpus_stats,
    format_fixations,
    format_sentences,
    is_valid_iob,
    load_embeddings,
    normalize_digits,
    parse_averaged_gaze_file,
    parse_fixation_file,
    parse_token_text,
    repair_iob,
)
from gazener.gaze import FEATURE_NAMES, featurize_corpus


CANONICAL = """# corpus_id = demo
# sent_id = 0
John\t0\tB-PERSON
's\t0\tO
house\t1\tO
.\t2\tO

# sent_id = 4
In\t0\tO
2019\t1\tO
Port\t2\tB-LOCATION
Lake\t3\tI-LOCATION

"""


def test_clitic_shares_whitespace_group():
    s = parse_token_text(CANONICAL).sentences[0]
    assert s.words[:2] == ["John", "'s"]
    assert [t.whitespace_group for t in s.tokens[:2]] == [0, 0]
    assert s.n_groups == 3


def test_digits_normalized_to_zero():
    tok = parse_token_text(CANONICAL).sentences[1].tokens[1]
    assert tok.surface == "2019"
    assert tok.normalized == "0000"


@given(st.text(alphabet="ab12 9x", max_size=12))
def test_digit_normalization_idempotent(w):
    once = normalize_digits(w)
    assert normalize_digits(once) == once
    assert len(once) == len(w)
    assert all(a == b or (a.isdigit() and b == "0") for a, b in zip(w, once))


def test_canonical_round_trip_is_byte_identical():
    tf = parse_token_text(CANONICAL)
    assert tf.corpus_id == "demo"
    assert [s.sent_id for s in tf.sentences] == [0, 4]
    assert format_sentences(tf.sentences, tf.corpus_id) == CANONICAL


def test_label_aliases_map_to_full_class_names():
    tf = parse_token_text("Ann\t0\tB-PER\nCorp\t1\tB-ORG\nRome\t2\tB-LOC\n")
    assert tf.sentences[0].labels == ["B-PERSON", "B-ORGANIZATION", "B-LOCATION"]


def test_stray_inside_tag_is_repaired_with_count():
    tf = parse_token_text("the\t0\tO\nRiver\t1\tI-LOC\n")
    assert tf.sentences[0].labels == ["O", "B-LOCATION"]
    assert tf.repairs == 1


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("a\t0\tB-MISC\n", "unknown label"),
        ("a\t0\n", "columns"),
        ("a\t0\tO\tx\n", "columns"),
        ("a\t1\tO\n", "whitespace group"),
        ("a\t0\tO\nb\t2\tO\n", "whitespace group"),
        ("a\tx\tO\n", "bad whitespace group"),
        ("# sent_id = 1\na\t0\tO\n\n# sent_id = 1\nb\t0\tO\n", "duplicate sent_id"),
    ],
)
def test_malformed_token_rows(text, fragment):
    with pytest.raises(FormatError, match=fragment) as info:
        parse_token_text(text, path="f.tsv")
    assert "f.tsv:" in str(info.value)


def test_line_number_in_error():
    with pytest.raises(FormatError) as info:
        parse_token_text("a\t0\tO\nb\t1\tX\n", path="c.tsv")
    assert info.value.line == 2


@given(st.lists(st.sampled_from(LABELS), max_size=15))
def test_repair_makes_sequences_well_formed(labels):
    fixed, n = repair_iob(labels)
    assert is_valid_iob(fixed)
    assert n == sum(a != b for a, b in zip(labels, fixed))
    if is_valid_iob(labels):
        assert fixed == labels


def _sentences():
    return parse_token_text(CANONICAL).sentences


def _write(tmp_path, text, name="fix.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_fixation_row_parses(tmp_path):
    p = _write(tmp_path, "reader_id,sent_id,word_index,order,duration_ms\nr1,0,0,0,200\n")
    (ev,) = parse_fixation_file(p, _sentences())
    assert (ev.reader_id, ev.sent_id, ev.word_index, ev.order, ev.duration) == ("r1", 0, 0, 0, 200.0)


@pytest.mark.parametrize(
    "rows, fragment",
    [
        ("r1,0,0,0,200\nr1,0,1,0,100\n", "duplicate order"),
        ("r1,0,0,0,-5\n", "non-positive duration"),
        ("r1,0,0,0,0\n", "non-positive duration"),
        ("r1,0,3,0,100\n", "out of range"),
        ("r1,9,0,0,100\n", "unknown sent_id"),
        ("r1,0,0,1,100\n", "not 0..0"),
        ("r1,0,0,0\n", "columns"),
        ("r1,0,zero,0,100\n", "unparseable"),
    ],
)
def test_fixation_errors(tmp_path, rows, fragment):
    p = _write(tmp_path, "reader_id,sent_id,word_index,order,duration_ms\n" + rows)
    with pytest.raises(FormatError, match=fragment):
        parse_fixation_file(p, _sentences())


def test_fixation_header_checked(tmp_path):
    p = _write(tmp_path, "reader,sent,word,order,ms\nr1,0,0,0,200\n")
    with pytest.raises(FormatError, match="header"):
        parse_fixation_file(p, _sentences())


def test_fixation_round_trip(tmp_path):
    text = "reader_id,sent_id,word_index,order,duration_ms\nr1,0,1,1,150\nr1,0,0,0,200.5\nr2,4,3,0,90\n"
    events = parse_fixation_file(_write(tmp_path, text), _sentences())
    again = parse_fixation_file(_write(tmp_path, format_fixations(events), "b.csv"), _sentences())
    assert again == events
    assert [e.order for e in events if e.reader_id == "r1"] == [0, 1]


def test_split_tokens_share_group_vector():
    s = _sentences()[0]
    groups = {0: np.arange(17.0), 1: np.ones(17), 2: np.zeros(17)}
    out = align_split_tokens(s, groups)
    assert len(out) == len(s)
    assert out[0] is out[1]
    assert np.array_equal(out[2], np.ones(17))
    with pytest.raises(KeyError, match="group 2"):
        align_split_tokens(s, {0: groups[0], 1: groups[1]})


def test_three_tokens_in_one_group():
    s = Sentence("c", 0, tuple(Token(w, "O", 0) for w in "abc"))
    v = np.full(17, 2.0)
    assert all(x is v for x in align_split_tokens(s, {0: v}))


def test_embedding_loader(tmp_path):
    p = _write(tmp_path, "the 0.1 0.2\nof 1 2 3\ncat -1 0.5\n", "emb.txt")
    table = load_embeddings(p, 2)
    assert np.array_equal(table.entries["the"], [0.1, 0.2])
    assert set(table.entries) == {"the", "cat"}
    assert table.skipped == 1
    with pytest.raises(FormatError):
        load_embeddings(_write(tmp_path, "", "empty.txt"), 2)


def test_averaged_gaze_file(tmp_path):
    head = "sent_id,word_index," + ",".join(FEATURE_NAMES) + "\n"
    rows = "".join(f"0,{w}," + ",".join(["1"] * 16 + [""]) + "\n" for w in range(3))
    rows += "".join(f"4,{w}," + ",".join(["2"] * 17) + "\n" for w in range(4))
    out = parse_averaged_gaze_file(_write(tmp_path, head + rows, "avg.csv"), _sentences())
    assert out[0].shape == (3, 17) and math.isnan(out[0][0, 16])
    assert np.all(out[4] == 2)
    with pytest.raises(FormatError, match="lacks rows"):
        parse_averaged_gaze_file(_write(tmp_path, head + rows.split("4,0")[0], "short.csv"), _sentences())


def test_corpus_stats_table_quantities():
    s3 = Sentence("c", 0, tuple(Token(w, "O", i) for i, w in enumerate(["a", "bb", "ccc"])))
    s5 = Sentence("c", 1, tuple(Token(w, "O", i) for i, w in enumerate("vwxyz")))
    assert corpus_stats([s3, s5]).mean_sentence_length == 4.0


def test_corpus_stats_durations_from_events():
    from gazener.corpus import FixationEvent

    s = Sentence("c", 0, (Token("word", "O", 0),))
    events = [FixationEvent("r", 0, 0, 0, 200.0), FixationEvent("r", 0, 0, 1, 100.0)]
    stats = corpus_stats([s], featurize_corpus([s], events))
    assert stats.gaze_duration == 300.0
    assert stats.fixation_duration == 150.0

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gazener.corpus import FixationEvent, Sentence, Token
from gazener.gaze import (
    FEATURE_INDEX,
    FEATURE_NAMES,
    ReaderMeasures,
    add_context_features,
    average_readers,
    check_raw_vector,
    featurize_corpus,
    reader_word_measures,
)

from gaze_scenarios import SCENARIOS

F = FEATURE_INDEX


def _events(seq, reader="r", sent=0):
    return [FixationEvent(reader, sent, w, k, float(d)) for k, (w, d) in enumerate(seq)]


def test_feature_order():
    assert len(FEATURE_NAMES) == 17
    assert FEATURE_NAMES[0] == "n_fixations"
    assert FEATURE_NAMES[8] == "total_regression_from_duration"
    assert FEATURE_NAMES[-1] == "w+2_fixation_duration"


@pytest.mark.parametrize("sc", SCENARIOS, ids=lambda s: s.name)
def test_hand_traced_scenarios(sc):
    (got,) = featurize_corpus([sc.sentence()], sc.events(), sc.reader_count)
    want = sc.expected_array()
    assert got.shape == want.shape
    assert np.array_equal(np.isnan(got), np.isnan(want))
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12, equal_nan=True)


def test_worked_example_per_reader():
    ev = _events([(0, 200), (1, 150), (0, 100), (2, 180)])
    w0 = reader_word_measures(ev, 0, 3)
    assert (w0.n_fixations, w0.first_fixation_duration, w0.first_pass_duration) == (2, 200, 200)
    assert (w0.total_duration, w0.n_refixations, w0.reread) == (300, 1, True)
    w1 = reader_word_measures(ev, 1, 3)
    assert (w1.n_fixations, w1.first_pass_duration, w1.total_duration) == (1, 150, 150)
    assert w1.regression_from_duration == 100
    w2 = reader_word_measures(ev, 2, 3)
    assert (w2.n_fixations, w2.n_refixations, w2.reread) == (1, 0, False)
    with pytest.raises(IndexError):
        reader_word_measures(ev, 3, 3)


def test_unfixated_word_is_zero_record():
    assert reader_word_measures(_events([(0, 100)]), 1, 2) == ReaderMeasures()


def test_average_readers_examples():
    fix = ReaderMeasures(True, 1, 100, 100, 100, 0, False, 0)
    v = average_readers([fix] * 4 + [ReaderMeasures()] * 6, 10)
    assert v[F["fixation_probability"]] == 0.4
    a = ReaderMeasures(True, 1, 200, 200, 200, 0, False, 0)
    v = average_readers([a, fix], 2)
    assert v[F["mean_fixation_duration"]] == 150 and v[F["total_fixation_duration"]] == 150
    v = average_readers([ReaderMeasures()] * 3, 3)
    assert np.all(v[:9] == 0)
    with pytest.raises(ValueError):
        average_readers([], 0)


def test_context_slots_at_boundaries():
    local = [np.full(17, float(i + 1)) for i in range(3)]
    out = add_context_features(local)
    assert out[1][F["w-1_fixation_probability"]] == 1 and out[1][F["w+1_fixation_duration"]] == 3
    assert np.isnan(out[0][F["w-1_fixation_probability"]]) and np.isnan(out[0][F["w-2_fixation_duration"]])
    (single,) = add_context_features([np.ones(17)])
    assert np.all(np.isnan(single[9:]))


scanpath = st.lists(st.tuples(st.integers(0, 4), st.integers(1, 500)), max_size=12)


@settings(max_examples=200)
@given(scanpath)
def test_per_reader_invariants(seq):
    ev = _events(seq)
    for w in range(5):
        m = reader_word_measures(ev, w, 5)
        assert m.first_fixation_duration <= m.first_pass_duration <= m.total_duration
        if m.fixated:
            assert m.n_refixations == m.n_fixations - 1
            assert m.n_fixations == sum(1 for x, _ in seq if x == w)
        else:
            assert m == ReaderMeasures()
        # a regression episode can only cover later fixations on earlier words
        assert m.regression_from_duration <= sum(d for x, d in seq if x < w)


@settings(max_examples=50)
@given(st.lists(scanpath, min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_reader_permutation_and_duplication(paths, rnd):
    sent = Sentence("c", 0, tuple(Token(f"w{i}", "O", i) for i in range(5)))
    events = [e for i, p in enumerate(paths) for e in _events(p, f"r{i}")]
    (base,) = featurize_corpus([sent], events, len(paths))
    order = list(range(len(paths)))
    rnd.shuffle(order)
    shuffled = [e for j, i in enumerate(order) for e in _events(paths[i], f"q{j}")]
    (perm,) = featurize_corpus([sent], shuffled, len(paths))
    np.testing.assert_allclose(perm, base, rtol=1e-12, atol=1e-9, equal_nan=True)
    doubled = events + [e for i, p in enumerate(paths) for e in _events(p, f"d{i}")]
    (dup,) = featurize_corpus([sent], doubled, 2 * len(paths))
    np.testing.assert_allclose(dup, base, rtol=1e-12, atol=1e-9, equal_nan=True)
    for row in base:
        assert check_raw_vector(row) == []


def test_default_reader_count_counts_distinct_readers():
    sent = Sentence("c", 0, (Token("a", "O", 0), Token("b", "O", 1)))
    other = Sentence("c", 1, (Token("c", "O", 0),))
    events = _events([(0, 100)], "r1") + _events([(0, 100)], "r2", sent=1)
    (v, _) = featurize_corpus([sent, other], events)
    assert v[0, F["fixation_probability"]] == 0.5

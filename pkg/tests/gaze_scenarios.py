"""Hand-traced fixation scenarios with their expected 17-value vectors.

Each token's expectation is written as the 9 word-local values followed by the
context pairs (probability, mean duration) for w-2, w-1, w+1, w+2. ``N`` marks
a slot beyond the sentence boundary.
"""
from dataclasses import dataclass

import numpy as np

from gazener.corpus import FixationEvent, Sentence, Token

N = float("nan")


def vec(local, m2=(N, N), m1=(N, N), p1=(N, N), p2=(N, N)):
    # local: n_fix, p_fix, mean, first_fix, first_pass, total, refix, reread, regression_from
    assert len(local) == 9
    return list(local) + [m2[0], m1[0], p1[0], p2[0], m2[1], m1[1], p1[1], p2[1]]


@dataclass
class Scenario:
    name: str
    words: list  # (surface, whitespace group)
    readers: dict  # reader id -> chronological [(group, duration), ...]
    reader_count: int
    expected: list  # one 17-vector per token

    def sentence(self):
        return Sentence("fx", 0, tuple(Token(w, "O", g) for w, g in self.words))

    def events(self):
        return [
            FixationEvent(r, 0, w, k, float(d)) for r, seq in self.readers.items() for k, (w, d) in enumerate(seq)
        ]

    def expected_array(self):
        return np.array(self.expected, dtype=float)


def _words(n):
    return [(f"w{i}", i) for i in range(n)]


SCENARIOS = [
    Scenario(
        "regression_then_onward",
        _words(3),
        {"r": [(0, 200), (1, 150), (0, 100), (2, 180)]},
        1,
        [
            vec([2, 1, 150, 200, 200, 300, 1, 1, 0], p1=(1, 150), p2=(1, 180)),
            vec([1, 1, 150, 150, 150, 150, 0, 0, 100], m1=(1, 150), p1=(1, 180)),
            vec([1, 1, 180, 180, 180, 180, 0, 0, 0], m2=(1, 150), m1=(1, 150)),
        ],
    ),
    Scenario(
        "skipped_middle_word",
        _words(3),
        {"r": [(0, 200), (2, 250)]},
        1,
        [
            vec([1, 1, 200, 200, 200, 200, 0, 0, 0], p1=(0, 0), p2=(1, 250)),
            vec([0, 0, 0, 0, 0, 0, 0, 0, 0], m1=(1, 200), p1=(1, 250)),
            vec([1, 1, 250, 250, 250, 250, 0, 0, 0], m2=(1, 200), m1=(0, 0)),
        ],
    ),
    Scenario(
        "refixation_inside_first_pass",
        _words(2),
        {"r": [(0, 100), (0, 120), (1, 200), (0, 80)]},
        1,
        [
            vec([3, 1, 100, 100, 220, 300, 2, 1, 0], p1=(1, 200)),
            vec([1, 1, 200, 200, 200, 200, 0, 0, 80], m1=(1, 100)),
        ],
    ),
    Scenario(
        "long_regression_episode",
        _words(4),
        {"r": [(0, 100), (1, 110), (2, 120), (3, 200), (1, 90), (0, 60), (2, 70), (3, 50)]},
        1,
        [
            vec([2, 1, 80, 100, 100, 160, 1, 1, 0], p1=(1, 100), p2=(1, 95)),
            vec([2, 1, 100, 110, 110, 200, 1, 1, 60], m1=(1, 80), p1=(1, 95), p2=(1, 125)),
            vec([2, 1, 95, 120, 120, 190, 1, 1, 0], m2=(1, 80), m1=(1, 100), p1=(1, 125)),
            vec([2, 1, 125, 200, 200, 250, 1, 1, 220], m2=(1, 100), m1=(1, 95)),
        ],
    ),
    Scenario(
        "single_word_two_readers",
        _words(1),
        {"a": [(0, 300)], "b": [(0, 100), (0, 100)]},
        2,
        [vec([1.5, 1, 200, 200, 250, 250, 0.5, 0.5, 0])],
    ),
    Scenario(
        "reader_without_events",
        _words(2),
        {"a": [(0, 200), (1, 100)], "b": [(1, 300)]},
        3,
        [
            vec([1, 1 / 3, 200, 200, 200, 200, 0, 0, 0], p1=(2 / 3, 200)),
            vec([1, 2 / 3, 200, 200, 200, 200, 0, 0, 0], m1=(1 / 3, 200)),
        ],
    ),
    Scenario(
        "four_of_ten_readers",
        _words(2),
        {f"r{i}": [(0, 100 * (i + 1))] for i in range(4)},
        10,
        [
            vec([1, 0.4, 250, 250, 250, 250, 0, 0, 0], p1=(0, 0)),
            vec([0, 0, 0, 0, 0, 0, 0, 0, 0], m1=(0.4, 250)),
        ],
    ),
    Scenario(
        "first_pass_stops_at_other_word",
        _words(2),
        {"r": [(1, 100), (0, 200), (1, 150), (1, 50)]},
        1,
        [
            vec([1, 1, 200, 200, 200, 200, 0, 0, 0], p1=(1, 100)),
            vec([3, 1, 100, 100, 100, 300, 2, 1, 200], m1=(1, 200)),
        ],
    ),
    Scenario(
        "nested_regressions",
        _words(3),
        {"r": [(0, 100), (1, 100), (2, 100), (1, 50), (0, 40), (2, 30)]},
        1,
        [
            vec([2, 1, 70, 100, 100, 140, 1, 1, 0], p1=(1, 75), p2=(1, 65)),
            vec([2, 1, 75, 100, 100, 150, 1, 1, 40], m1=(1, 70), p1=(1, 65)),
            vec([2, 1, 65, 100, 100, 130, 1, 1, 90], m2=(1, 70), m1=(1, 75)),
        ],
    ),
    Scenario(
        "duplicated_reader_set",
        _words(2),
        {
            "a": [(0, 200), (1, 100)],
            "b": [(1, 300)],
            "a2": [(0, 200), (1, 100)],
            "b2": [(1, 300)],
        },
        6,
        [
            vec([1, 1 / 3, 200, 200, 200, 200, 0, 0, 0], p1=(2 / 3, 200)),
            vec([1, 2 / 3, 200, 200, 200, 200, 0, 0, 0], m1=(1 / 3, 200)),
        ],
    ),
    Scenario(
        "clitic_group",
        [("John", 0), ("'s", 0), ("left", 1)],
        {"r": [(0, 250), (1, 100)]},
        1,
        [
            vec([1, 1, 250, 250, 250, 250, 0, 0, 0], p1=(1, 100)),
            vec([1, 1, 250, 250, 250, 250, 0, 0, 0], p1=(1, 100)),
            vec([1, 1, 100, 100, 100, 100, 0, 0, 0], m1=(1, 250)),
        ],
    ),
    Scenario(
        "regression_never_returns",
        _words(3),
        {"r": [(0, 100), (2, 200), (1, 150)]},
        1,
        [
            vec([1, 1, 100, 100, 100, 100, 0, 0, 0], p1=(1, 150), p2=(1, 200)),
            vec([1, 1, 150, 150, 150, 150, 0, 0, 0], m1=(1, 100), p1=(1, 200)),
            vec([1, 1, 200, 200, 200, 200, 0, 0, 150], m2=(1, 100), m1=(1, 150)),
        ],
    ),
]

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lobrnn.dataset import (
    Label,
    SequenceSet,
    SplitPlan,
    balance,
    horizon_labels,
    label_horizon,
    label_next_event,
    make_sequences,
    n_splits,
    next_event_labels,
    one_hot,
    sequences_from_table,
    split,
    walk_forward,
)
from lobrnn.errors import HorizonBeyondSession, InsufficientSessions, MissingClass
from lobrnn.features import FeatureTable
from oracles import scan_horizon_label


def labelled_set(counts, T=1, seed=0):
    y = np.concatenate([np.full(n, c) for c, n in zip((-1, 0, 1), counts)])
    rng = np.random.default_rng(seed)
    rng.shuffle(y)
    x = np.arange(len(y), dtype=float)[:, None]
    return make_sequences(x, y, T)


def sessions_set(n_sessions, per_session, T=1, seed=0):
    """Rows with every class in every session, timestamps increasing across sessions."""
    rng = np.random.default_rng(seed)
    n = n_sessions * per_session
    y = rng.choice([-1, 0, 1], size=n, p=[0.2, 0.6, 0.2])
    y[::per_session] = -1
    y[1::per_session] = 1
    y[2::per_session] = 0
    sess = np.repeat(np.arange(n_sessions), per_session)
    return make_sequences(rng.normal(size=(n, 4)), y, T, sess, np.arange(n) * 10)


class TestLabels:
    def test_worked_example_down(self):
        # 2175.875 -> 2175.625 in half ticks
        assert label_next_event(17407, 17405) == Label.DOWN

    def test_stationary_and_up(self):
        assert label_next_event(17405, 17405) == Label.STATIONARY
        assert label_next_event(17405, 17407) == Label.UP

    @given(st.integers(-10**9, 10**9), st.integers(-10**9, 10**9))
    def test_antisymmetric(self, a, b):
        assert label_next_event(a, b) == -label_next_event(b, a)

    def test_one_hot(self):
        np.testing.assert_array_equal(one_hot([-1, 0, 1]), np.eye(3))
        assert one_hot([0, 1]).sum(axis=1).tolist() == [1.0, 1.0]


class TestHorizon:
    ts = np.array([0, 3, 5, 9, 12, 20, 21, 30, 34, 40])
    mids = np.array([10, 10, 12, 12, 8, 8, 10, 14, 14, 6])

    def test_zero_horizon_is_stationary(self):
        for t in range(len(self.ts)):
            assert label_horizon(self.ts, self.mids, t, 0) == Label.STATIONARY

    def test_next_event_gap_matches_next_label(self):
        for t in range(len(self.ts) - 1):
            gap = int(self.ts[t + 1] - self.ts[t])
            assert label_horizon(self.ts, self.mids, t, gap) == label_next_event(self.mids[t], self.mids[t + 1])

    def test_brute_force_scan(self):
        for h in (1, 4, 9, 15):
            for t in range(len(self.ts)):
                if self.ts[t] + h > self.ts[-1]:
                    with pytest.raises(HorizonBeyondSession):
                        label_horizon(self.ts, self.mids, t, h)
                else:
                    assert label_horizon(self.ts, self.mids, t, h) == scan_horizon_label(self.ts, self.mids, t, h)

    def test_three_event_span(self):
        # from t=0 a horizon of 9 covers rows 1..3
        assert label_horizon(self.ts, self.mids, 0, 9) == np.sign(self.mids[3] - self.mids[0])

    def test_vectorised_matches_scalar(self):
        table = FeatureTable(self.ts, np.zeros((10, 32)), self.mids, np.zeros(10, dtype=np.int64))
        labels, valid = horizon_labels(table, 9)
        for t in range(10):
            if valid[t]:
                assert labels[t] == label_horizon(self.ts, self.mids, t, 9)
            else:
                assert self.ts[t] + 9 > self.ts[-1]

    def test_next_event_labels_per_session(self):
        sess = np.array([0] * 5 + [1] * 5)
        table = FeatureTable(self.ts, np.zeros((10, 32)), self.mids, sess)
        labels, valid = next_event_labels(table)
        np.testing.assert_array_equal(valid, [1, 1, 1, 1, 0, 1, 1, 1, 1, 0])
        np.testing.assert_array_equal(labels[:4], [0, 1, 0, -1])
        assert horizon_labels(table, None)[0].tolist() == labels.tolist()


class TestSequences:
    def test_boundary(self):
        s = make_sequences(np.zeros((10, 3)), np.zeros(10), 10)
        assert len(s) == 1

    def test_T1_is_one_per_row(self):
        assert len(make_sequences(np.zeros((7, 3)), np.zeros(7), 1)) == 7

    def test_two_sessions(self):
        sess = np.repeat([0, 1], 12)
        s = make_sequences(np.zeros((24, 3)), np.zeros(24), 10, sess)
        assert len(s) == 6

    @given(st.lists(st.integers(0, 15), min_size=1, max_size=6), st.integers(1, 8))
    def test_count_and_no_straddling(self, sizes, T):
        sess = np.repeat(np.arange(len(sizes)), sizes)
        n = len(sess)
        x = np.arange(n, dtype=float)[:, None]
        s = make_sequences(x, np.zeros(n), T, sess)
        assert len(s) == sum(max(0, k - T + 1) for k in sizes)
        if len(s):
            w = s.windows()[..., 0].astype(int)
            assert (sess[w] == s.session[:, None]).all()
            np.testing.assert_array_equal(w[:, -1], s.end)

    def test_last_row_is_current_observation(self):
        x = np.arange(20, dtype=float).reshape(10, 2)
        s = make_sequences(x, np.arange(10) % 3 - 1, 3)
        sample = s[0]
        np.testing.assert_array_equal(sample.x, x[0:3])
        assert sample.y == Label(s.y[0])

    def test_invalid_rows_are_dropped(self):
        valid = np.array([1, 1, 0, 1], dtype=bool)
        s = make_sequences(np.zeros((4, 1)), np.zeros(4), 1, valid=valid)
        np.testing.assert_array_equal(s.end, [0, 1, 3])

    def test_from_simulated_table(self, small_sim):
        _, _, table = small_sim
        s = sequences_from_table(table, 10)
        assert s.x.shape[1:] == (10, 32)
        assert set(np.unique(s.y)) <= {-1, 0, 1}


class TestBalance:
    def test_small_case(self):
        s = labelled_set((8, 1, 1))
        b = balance(s, 4, seed=1)
        np.testing.assert_array_equal(b.class_counts(), [4, 4, 4])
        majority = b.end[b.y == -1]
        assert len(set(majority.tolist())) == 4

    def test_already_balanced_is_a_permutation(self):
        s = labelled_set((4, 4, 4))
        b = balance(s, 4, seed=3)
        assert sorted(b.end.tolist()) == sorted(s.end.tolist())

    def test_large_skew(self):
        s = labelled_set((100_000, 500, 450), seed=2)
        b = balance(s, 33_000, seed=5)
        np.testing.assert_array_equal(b.class_counts(), [33_000] * 3)
        for c in (-1, 0, 1):
            members = Counter(b.end[b.y == c].tolist())
            pool = set(s.end[s.y == c].tolist())
            assert set(members) <= pool
            if len(pool) >= 33_000:
                assert max(members.values()) == 1
            else:
                assert max(members.values()) > 1

    def test_deterministic(self):
        s = labelled_set((50, 5, 7))
        a, b = balance(s, 20, 9), balance(s, 20, 9)
        np.testing.assert_array_equal(a.end, b.end)
        assert not np.array_equal(a.end, balance(s, 20, 10).end)

    def test_missing_class(self):
        with pytest.raises(MissingClass):
            balance(labelled_set((5, 0, 3)), 4, 0)


class TestSplit:
    def test_basic(self):
        s = sessions_set(4, 300)
        plan = SplitPlan(3, 100, 50, 0)
        train, val, test = split(s, plan)
        assert set(train.session.tolist()) == {0, 1, 2}
        assert set(val.session.tolist()) == {3} == set(test.session.tolist())
        assert len(val) == 100 and len(test) == 200
        np.testing.assert_array_equal(train.class_counts(), [50, 50, 50])

    def test_no_leakage_across_rolling_splits(self):
        s = sessions_set(23, 60)
        plan = SplitPlan(3, 20, 10, 0)
        assert n_splits(s, plan) == 20
        tests = []
        for offset, train, val, test in walk_forward(s, plan):
            assert train.ts_ns.max() < min(val.ts_ns.min(), test.ts_ns.min())
            assert val.ts_ns.max() < test.ts_ns.min()
            tests.append(set(test.session.tolist()))
        assert len(tests) == 20
        assert all(len(t) == 1 for t in tests)
        assert len(set.union(*tests)) == 20

    def test_insufficient_sessions(self):
        with pytest.raises(InsufficientSessions):
            split(sessions_set(3, 30), SplitPlan(3, 10, 5))

    def test_unordered_samples_rejected(self):
        s = sessions_set(4, 30)
        rev = SequenceSet(s.base, s.end, s.y, s.ts_ns[::-1].copy(), s.session, s.T)
        with pytest.raises(ValueError):
            split(rev, SplitPlan(3, 10, 5))

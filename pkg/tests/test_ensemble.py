import numpy as np
import pytest

from voxseg import (
    DEFAULT_TIE_BREAK,
    EnsembleSet,
    Label,
    LabelVolume,
    MemberInfo,
    ShapeMismatch,
    majority_vote,
    vote_histogram,
)

from oracles import oracle_vote, random_labels


def _set(rng, n, dims):
    return EnsembleSet([LabelVolume(random_labels(rng, dims)) for _ in range(n)])


def test_unanimity(rng):
    labels = random_labels(rng, (4, 4, 4))
    es = EnsembleSet([LabelVolume(labels) for _ in range(9)])
    assert np.array_equal(majority_vote(es).labels, labels)


def test_strict_majority():
    ncr = LabelVolume(np.full((1, 1, 1), 1, dtype=np.uint8))
    ed = LabelVolume(np.full((1, 1, 1), 2, dtype=np.uint8))
    es = EnsembleSet([ncr] * 4 + [ed] * 5)
    assert majority_vote(es).labels[0, 0, 0] == 2


def test_documented_tie_break():
    # votes {ED:4, ET:4, Else:1} with default priority ET > NCR > ED > Else
    ed = LabelVolume(np.full((1, 1, 1), 2, dtype=np.uint8))
    et = LabelVolume(np.full((1, 1, 1), 4, dtype=np.uint8))
    bg = LabelVolume(np.zeros((1, 1, 1), dtype=np.uint8))
    es = EnsembleSet([ed] * 4 + [et] * 4 + [bg])
    assert majority_vote(es).labels[0, 0, 0] == 4
    # flipping the priority flips the outcome
    reversed_order = (Label.ELSE, Label.ED, Label.NCR, Label.ET)
    assert majority_vote(es, reversed_order).labels[0, 0, 0] == 2


def test_vote_matches_oracle(rng):
    for _ in range(30):
        n = int(rng.choice([1, 3, 9]))
        dims = tuple(rng.integers(1, 17, size=3))
        es = _set(rng, n, dims)
        got = majority_vote(es).labels
        want = oracle_vote([m.labels for m in es.members])
        assert np.array_equal(got, want)


def test_histogram_conservation_and_indicator(rng):
    es = _set(rng, 9, (6, 5, 4))
    counts = vote_histogram(es)
    assert counts.shape == (6, 5, 4, 4)
    assert np.all(counts.sum(axis=-1) == 9)
    single = EnsembleSet([es.members[0]])
    ind = vote_histogram(single)
    assert np.all(ind.sum(axis=-1) == 1)
    # the indicator points at each voxel's label
    code_order = np.array([0, 1, 2, 4], dtype=np.uint8)
    assert np.array_equal(code_order[ind.argmax(axis=-1)], es.members[0].labels)


def test_permutation_invariance(rng):
    es = _set(rng, 9, (5, 5, 5))
    base = majority_vote(es).labels
    for _ in range(5):
        perm = rng.permutation(9)
        shuffled = EnsembleSet([es.members[i] for i in perm])
        assert np.array_equal(majority_vote(shuffled).labels, base)


def test_idempotence(rng):
    lv = LabelVolume(random_labels(rng, (7, 6, 5)))
    for n in (1, 3, 9):
        es = EnsembleSet([lv] * n)
        assert majority_vote(es) == LabelVolume(lv.labels, source="ensemble")


def test_winner_monotonicity(rng):
    for _ in range(10):
        es = _set(rng, 5, (4, 4, 4))
        voted = majority_vote(es)
        bigger = EnsembleSet(list(es.members) + [voted])
        assert np.array_equal(majority_vote(bigger).labels, voted.labels)


def test_mismatched_members_rejected(rng):
    a = LabelVolume(random_labels(rng, (4, 4, 4)))
    b = LabelVolume(random_labels(rng, (4, 4, 5)))
    with pytest.raises(ShapeMismatch):
        EnsembleSet([a, b])
    c = LabelVolume(random_labels(rng, (4, 4, 4)), spacing=(2, 1, 1))
    with pytest.raises(ShapeMismatch):
        EnsembleSet([a, c])


def test_empty_and_bad_tie_break_rejected(rng):
    with pytest.raises(ValueError):
        EnsembleSet([])
    es = _set(rng, 3, (2, 2, 2))
    with pytest.raises(ValueError):
        majority_vote(es, (Label.ET, Label.ET, Label.ED, Label.ELSE))


def test_provenance_bookkeeping(rng):
    members = [LabelVolume(random_labels(rng, (2, 2, 2))) for _ in range(2)]
    info = [MemberInfo(model="weak", axis="axial"), MemberInfo(model="strong", axis="coronal")]
    es = EnsembleSet(members, info)
    assert es.provenance[1].model == "strong"
    with pytest.raises(ValueError):
        EnsembleSet(members, info[:1])


def test_default_tie_break_order():
    assert DEFAULT_TIE_BREAK == (Label.ET, Label.NCR, Label.ED, Label.ELSE)

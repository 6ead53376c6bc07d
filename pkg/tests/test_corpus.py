import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexprobe.corpus import (
    SelectionStrategy,
    TestSentence,
    load_sense_tagged,
    pick_by_strategy,
    sample_raw_sentences,
    select_test_sentences,
    uniform_indices,
)
from lexprobe.embedding import MockBackend
from lexprobe.errors import ParseError, ValidationError
from lexprobe.rng import stream


def sentence_record(idx, key="bank", sense="bank#1", filler="water"):
    tokens = [filler, "flows", "past", "the", key, "today", f"t{idx}"]
    return {
        "id": f"s{idx:04d}",
        "tokens": tokens,
        "key": key,
        "key_index": 4,
        "sense": sense,
    }


class TestLoadSenseTagged:
    def test_cap_keeps_first_twenty(self, tmp_path, jsonl_writer):
        records = [sentence_record(i) for i in range(25)]
        path = jsonl_writer(tmp_path / "sentences.jsonl", records)
        kept = load_sense_tagged(path)
        assert len(kept) == 20
        assert [s.id for s in kept] == [f"s{i:04d}" for i in range(20)]

    def test_under_cap_keeps_everything(self, tmp_path, jsonl_writer):
        path = jsonl_writer(tmp_path / "s.jsonl", [sentence_record(i) for i in range(3)])
        assert len(load_sense_tagged(path)) == 3

    def test_cap_is_per_sense(self, tmp_path, jsonl_writer):
        records = [sentence_record(i, sense="bank#1") for i in range(22)]
        records += [sentence_record(100 + i, sense="bank#2") for i in range(22)]
        path = jsonl_writer(tmp_path / "s.jsonl", records)
        kept = load_sense_tagged(path)
        assert len(kept) == 40

    def test_key_index_out_of_range_names_line(self, tmp_path, jsonl_writer):
        bad = sentence_record(0)
        bad["key_index"] = len(bad["tokens"])
        path = jsonl_writer(tmp_path / "s.jsonl", [sentence_record(1), bad])
        with pytest.raises(ParseError, match="2"):
            load_sense_tagged(path)

    def test_token_key_mismatch_is_rejected(self, tmp_path, jsonl_writer):
        bad = sentence_record(0)
        bad["key_index"] = 0
        path = jsonl_writer(tmp_path / "s.jsonl", [bad])
        with pytest.raises(ParseError):
            load_sense_tagged(path)

    def test_key_case_is_insensitive(self, tmp_path, jsonl_writer):
        record = sentence_record(0)
        record["tokens"][4] = "Bank"
        path = jsonl_writer(tmp_path / "s.jsonl", [record])
        kept = load_sense_tagged(path)
        assert kept[0].key == "bank"
        assert kept[0].tokens[4] == "Bank"


def write_corpus(tmp_path, lines):
    path = tmp_path / "corpus.txt"
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def line_with(key, length, filler="w"):
    tokens = [f"{filler}{i}" for i in range(length - 1)]
    return " ".join(tokens[: length // 2] + [key] + tokens[length // 2 :])


class TestSampleRawSentences:
    def test_exhaustion_returns_all(self, tmp_path):
        lines = [line_with("storm", 12) for _ in range(4)]
        lines += [line_with("other", 12) for _ in range(6)]
        path = write_corpus(tmp_path, lines)
        sampled = sample_raw_sentences(path, "storm", n_sent=100, seed=1)
        assert len(sampled) == 4
        assert all(s.tokens[s.key_index].lower() == "storm" for s in sampled)

    def test_length_bounds(self, tmp_path):
        lines = [
            line_with("storm", 95),
            line_with("storm", 9),
            line_with("storm", 10),
            line_with("storm", 90),
        ]
        path = write_corpus(tmp_path, lines)
        sampled = sample_raw_sentences(path, "storm", n_sent=100, seed=1)
        assert {len(s.tokens) for s in sampled} == {10, 90}

    def test_seeded_determinism(self, tmp_path):
        lines = [line_with("storm", 10 + i % 20) for i in range(50)]
        path = write_corpus(tmp_path, lines)
        first = sample_raw_sentences(path, "storm", n_sent=10, seed=7)
        second = sample_raw_sentences(path, "storm", n_sent=10, seed=7)
        assert [s.id for s in first] == [s.id for s in second]
        other_seed = sample_raw_sentences(path, "storm", n_sent=10, seed=8)
        assert [s.id for s in first] != [s.id for s in other_seed]

    def test_sample_is_in_file_order(self, tmp_path):
        lines = [line_with("storm", 12) for _ in range(30)]
        path = write_corpus(tmp_path, lines)
        sampled = sample_raw_sentences(path, "storm", n_sent=10, seed=3)
        line_numbers = [int(s.id.split(":")[1]) for s in sampled]
        assert line_numbers == sorted(line_numbers)

    def test_first_occurrence_is_marked(self, tmp_path):
        path = write_corpus(
            tmp_path, ["a b c storm d e storm f g h i j"]
        )
        sampled = sample_raw_sentences(path, "storm", n_sent=5, seed=1)
        assert sampled[0].key_index == 3

    def test_no_context_gives_empty(self, tmp_path):
        path = write_corpus(tmp_path, [line_with("other", 12)])
        assert sample_raw_sentences(path, "storm", n_sent=5, seed=1) == []


def scored_fixture(cosines):
    sentences = [
        TestSentence(id=f"s{i}", tokens=("the", "key", "waits"), key_index=1, key="key")
        for i in range(len(cosines))
    ]
    return list(zip(sentences, cosines))


class TestPickByStrategy:
    def test_uniform_formula_on_five_candidates(self):
        scored = scored_fixture([0.1, 0.3, 0.5, 0.7, 0.9])
        picked = pick_by_strategy(scored, 3, SelectionStrategy.UNIFORM)
        picked_ids = {s.id for s in picked}
        assert picked_ids == {"s0", "s2", "s4"}

    def test_uniform_indices_cases(self):
        assert uniform_indices(5, 3) == [0, 2, 4]
        assert uniform_indices(5, 5) == [0, 1, 2, 3, 4]
        assert uniform_indices(7, 1) == [3]
        assert uniform_indices(10, 4) == [0, 3, 6, 9]

    def test_closest_and_farthest_are_disjoint(self):
        cosines = [0.05, 0.2, 0.35, 0.55, 0.7, 0.95]
        scored = scored_fixture(cosines)
        closest = pick_by_strategy(scored, 3, SelectionStrategy.CLOSEST_AVG)
        farthest = pick_by_strategy(scored, 3, SelectionStrategy.FARTHEST_AVG)
        assert {s.id for s in closest} == {"s3", "s4", "s5"}
        assert {s.id for s in farthest} == {"s0", "s1", "s2"}
        assert not {s.id for s in closest} & {s.id for s in farthest}

    def test_random_needs_generator_and_is_seeded(self):
        scored = scored_fixture([0.1] * 8)
        with pytest.raises(ValidationError):
            pick_by_strategy(scored, 3, SelectionStrategy.RANDOM)
        a = pick_by_strategy(scored, 3, SelectionStrategy.RANDOM, stream(1, "t"))
        b = pick_by_strategy(scored, 3, SelectionStrategy.RANDOM, stream(1, "t"))
        assert [s.id for s in a] == [s.id for s in b]

    def test_ties_break_by_sentence_id(self):
        scored = scored_fixture([0.5, 0.5, 0.5, 0.9])
        closest = pick_by_strategy(scored, 2, SelectionStrategy.CLOSEST_AVG)
        assert [s.id for s in closest] == ["s0", "s3"]

    @given(
        cosines=st.lists(
            st.floats(min_value=-1, max_value=1, allow_nan=False),
            min_size=1,
            max_size=12,
        ),
        n_c=st.integers(1, 12),
        strategy=st.sampled_from(
            [
                SelectionStrategy.CLOSEST_AVG,
                SelectionStrategy.FARTHEST_AVG,
                SelectionStrategy.UNIFORM,
            ]
        ),
    )
    @settings(max_examples=80, deadline=None)
    def test_selection_size_and_membership(self, cosines, n_c, strategy):
        scored = scored_fixture(cosines)
        picked = pick_by_strategy(scored, n_c, strategy)
        assert len(picked) == min(n_c, len(cosines))
        assert {s.id for s in picked} <= {s.id for s, _ in scored}
        # permutation invariance over the candidate list order
        reversed_pick = pick_by_strategy(list(reversed(scored)), n_c, strategy)
        assert [s.id for s in picked] == [s.id for s in reversed_pick]


class TestSelectTestSentences:
    def pool(self, size, key="storm"):
        return [
            TestSentence(
                id=f"p{i:02d}",
                tokens=("calm", key, "before", f"ctx{i}", "arrives"),
                key_index=1,
                key=key,
            )
            for i in range(size)
        ]

    def test_full_selection_is_id_ordered(self):
        pool = list(reversed(self.pool(10)))
        out = select_test_sentences(
            pool, "storm", 10, SelectionStrategy.CLOSEST_AVG, MockBackend(), 1
        )
        assert [s.id for s in out] == sorted(s.id for s in pool)

    def test_empty_pool(self):
        assert (
            select_test_sentences(
                [], "storm", 3, SelectionStrategy.UNIFORM, MockBackend(), 1
            )
            == []
        )

    def test_uniform_with_full_count_returns_all(self):
        pool = self.pool(6)
        out = select_test_sentences(
            pool, "storm", 6, SelectionStrategy.UNIFORM, MockBackend(), 1
        )
        assert len(out) == 6

    def test_strategies_differ_on_real_vectors(self):
        pool = self.pool(8)
        picks = {}
        for strategy in (SelectionStrategy.CLOSEST_AVG, SelectionStrategy.FARTHEST_AVG):
            out = select_test_sentences(
                pool, "storm", 3, strategy, MockBackend(), 2, seed=5
            )
            picks[strategy] = {s.id for s in out}
        assert picks[SelectionStrategy.CLOSEST_AVG].isdisjoint(
            picks[SelectionStrategy.FARTHEST_AVG]
        )

    def test_random_is_permutation_invariant_given_seed(self):
        pool = self.pool(9)
        a = select_test_sentences(
            pool, "storm", 4, SelectionStrategy.RANDOM, MockBackend(), 0, seed=11
        )
        b = select_test_sentences(
            list(reversed(pool)), "storm", 4, SelectionStrategy.RANDOM, MockBackend(), 0, seed=11
        )
        assert [s.id for s in a] == [s.id for s in b]


class TestSentenceInvariants:
    def test_key_index_bounds(self):
        with pytest.raises(ValidationError):
            TestSentence(id="x", tokens=("a",), key_index=1, key="a")

    def test_token_must_match_key(self):
        with pytest.raises(ValidationError):
            TestSentence(id="x", tokens=("a", "b"), key_index=0, key="b")

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexprobe.errors import ParseError, ValidationError
from lexprobe.lexicon import (
    ALL_RELATIONS,
    CapConfig,
    NeighborList,
    RelationType,
    TargetSet,
    TargetSetRejection,
    WORDNET_RELATIONS,
    assemble_target_set,
    dist_neighbors,
    load_lexicon,
    load_neighbors,
)


def entry(key, sense, relation, target):
    return {"key": key, "sense": sense, "relation": relation, "target": target}


def build_lexicon(tmp_path, jsonl_writer, records):
    return load_lexicon(jsonl_writer(tmp_path / "lexicon.jsonl", records))


DISASTER_ROWS = [
    entry("disaster", "disaster#2", "syn", "cataclysm"),
    entry("disaster", "disaster#2", "syn", "catastrophe"),
    entry("disaster", "disaster#2", "hype", "misfortune"),
    entry("disaster", "disaster#2", "hypo", "tsunami"),
    entry("disaster", "disaster#2", "hypo", "meltdown"),
    entry("disaster", "disaster#2", "cohyp", "adversity"),
    entry("disaster", "disaster#2", "cohyp", "misadventure"),
]


class TestLoadLexicon:
    def test_single_entry(self, tmp_path, jsonl_writer):
        lex = build_lexicon(
            tmp_path, jsonl_writer, [entry("disaster", "disaster#2", "syn", "catastrophe")]
        )
        assert lex.size() == 1
        entries = lex.entries_for("disaster", "disaster#2")
        assert entries[0].target == "catastrophe"
        assert entries[0].relation is RelationType.SYN

    def test_disaster_sense_rows(self, tmp_path, jsonl_writer):
        lex = build_lexicon(tmp_path, jsonl_writer, DISASTER_ROWS)
        entries = lex.entries_for("disaster", "disaster#2")
        assert len(entries) == 7
        by_relation = {}
        for e in entries:
            by_relation.setdefault(e.relation, set()).add(e.target)
        assert by_relation[RelationType.SYN] == {"cataclysm", "catastrophe"}
        assert by_relation[RelationType.HYPE] == {"misfortune"}
        assert by_relation[RelationType.HYPO] == {"tsunami", "meltdown"}
        assert by_relation[RelationType.COHYP] == {"adversity", "misadventure"}

    def test_empty_file(self, tmp_path, jsonl_writer):
        lex = build_lexicon(tmp_path, jsonl_writer, [])
        assert lex.size() == 0
        assert lex.keys() == []

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "lexicon.jsonl"
        path.write_text('{"key": "a", "sense": null, "relation": "syn", "target": "b"}\nnot a record\n')
        with pytest.raises(ParseError, match="2"):
            load_lexicon(path)

    def test_duplicate_tuple_rejected(self, tmp_path, jsonl_writer):
        rows = [entry("a", "a#1", "syn", "b"), entry("a", "a#1", "syn", "b")]
        with pytest.raises(ValidationError, match="duplicate"):
            build_lexicon(tmp_path, jsonl_writer, rows)

    def test_unknown_relation_rejected(self, tmp_path, jsonl_writer):
        with pytest.raises(ParseError, match="antonym"):
            build_lexicon(tmp_path, jsonl_writer, [entry("a", "a#1", "antonym", "b")])

    def test_dist_with_sense_rejected(self, tmp_path, jsonl_writer):
        with pytest.raises(ParseError):
            build_lexicon(tmp_path, jsonl_writer, [entry("a", "a#1", "dist", "b")])

    def test_target_equal_to_key_rejected(self, tmp_path, jsonl_writer):
        with pytest.raises(ParseError):
            build_lexicon(tmp_path, jsonl_writer, [entry("a", "a#1", "syn", "a")])

    def test_uppercase_is_folded_and_counted(self, tmp_path, jsonl_writer):
        lex = build_lexicon(tmp_path, jsonl_writer, [entry("Storm", None, "dist", "Gale")])
        assert lex.folded_words == 1
        assert lex.entries_for("storm", None)[0].target == "gale"

    def test_multiword_targets_are_skipped_and_counted(self, tmp_path, jsonl_writer):
        rows = [
            entry("disaster", "disaster#1", "syn", "natural_disaster"),
            entry("disaster", "disaster#1", "syn", "calamity"),
        ]
        lex = build_lexicon(tmp_path, jsonl_writer, rows)
        assert lex.skipped_multiword == 1
        assert [e.target for e in lex.entries_for("disaster", "disaster#1")] == ["calamity"]


def lexicon_with_counts(tmp_path, jsonl_writer, key, counts):
    """counts maps relation value -> number of targets to generate."""
    rows = []
    for relation, count in counts.items():
        sense = None if relation == "dist" else f"{key}#1"
        for i in range(count):
            rows.append(entry(key, sense, relation, f"{key}{relation}{i}"))
    return build_lexicon(tmp_path, jsonl_writer, rows)


def in_memory_lexicon(key, counts):
    from lexprobe.lexicon import LexiconEntry, RelationLexicon

    lex = RelationLexicon()
    for relation, count in counts.items():
        sense = None if relation == "dist" else f"{key}#1"
        for i in range(count):
            lex.entries.setdefault(key, {}).setdefault(sense, []).append(
                LexiconEntry(
                    key=key,
                    sense=sense,
                    relation=RelationType(relation),
                    target=f"{key}{relation}{i}",
                )
            )
    return lex


class TestAssembleTargetSet:
    def test_truncation_rule(self, tmp_path, jsonl_writer):
        lex = lexicon_with_counts(
            tmp_path, jsonl_writer, "k",
            {"syn": 3, "hype": 2, "hypo": 12, "cohyp": 20, "dist": 10},
        )
        ts = assemble_target_set("k", "k#1", lex)
        assert isinstance(ts, TargetSet)
        counts = ts.relation_counts()
        assert counts[RelationType.SYN] == 3
        assert counts[RelationType.HYPE] == 2
        assert counts[RelationType.HYPO] == 10
        assert counts[RelationType.COHYP] == 10
        assert counts[RelationType.DIST_NGH] == 10
        assert sum(counts[r] for r in WORDNET_RELATIONS) == 25
        assert len(ts) == 35

    def test_missing_relation_rejects(self, tmp_path, jsonl_writer):
        lex = lexicon_with_counts(
            tmp_path, jsonl_writer, "k",
            {"syn": 3, "hype": 0, "hypo": 2, "cohyp": 2, "dist": 10},
        )
        rejection = assemble_target_set("k", "k#1", lex)
        assert isinstance(rejection, TargetSetRejection)
        assert rejection.missing == (RelationType.HYPE,)

    def test_cohyp_per_relation_cap(self, tmp_path, jsonl_writer):
        lex = lexicon_with_counts(
            tmp_path, jsonl_writer, "k",
            {"syn": 2, "hype": 2, "hypo": 10, "cohyp": 30, "dist": 10},
        )
        ts = assemble_target_set("k", "k#1", lex)
        counts = ts.relation_counts()
        assert counts[RelationType.COHYP] == 10
        assert sum(counts[r] for r in WORDNET_RELATIONS) == 24
        assert len(ts) == 34

    def test_wordnet_cap_drops_hypo_tail_first(self, tmp_path, jsonl_writer):
        lex = lexicon_with_counts(
            tmp_path, jsonl_writer, "k",
            {"syn": 8, "hype": 8, "hypo": 10, "cohyp": 10, "dist": 4},
        )
        ts = assemble_target_set("k", "k#1", lex)
        counts = ts.relation_counts()
        # 36 WordNet targets shrink to 30 by dropping six hyponyms from the tail
        assert counts[RelationType.HYPO] == 4
        assert counts[RelationType.COHYP] == 10
        assert sum(counts[r] for r in WORDNET_RELATIONS) == 30
        kept_hypo = [w for w, r in ts.targets if r is RelationType.HYPO]
        assert kept_hypo == [f"khypo{i}" for i in range(4)]

    def test_wordnet_cap_can_exhaust_hypo_and_reject(self, tmp_path, jsonl_writer):
        lex = lexicon_with_counts(
            tmp_path, jsonl_writer, "k",
            {"syn": 10, "hype": 10, "hypo": 8, "cohyp": 10, "dist": 4},
        )
        result = assemble_target_set("k", "k#1", lex)
        # 38 WordNet targets force all eight hyponyms out, so the key no
        # longer covers all five relation types and is rejected.
        assert isinstance(result, TargetSetRejection)
        assert result.missing == (RelationType.HYPO,)

    def test_file_order_is_preserved(self, tmp_path, jsonl_writer):
        rows = [
            entry("k", "k#1", "syn", "zebra"),
            entry("k", "k#1", "syn", "apple"),
            entry("k", "k#1", "hype", "h0"),
            entry("k", "k#1", "hypo", "y0"),
            entry("k", "k#1", "cohyp", "c0"),
            entry("k", None, "dist", "d0"),
        ]
        lex = build_lexicon(tmp_path, jsonl_writer, rows)
        ts = assemble_target_set("k", "k#1", lex)
        assert ts.words()[:2] == ("zebra", "apple")

    def test_deterministic(self, tmp_path, jsonl_writer):
        lex = lexicon_with_counts(
            tmp_path, jsonl_writer, "k",
            {"syn": 5, "hype": 3, "hypo": 12, "cohyp": 9, "dist": 10},
        )
        a = assemble_target_set("k", "k#1", lex)
        b = assemble_target_set("k", "k#1", lex)
        assert a.targets == b.targets

    def test_dist_targets_never_duplicate_wordnet_targets(self, tmp_path, jsonl_writer):
        rows = [
            entry("k", "k#1", "syn", "shared"),
            entry("k", "k#1", "hype", "h0"),
            entry("k", "k#1", "hypo", "y0"),
            entry("k", "k#1", "cohyp", "c0"),
            entry("k", None, "dist", "shared"),
            entry("k", None, "dist", "d1"),
        ]
        lex = build_lexicon(tmp_path, jsonl_writer, rows)
        ts = assemble_target_set("k", "k#1", lex)
        words = ts.words()
        assert len(set(words)) == len(words)
        assert ("shared", RelationType.SYN) in ts.targets
        assert ("d1", RelationType.DIST_NGH) in ts.targets

    def test_underfilled_dist_flag(self, tmp_path, jsonl_writer):
        lex = lexicon_with_counts(
            tmp_path, jsonl_writer, "k",
            {"syn": 1, "hype": 1, "hypo": 1, "cohyp": 1, "dist": 3},
        )
        ts = assemble_target_set("k", "k#1", lex)
        assert ts.underfilled_dist

    @given(
        syn=st.integers(0, 15),
        hype=st.integers(0, 15),
        hypo=st.integers(0, 25),
        cohyp=st.integers(0, 35),
        dist=st.integers(0, 15),
    )
    @settings(max_examples=60, deadline=None)
    def test_caps_always_hold(self, syn, hype, hypo, cohyp, dist):
        lex = in_memory_lexicon(
            "k", {"syn": syn, "hype": hype, "hypo": hypo, "cohyp": cohyp, "dist": dist}
        )
        result = assemble_target_set("k", "k#1", lex)
        if isinstance(result, TargetSetRejection):
            assert result.missing
            return
        counts = result.relation_counts()
        caps = CapConfig()
        assert all(counts[r] <= caps.per_relation for r in ALL_RELATIONS)
        assert sum(counts[r] for r in WORDNET_RELATIONS) <= caps.wordnet_total
        assert len(result) <= caps.grand_total
        assert all(counts[r] >= 1 for r in ALL_RELATIONS)
        assert len(set(result.words())) == len(result.words())


class TestNeighbors:
    def test_load_orders_and_dedupes(self, tmp_path, jsonl_writer):
        path = jsonl_writer(
            tmp_path / "neighbors.jsonl",
            [
                {
                    "key": "storm",
                    "neighbors": [
                        {"word": "gale", "score": 0.7},
                        {"word": "wind", "score": 0.9},
                        {"word": "storm", "score": 0.8},
                        {"word": "gale", "score": 0.2},
                        {"word": "breeze", "score": 0.7},
                    ],
                }
            ],
        )
        lists = load_neighbors(path)
        nl = lists["storm"]
        assert nl.words() == ("wind", "breeze", "gale")
        scores = [s for _, s in nl.neighbors]
        assert scores == sorted(scores, reverse=True)

    def test_score_range_enforced(self, tmp_path, jsonl_writer):
        path = jsonl_writer(
            tmp_path / "neighbors.jsonl",
            [{"key": "a", "neighbors": [{"word": "b", "score": 1.5}]}],
        )
        with pytest.raises(ParseError):
            load_neighbors(path)

    def test_filter_and_take(self):
        nl = NeighborList(key="k", neighbors=(("a", 0.9), ("b", 0.8), ("c", 0.7)))
        words, underfilled = dist_neighbors("k", nl, {"b"}, limit=2)
        assert words == ["a", "c"]
        assert not underfilled

    def test_short_list_flags_underfill(self):
        nl = NeighborList(key="k", neighbors=(("a", 0.9),))
        words, underfilled = dist_neighbors("k", nl, set(), limit=10)
        assert words == ["a"]
        assert underfilled

    def test_enumerated_filtering(self):
        neighbors = tuple((f"x{i}", 1.0 - i / 100) for i in range(1, 16))
        nl = NeighborList(key="k", neighbors=neighbors)
        words, underfilled = dist_neighbors("k", nl, {"x2", "x5"}, limit=10)
        assert words == ["x1", "x3", "x4", "x6", "x7", "x8", "x9", "x10", "x11", "x12"]
        assert not underfilled

    def test_output_disjoint_from_wordnet_and_ordered(self):
        neighbors = tuple((f"n{i}", 1.0 - i / 50) for i in range(20))
        nl = NeighborList(key="k", neighbors=neighbors)
        blocked = {f"n{i}" for i in range(0, 20, 3)}
        words, _ = dist_neighbors("k", nl, blocked, limit=8)
        assert not set(words) & blocked
        original_order = [w for w, _ in neighbors if w in words]
        assert words == original_order

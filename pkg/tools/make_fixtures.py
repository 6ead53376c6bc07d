#!/usr/bin/env python3
"""Generate the bundled desk-scale fixtures under tests/fixtures/.

Deterministic by construction (fixed seed); rerun only when the fixture
design changes, and commit the regenerated files.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

CONSONANTS = "bcdfglmnprstvz"
VOWELS = "aeiou"


def pseudo_noun(rng, syllables=2):
    word = ""
    for _ in range(syllables):
        word += rng.choice(CONSONANTS) + rng.choice(VOWELS)
    if rng.random() < 0.4:
        word += rng.choice("nrst")
    return word


def distinct_nouns(rng, count, taken):
    words = []
    while len(words) < count:
        word = pseudo_noun(rng, rng.choice([2, 2, 3]))
        if word not in taken:
            taken.add(word)
            words.append(word)
    return words


FILLERS = (
    "the a an of and to in on near under over with from into about after "
    "before between through during its their this that some many few "
    "quietly slowly finally almost again still once twice"
).split()


def sentence_tokens(rng, word, length):
    tokens = [rng.choice(FILLERS) for _ in range(length - 1)]
    position = rng.randrange(1, length - 1)
    tokens.insert(position, word)
    return tokens, position


def write_jsonl(path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def make_probe_fixture():
    rng = random.Random(20240801)
    taken = set()
    keys = distinct_nouns(rng, 20, taken)
    target_pool = distinct_nouns(rng, 240, taken)

    lexicon_rows = []
    sentence_rows = []
    sentence_counter = 0
    for key in keys:
        senses = [f"{key}#{i + 1}" for i in range(rng.choice([1, 1, 2]))]
        dist_words = rng.sample(target_pool, rng.randint(5, 8))
        for word in dist_words:
            lexicon_rows.append(
                {"key": key, "sense": None, "relation": "dist", "target": word}
            )
        for sense in senses:
            plan = {
                "syn": rng.randint(2, 4),
                "hype": rng.randint(1, 3),
                "hypo": rng.randint(3, 6),
                "cohyp": rng.randint(3, 6),
            }
            used = set(dist_words) | {key}
            for relation, count in plan.items():
                pool = [w for w in target_pool if w not in used]
                for word in rng.sample(pool, count):
                    used.add(word)
                    lexicon_rows.append(
                        {"key": key, "sense": sense, "relation": relation, "target": word}
                    )
            for _ in range(rng.randint(2, 3)):
                length = rng.randint(10, 14)
                tokens, position = sentence_tokens(rng, key, length)
                sentence_counter += 1
                sentence_rows.append(
                    {
                        "id": f"s{sentence_counter:04d}",
                        "tokens": tokens,
                        "key": key,
                        "key_index": position,
                        "sense": sense,
                    }
                )

    write_jsonl(OUT / "probe" / "lexicon.jsonl", lexicon_rows)
    write_jsonl(OUT / "probe" / "sentences.jsonl", sentence_rows)


def make_rerank_fixture():
    rng = random.Random(20240802)
    taken = set(FILLERS)
    keys = distinct_nouns(rng, 30, taken)
    neighbor_pool = distinct_nouns(rng, 120, taken)

    neighbor_rows = []
    gold_rows = []
    frequency_rows = []
    all_words = set(keys)
    for key in keys:
        words = rng.sample(neighbor_pool, 10)
        all_words.update(words)
        score = 0.9
        neighbors = []
        for word in words:
            neighbors.append({"word": word, "score": round(score, 4)})
            score -= rng.uniform(0.01, 0.05)
        neighbor_rows.append({"key": key, "neighbors": neighbors})

        labeled = rng.sample(words, rng.randint(2, 5))
        for word in labeled:
            relation = rng.choice(["syn", "hype", "hypo", "cohyp"])
            gold_rows.append({"key": key, "relation": relation, "word": word})
        for _ in range(rng.randint(0, 3)):
            extra = rng.choice(neighbor_pool)
            if extra not in labeled and extra != key:
                gold_rows.append(
                    {
                        "key": key,
                        "relation": rng.choice(["syn", "hype", "hypo", "cohyp"]),
                        "word": extra,
                    }
                )

        frequency_rows.append({"key": key, "count": int(10 ** rng.uniform(1, 6))})

    seen_gold = set()
    unique_gold = []
    for row in gold_rows:
        marker = (row["key"], row["relation"], row["word"])
        if marker not in seen_gold:
            seen_gold.add(marker)
            unique_gold.append(row)

    corpus_lines = []
    for word in sorted(all_words):
        for _ in range(10):
            tokens, _ = sentence_tokens(rng, word, rng.randint(10, 14))
            corpus_lines.append(" ".join(tokens))
    for _ in range(100):
        tokens = [rng.choice(FILLERS) for _ in range(rng.randint(10, 14))]
        corpus_lines.append(" ".join(tokens))
    rng.shuffle(corpus_lines)

    write_jsonl(OUT / "rerank" / "neighbors.jsonl", neighbor_rows)
    write_jsonl(OUT / "rerank" / "gold.jsonl", unique_gold)
    write_jsonl(OUT / "rerank" / "frequencies.jsonl", frequency_rows)
    corpus_path = OUT / "rerank" / "corpus.txt"
    corpus_path.parent.mkdir(parents=True, exist_ok=True)
    corpus_path.write_text(
        "".join(line + "\n" for line in corpus_lines), encoding="utf-8"
    )


if __name__ == "__main__":
    make_probe_fixture()
    make_rerank_fixture()
    print(f"fixtures written under {OUT}")

import json
import random
from pathlib import Path

import numpy as np
import pytest
import torch

from cross_model_control.tokenmap import (
    UNMAPPED,
    MappingError,
    MappingStrategy,
    TokenMapping,
    VocabFormat,
    build_mapping,
    edit_distance,
    identity_mapping,
    load_foreign_vocab,
    load_mapping,
    mapping_report,
    match_token,
    prefix_candidates,
    prefix_candidates_naive,
    save_mapping,
    scatter_logits,
)
from cross_model_control.vocab import Tokenizer, Vocabulary

ULTIMATE_DELTA = ["ultimately", "ult", "ul", "u", "estimate", "late", "mate"]


class TestEditDistance:
    """Test Levenshtein distance."""

    def test_symmetric(self):
        assert edit_distance("kitten", "sitting") == edit_distance("sitting", "kitten") == 3

    def test_empty(self):
        assert edit_distance("", "abc") == 3
        assert edit_distance("", "") == 0

    def test_code_points(self):
        assert edit_distance("▁the", "the") == 1


class TestPrefixCandidates:
    """Test prefix candidate search against a linear scan."""

    def test_ultimate(self):
        v = Vocabulary.from_content(ULTIMATE_DELTA)
        found = sorted(v.tokens[i] for i in prefix_candidates("ultimate", v))
        assert found == ["u", "ul", "ult", "ultimately"]

    @pytest.mark.parametrize("tok", ["ultimate", "u", "late", "mat", "zzz", "estimates"])
    def test_matches_naive_scan(self, tok: str):
        v = Vocabulary.from_content(ULTIMATE_DELTA)
        assert prefix_candidates(tok, v) == prefix_candidates_naive(tok, v)

    def test_matches_naive_scan_on_real_vocab(self, merge_tok: Tokenizer, char_tok: Tokenizer):
        delta = merge_tok.vocab
        for i in char_tok.vocab.content_ids():
            tok = char_tok.vocab.tokens[i]
            assert prefix_candidates(tok, delta) == prefix_candidates_naive(tok, delta)

    def test_specials_never_candidates(self):
        v = Vocabulary.from_content(["<b"])
        assert all(not v.is_special(i) for i in prefix_candidates("<bos>", v))


class TestMatchToken:
    """Test the three matching strategies."""

    def test_exact_first(self):
        v = Vocabulary.from_content(ULTIMATE_DELTA)
        for strategy in MappingStrategy:
            assert v.tokens[match_token("late", v, strategy)] == "late"

    def test_exact_strategy_leaves_unmapped(self):
        v = Vocabulary.from_content(ULTIMATE_DELTA)
        assert match_token("ultimate", v, MappingStrategy.EXACT) == UNMAPPED

    def test_pm_mined_prefers_prefix_family(self):
        v = Vocabulary.from_content(ULTIMATE_DELTA)
        assert v.tokens[match_token("ultimate", v, MappingStrategy.PM_MINED)] == "ultimately"

    def test_mined_searches_everything(self):
        v = Vocabulary.from_content(["estimate", "zz"])
        assert v.tokens[match_token("ultimate", v, MappingStrategy.MINED)] == "estimate"
        assert match_token("ultimate", v, MappingStrategy.PM_MINED) == UNMAPPED

    def test_tie_goes_to_longer(self):
        # "ab" and "abcd" are both at distance 1 from "abc"
        v = Vocabulary.from_content(["ab", "abcd"])
        assert v.tokens[match_token("abc", v, MappingStrategy.PM_MINED)] == "abcd"


class TestBuildMapping:
    """Test whole-vocabulary mappings."""

    def test_identity(self, char_tok: Tokenizer):
        m = identity_mapping(char_tok.vocab)
        assert m.is_identity()
        assert m.stats is not None and m.stats.unmapped == 0

    def test_specials_wired(self):
        user = Vocabulary.from_content(["q"])
        delta = Vocabulary.from_content(["z"])
        m = build_mapping(user, delta, MappingStrategy.PM_MINED)
        assert m.entries[:4].tolist() == [0, 1, 2, 3]
        assert m.entries[4] == UNMAPPED

    def test_stats_add_up(self, char_tok: Tokenizer, merge_tok: Tokenizer):
        m = build_mapping(merge_tok.vocab, char_tok.vocab, MappingStrategy.PM_MINED)
        assert m.stats is not None
        assert m.stats.mapped + m.stats.unmapped == len(merge_tok.vocab)
        # every merge token starts with a character the char vocabulary holds
        assert m.stats.unmapped == 0

    def test_out_of_range_entry(self):
        with pytest.raises(MappingError) as exc_info:
            TokenMapping(MappingStrategy.EXACT, np.array([0, 7]), delta_size=5)
        assert "out of range" in str(exc_info.value)

    def test_entries_read_only(self, char_tok: Tokenizer):
        m = identity_mapping(char_tok.vocab)
        with pytest.raises(ValueError):
            m.entries[0] = 1


class TestScatterLogits:
    """Test gathering delta logits into user space."""

    def test_unmapped_gets_zero(self):
        m = TokenMapping(MappingStrategy.MINED, np.array([2, UNMAPPED, 0, 0]), delta_size=3)
        out = scatter_logits(torch.tensor([[1.0, 2.0, 3.0]]), m)
        assert out.tolist() == [[3.0, 0.0, 1.0, 1.0]]

    def test_wrong_width(self):
        m = TokenMapping(MappingStrategy.MINED, np.array([0, 1]), delta_size=2)
        with pytest.raises(MappingError) as exc_info:
            scatter_logits(torch.zeros(3), m)
        assert "mapping expects 2" in str(exc_info.value)

    def test_differentiable(self):
        m = TokenMapping(MappingStrategy.MINED, np.array([1, 1, UNMAPPED]), delta_size=2)
        x = torch.tensor([0.5, -0.5], requires_grad=True)
        scatter_logits(x, m).sum().backward()
        assert x.grad is not None and x.grad.tolist() == [0.0, 2.0]


class TestMappingFiles:
    """Test mapping file reading and writing."""

    def test_round_trip(self, tmp_path: Path, char_tok: Tokenizer, merge_tok: Tokenizer):
        m = build_mapping(char_tok.vocab, merge_tok.vocab, MappingStrategy.PM_MINED)
        save_mapping(m, tmp_path / "mapping.map")
        loaded = load_mapping(tmp_path / "mapping.map", char_tok.vocab, merge_tok.vocab)
        assert loaded == m
        assert loaded.stats == m.stats

    def test_header(self, tmp_path: Path, char_tok: Tokenizer):
        save_mapping(identity_mapping(char_tok.vocab), tmp_path / "m.map")
        header = (tmp_path / "m.map").read_text(encoding='utf-8').splitlines()[0]
        n = len(char_tok.vocab)
        assert header == f"cmc-map v1 exact {n} {n}"

    def test_wrong_vocabulary(self, tmp_path: Path, char_tok: Tokenizer, merge_tok: Tokenizer):
        save_mapping(identity_mapping(char_tok.vocab), tmp_path / "m.map")
        with pytest.raises(MappingError):
            load_mapping(tmp_path / "m.map", merge_tok.vocab, merge_tok.vocab)

    def test_bad_header(self, write_text):
        v = Vocabulary.from_content(["a"])
        with pytest.raises(MappingError) as exc_info:
            load_mapping(write_text("m.map", "hello\n"), v, v)
        assert "bad header" in str(exc_info.value)

    def test_entry_count(self, write_text):
        v = Vocabulary.from_content(["a"])
        with pytest.raises(MappingError) as exc_info:
            load_mapping(write_text("m.map", "cmc-map v1 exact 5 5\n0 0\n"), v, v)
        assert "declares 5 entries" in str(exc_info.value)


class TestForeignVocab:
    """Test loading other tokenizers' vocabularies."""

    def test_hf_json_strip_prefix(self, write_text):
        path = write_text("tokenizer.json", json.dumps({"model": {"vocab": {"▁the": 1, "a": 0, "the": 2}}}))
        v = load_foreign_vocab(path, VocabFormat.HF_JSON, strip_prefix="▁")
        # "the" appears twice after stripping
        assert v.tokens[4:] == ("a", "the")

    def test_bare_vocab_json(self, write_text):
        path = write_text("vocab.json", json.dumps({"x": 1, "y": 0}))
        assert load_foreign_vocab(path, VocabFormat.HF_JSON).tokens[4:] == ("y", "x")

    def test_plain_own_vocab_keeps_tag(self, tmp_path: Path, char_tok: Tokenizer):
        from cross_model_control.vocab import save_vocab
        save_vocab(char_tok.vocab, tmp_path / "vocab.txt")
        assert load_foreign_vocab(tmp_path / "vocab.txt", VocabFormat.PLAIN).tag == char_tok.vocab.tag


class TestMappingReport:
    """Test the hardest-token report."""

    def test_sorted_by_distance(self):
        user = Vocabulary.from_content(["ultimate", "late"])
        delta = Vocabulary.from_content(ULTIMATE_DELTA)
        m = build_mapping(user, delta, MappingStrategy.PM_MINED)
        report = mapping_report(m, user, delta)
        assert report['user_token'].tolist() == ["ultimate", "late"]
        assert report['distance'].tolist() == [2.0, 0.0]


def _random_token(rng: random.Random, alphabet: str = "abcd", longest: int = 6) -> str:
    return ''.join(rng.choice(alphabet) for _ in range(rng.randint(1, longest)))

def _random_vocab(rng: random.Random, size: int) -> Vocabulary:
    tokens = sorted({_random_token(rng) for _ in range(size)})
    rng.shuffle(tokens)
    return Vocabulary.from_content(tokens)

def _oracle_match(tok: str, delta: Vocabulary, strategy: MappingStrategy) -> int:
    ''' Linear scan over every content token, no pruning. '''
    content = list(delta.content_ids())
    for i in content:
        if delta.tokens[i] == tok:
            return i
    match strategy:
        case MappingStrategy.EXACT:
            return UNMAPPED
        case MappingStrategy.MINED:
            pool = content
        case MappingStrategy.PM_MINED:
            pool = [i for i in content if delta.tokens[i].startswith(tok) or tok.startswith(delta.tokens[i])]
    if not pool:
        return UNMAPPED
    return min(pool, key=lambda i: (edit_distance(tok, delta.tokens[i]), -len(delta.tokens[i]), delta.tokens[i]))


class TestMatchTokenOracle:
    """Test matching against an unpruned linear scan."""

    @pytest.mark.parametrize("seed", range(20))
    def test_random_vocabularies(self, seed: int):
        rng = random.Random(seed)
        delta = _random_vocab(rng, rng.randint(20, 500))
        user_tokens = {_random_token(rng, longest=7) for _ in range(30)}
        for strategy in (MappingStrategy.MINED, MappingStrategy.PM_MINED):
            for tok in sorted(user_tokens):
                assert match_token(tok, delta, strategy) == _oracle_match(tok, delta, strategy), (strategy, tok)

    def test_ultimate(self):
        v = Vocabulary.from_content(ULTIMATE_DELTA)
        for strategy in MappingStrategy:
            assert match_token("ultimate", v, strategy) == _oracle_match("ultimate", v, strategy)

    def test_mined_tie_goes_to_smaller_string(self):
        v = Vocabulary.from_content(["zz", "cb", "ab"])
        assert v.tokens[match_token("xb", v, MappingStrategy.MINED)] == "ab"

    def test_pm_mined_tie_goes_to_smaller_string(self):
        v = Vocabulary.from_content(["abce", "abcd"])
        assert v.tokens[match_token("abc", v, MappingStrategy.PM_MINED)] == "abcd"

    def test_mined_tie_prefers_length_over_order(self):
        # all three are one edit away
        v = Vocabulary.from_content(["sitten", "kitte", "kittens"])
        assert v.tokens[match_token("kitten", v, MappingStrategy.MINED)] == "kittens"

    def test_nearer_prefix_beats_longer_extension(self):
        v = Vocabulary.from_content(["a", "abxxxxx"])
        assert v.tokens[match_token("ab", v, MappingStrategy.PM_MINED)] == "a"


class TestMappingProperties:
    """Test algebraic properties of distances and mappings."""

    def test_edit_distance_is_a_metric(self):
        rng = random.Random(7)
        for _ in range(200):
            a, b, c = (_random_token(rng, "abc", 7) for _ in range(3))
            assert edit_distance(a, b) == edit_distance(b, a)
            assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)
            assert (edit_distance(a, b) == 0) == (a == b)

    def test_scatter_is_linear(self):
        generator = torch.Generator().manual_seed(0)
        entries = torch.randint(-1, 6, (9,), generator=generator).numpy()
        m = TokenMapping(MappingStrategy.MINED, entries, delta_size=6)
        x = torch.randn(3, 6, generator=generator, dtype=torch.float64)
        y = torch.randn(3, 6, generator=generator, dtype=torch.float64)
        combined = scatter_logits(2.5 * x - 0.5 * y, m)
        assert torch.allclose(combined, 2.5 * scatter_logits(x, m) - 0.5 * scatter_logits(y, m))

    @pytest.mark.parametrize("seed", range(5))
    def test_exact_entries_survive_pm_mined(self, seed: int):
        rng = random.Random(100 + seed)
        user, delta = _random_vocab(rng, 80), _random_vocab(rng, 200)
        exact = build_mapping(user, delta, MappingStrategy.EXACT)
        pm = build_mapping(user, delta, MappingStrategy.PM_MINED)
        kept = exact.entries != UNMAPPED
        assert kept[list(user.content_ids())].any()
        assert np.array_equal(exact.entries[kept], pm.entries[kept])

from pathlib import Path

import pytest

from cross_model_control.vocab import (
    SPECIAL_TOKENS,
    TokenSequence,
    Tokenizer,
    TokenizerScheme,
    TokenTrie,
    Vocabulary,
    VocabularyError,
    build_vocab,
    load_tokenizer,
    load_vocab,
    save_tokenizer,
    save_vocab,
)
from cross_model_control.vocab.files import merges_path_for


class TestVocabulary:
    """Test vocabulary construction and validation."""

    def test_specials_come_first(self):
        v = Vocabulary.from_content(["x", "y"])
        assert v.tokens[:4] == SPECIAL_TOKENS
        assert (v.specials.bos, v.specials.eos, v.specials.pad, v.specials.unk) == (0, 1, 2, 3)
        assert list(v.content_ids()) == [4, 5]

    def test_duplicate_token(self):
        with pytest.raises(VocabularyError) as exc_info:
            Vocabulary.from_content(["x", "x"])
        assert "Duplicate token" in str(exc_info.value)

    def test_missing_special(self):
        with pytest.raises(VocabularyError) as exc_info:
            Vocabulary(("a", "b", "c", "d", "e"))
        assert "missing" in str(exc_info.value)

    def test_newline_token(self):
        with pytest.raises(VocabularyError) as exc_info:
            Vocabulary.from_content(["a\nb"])
        assert "newline" in str(exc_info.value)

    def test_needs_content(self):
        with pytest.raises(VocabularyError) as exc_info:
            Vocabulary(SPECIAL_TOKENS)
        assert "at least one content token" in str(exc_info.value)

    def test_tag_is_content_hash(self):
        assert Vocabulary.from_content(["a", "b"]).tag == Vocabulary.from_content(["a", "b"]).tag
        assert Vocabulary.from_content(["a", "b"]).tag != Vocabulary.from_content(["b", "a"]).tag

    def test_sequence_tag_check(self):
        v = Vocabulary.from_content(["a"])
        with pytest.raises(VocabularyError) as exc_info:
            TokenSequence((0, 4), "other").check_against(v)
        assert "vocabulary mismatch" in str(exc_info.value)


class TestTokenizer:
    """Test greedy longest-match encoding."""

    def test_char_scheme_one_token_per_char(self, char_tok: Tokenizer):
        seq = char_tok.encode("apple")
        assert len(seq) == 5
        assert char_tok.decode(seq) == "apple"

    def test_unknown_char_is_unk(self, char_tok: Tokenizer):
        seq = char_tok.encode("a~")
        assert seq.ids[-1] == char_tok.vocab.specials.unk

    def test_bos_eos(self, char_tok: Tokenizer):
        seq = char_tok.encode("ap", add_bos=True, add_eos=True)
        assert seq.ids[0] == char_tok.vocab.specials.bos
        assert seq.ids[-1] == char_tok.vocab.specials.eos
        assert char_tok.decode(seq) == "ap"

    def test_char_scheme_rejects_long_tokens(self):
        with pytest.raises(VocabularyError) as exc_info:
            Tokenizer(Vocabulary.from_content(["a", "ab"]), TokenizerScheme.CHAR)
        assert "multi-character" in str(exc_info.value)

    def test_encode_pair_response_start(self, char_tok: Tokenizer):
        enc = char_tok.encode_pair("Q: a", " A")
        assert enc.seq.ids[0] == char_tok.vocab.specials.bos
        assert enc.seq.ids[-1] == char_tok.vocab.specials.eos
        # bos + 4 prompt characters
        assert enc.response_start == 5
        assert char_tok.decode(enc.seq[enc.response_start:]) == " A"

    def test_straddling_token_counts_as_response(self):
        tok = Tokenizer(Vocabulary.from_content(["a", "b", "ab"]), TokenizerScheme.MERGE, (("a", "b"),))
        enc = tok.encode_pair("a", "b", add_eos=False)
        assert enc.seq.ids == (0, 6)
        assert enc.response_start == 1

    def test_offsets_cover_text(self, merge_tok: Tokenizer):
        text = "Q: reverse the word river"
        ids, spans = merge_tok.encode_with_offsets(text)
        assert len(ids) == len(spans)
        assert spans[0][0] == 0 and spans[-1][1] == len(text)
        assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))


class TestBuildVocab:
    """Test vocabulary building."""

    def test_size_bound(self):
        tok = build_vocab(["the cat sat on the mat"] * 3, TokenizerScheme.MERGE, 20)
        assert len(tok.vocab) <= 20

    def test_merge_encoding_is_shorter(self, char_tok: Tokenizer, merge_tok: Tokenizer):
        text = "Q: reverse the word apple"
        assert len(merge_tok.encode(text)) < len(char_tok.encode(text))

    def test_deterministic(self):
        a = build_vocab(["abcabc", "bcbc"], TokenizerScheme.MERGE, 12)
        b = build_vocab(["abcabc", "bcbc"], TokenizerScheme.MERGE, 12)
        assert a == b

    def test_too_small(self):
        with pytest.raises(VocabularyError) as exc_info:
            build_vocab(["abc"], TokenizerScheme.CHAR, 4)
        assert "target_size" in str(exc_info.value)

    def test_empty_corpus(self):
        with pytest.raises(VocabularyError) as exc_info:
            build_vocab(["", "\n"], TokenizerScheme.CHAR, 10)
        assert "empty corpus" in str(exc_info.value)


class TestVocabFiles:
    """Test vocabulary and merge rule files."""

    def test_vocab_round_trip(self, tmp_path: Path):
        v = Vocabulary.from_content(["a", " b", "\\"])
        save_vocab(v, tmp_path / "vocab.txt")
        assert load_vocab(tmp_path / "vocab.txt") == v

    def test_bad_header(self, write_text):
        with pytest.raises(VocabularyError) as exc_info:
            load_vocab(write_text("vocab.txt", "a\nb\n"))
        assert "first lines" in str(exc_info.value)

    def test_tokenizer_scheme_from_files(self, tmp_path: Path, char_tok: Tokenizer, merge_tok: Tokenizer):
        save_tokenizer(char_tok, tmp_path / "char.txt")
        save_tokenizer(merge_tok, tmp_path / "merge.txt")
        assert not merges_path_for(tmp_path / "char.txt").exists()
        assert load_tokenizer(tmp_path / "char.txt") == char_tok
        assert load_tokenizer(tmp_path / "merge.txt") == merge_tok


class TestTokenTrie:
    """Test trie lookups."""

    def test_no_match(self):
        assert TokenTrie({"ab": 4}).longest_match("b", 0) == (-1, 0)

    def test_match_from_offset(self):
        trie = TokenTrie({"a": 4, "ab": 5})
        assert trie.longest_match("xab", 1) == (5, 2)

    def test_max_token_len(self):
        assert TokenTrie({"a": 4, "abcd": 5}).max_token_len == 4

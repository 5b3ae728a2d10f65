import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from demovec.corpus import (
    AgeRangeError,
    DemographicKey,
    EnhancedTokenFormatError,
    EN_PRONOUNS,
    Gender,
    LemmaTable,
    LemmaTableError,
    NotEnhancedTokenError,
    RU_PRONOUNS,
    RecordParseError,
    RecordValidationError,
    enhance,
    lemmatize,
    load_lemma_table,
    load_wordlist,
    parse_enhanced,
    parse_post,
    prep_corpus,
    read_posts,
    render_enhanced,
    tokenize,
    try_parse_enhanced,
)


class TestParsePost:
    def test_direct_field_mapping(self):
        post = parse_post('{"text":"я люблю кофе","gender":"f","age":24}')
        assert post.text == "я люблю кофе"
        assert post.gender == Gender.F
        assert post.age == 24
        assert post.key == DemographicKey(Gender.F, 24)

    def test_gender_enum_violation(self):
        with pytest.raises(RecordValidationError):
            parse_post('{"text":"hi","gender":"x","age":24}')

    def test_age_out_of_range(self):
        with pytest.raises(AgeRangeError):
            parse_post('{"text":"hi","gender":"m","age":9}', age_min=14, age_max=60)

    def test_malformed_json(self):
        with pytest.raises(RecordParseError):
            parse_post("{not json")

    def test_non_object_record(self):
        with pytest.raises(RecordParseError):
            parse_post("[1, 2]")

    def test_gender_case_insensitive(self):
        assert parse_post('{"text":"hi","gender":"M","age":30}').gender == Gender.M

    def test_missing_text(self):
        with pytest.raises(RecordValidationError):
            parse_post('{"gender":"f","age":24}')
        with pytest.raises(RecordValidationError):
            parse_post('{"text":"   ","gender":"f","age":24}')

    def test_age_from_birth_year_and_post_date(self):
        post = parse_post('{"text":"hi","gender":"f","birth_year":1990,"post_date":"2014-06-01"}')
        assert post.age == 24

    def test_explicit_age_wins_over_birth_year(self):
        post = parse_post(
            '{"text":"hi","gender":"f","age":30,"birth_year":1990,"post_date":"2014-06-01"}'
        )
        assert post.age == 30

    def test_missing_age_entirely(self):
        with pytest.raises(RecordValidationError):
            parse_post('{"text":"hi","gender":"f"}')

    def test_bad_post_date(self):
        with pytest.raises(RecordValidationError):
            parse_post('{"text":"hi","gender":"f","birth_year":1990,"post_date":"June"}')

    def test_bool_age_rejected(self):
        with pytest.raises(RecordValidationError):
            parse_post('{"text":"hi","gender":"f","age":true}')

    def test_unknown_fields_ignored(self):
        post = parse_post('{"text":"hi","gender":"f","age":24,"likes":7}')
        assert post.age == 24


class TestTokenize:
    def test_punctuation_split(self):
        assert tokenize("Hello, world!") == ["hello", "world"]

    def test_dash_and_period_separators(self):
        assert tokenize("Я — это я.") == ["я", "это", "я"]

    def test_empty(self):
        assert tokenize("") == []

    def test_digits_are_separators(self):
        assert tokenize("abc123def") == ["abc", "def"]

    def test_interior_apostrophe_and_hyphen_kept(self):
        assert tokenize("don't re-use") == ["don't", "re-use"]

    def test_leading_trailing_hyphen_stripped(self):
        assert tokenize("-foo- 'bar'") == ["foo", "bar"]

    def test_angle_brackets_and_colon_are_separators(self):
        assert tokenize("<I:F:24>") == ["i", "f"]

    @given(st.text(max_size=200))
    @settings(max_examples=300, deadline=None)
    def test_never_emits_enhanced_surface(self, text):
        for tok in tokenize(text):
            assert not tok.startswith("<I:")
            assert tok == tok.lower()
            assert "<" not in tok and ">" not in tok and ":" not in tok


class TestEnhancedTokens:
    def test_render(self):
        assert render_enhanced(DemographicKey(Gender.F, 24)) == "<I:F:24>"

    def test_parse(self):
        assert parse_enhanced("<I:M:41>") == DemographicKey(Gender.M, 41)

    def test_not_an_enhanced_token(self):
        with pytest.raises(NotEnhancedTokenError):
            parse_enhanced("word")

    def test_malformed_prefix_is_format_error(self):
        for bad in ("<I:X:24>", "<I:F:>", "<I:F:2a>", "<I:F:024>", "<I:F:24"):
            with pytest.raises(EnhancedTokenFormatError):
                parse_enhanced(bad)

    def test_try_parse(self):
        assert try_parse_enhanced("<I:F:5>") == DemographicKey(Gender.F, 5)
        assert try_parse_enhanced("word") is None
        assert try_parse_enhanced("<I:bad") is None

    @given(st.sampled_from([Gender.F, Gender.M]), st.integers(min_value=0, max_value=150))
    def test_round_trip(self, gender, age):
        key = DemographicKey(gender, age)
        assert parse_enhanced(render_enhanced(key)) == key

    def test_key_total_order(self):
        keys = [
            DemographicKey(Gender.M, 18),
            DemographicKey(Gender.F, 21),
            DemographicKey(Gender.F, 20),
        ]
        assert sorted(keys) == [
            DemographicKey(Gender.F, 20),
            DemographicKey(Gender.F, 21),
            DemographicKey(Gender.M, 18),
        ]


class TestLemmatize:
    def test_hit_and_miss(self):
        table = LemmaTable({"cats": "cat"})
        assert lemmatize(["cats", "ran"], table) == ["cat", "ran"]

    def test_gendered_form_collapse(self):
        table = LemmaTable({"красивая": "красивый"})
        assert lemmatize(["красивая"], table) == ["красивый"]

    def test_empty(self):
        assert lemmatize([], LemmaTable()) == []

    def test_chain_resolution_makes_idempotent(self):
        table = LemmaTable({"a": "b", "b": "c"})
        assert table.lemma("a") == "c"
        for surface, _ in table.items():
            assert table.lemma(table.lemma(surface)) == table.lemma(surface)

    def test_cycle_rejected(self):
        with pytest.raises(LemmaTableError):
            LemmaTable({"a": "b", "b": "a"})

    def test_tsv_loading(self, tmp_path):
        path = tmp_path / "lemmas.tsv"
        path.write_text("# comment\nCats\tcat\nбыла\tбыть\n\n", encoding="utf-8")
        table = load_lemma_table(path)
        assert table.lemma("cats") == "cat"
        assert table.lemma("была") == "быть"
        assert len(table) == 2

    def test_tsv_bad_line(self, tmp_path):
        path = tmp_path / "lemmas.tsv"
        path.write_text("one_column_only\n", encoding="utf-8")
        with pytest.raises(LemmaTableError):
            load_lemma_table(path)


class TestEnhance:
    KEY_F24 = DemographicKey(Gender.F, 24)

    def test_rule_application(self):
        out = enhance(["я", "люблю", "кофе"], self.KEY_F24, RU_PRONOUNS)
        assert out == ["<I:F:24>", "люблю", "кофе"]

    def test_oblique_case_form(self):
        out = enhance(["мне", "скучно"], DemographicKey(Gender.M, 30), RU_PRONOUNS)
        assert out == ["<I:M:30>", "скучно"]

    def test_no_pronoun_present(self):
        assert enhance(["кофе"], self.KEY_F24, RU_PRONOUNS) == ["кофе"]

    @given(st.lists(st.sampled_from(["я", "мне", "кофе", "i", "me", "день"]), max_size=30))
    def test_length_preserved_and_non_pronouns_untouched(self, tokens):
        out = enhance(tokens, self.KEY_F24, RU_PRONOUNS)
        assert len(out) == len(tokens)
        for before, after in zip(tokens, out):
            if before in RU_PRONOUNS:
                assert after == "<I:F:24>"
            else:
                assert after == before


class TestPrep:
    def _write_posts(self, path, records):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def test_rewrite_and_counters(self, tmp_path):
        src = tmp_path / "posts.jsonl"
        self._write_posts(
            src,
            [
                {"text": "я люблю кофе", "gender": "f", "age": 24},
                {"text": "мне скучно", "gender": "m", "age": 30},
                {"text": "hi", "gender": "x", "age": 30},
                {"text": "hi", "gender": "m", "age": 9},
                {"text": "123", "gender": "m", "age": 30},
            ],
        )
        out = tmp_path / "corpus.txt"
        stats = prep_corpus(src, out, pronouns=RU_PRONOUNS)
        assert stats.posts_written == 2
        assert stats.skipped_invalid == 1
        assert stats.skipped_age_range == 1
        assert stats.skipped_empty == 1
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines == ["<I:F:24> люблю кофе", "<I:M:30> скучно"]

    def test_parse_error_counted(self, tmp_path):
        src = tmp_path / "posts.jsonl"
        src.write_text('{"text":"я","gender":"f","age":24}\n{bad\n', encoding="utf-8")
        stats = prep_corpus(src, tmp_path / "c.txt", pronouns=RU_PRONOUNS)
        assert stats.posts_written == 1
        assert stats.skipped_parse == 1

    def test_lemmatization_pass(self, tmp_path):
        src = tmp_path / "posts.jsonl"
        self._write_posts(src, [{"text": "я красивая", "gender": "f", "age": 24}])
        table = LemmaTable({"красивая": "красивый"})
        prep_corpus(src, tmp_path / "c.txt", pronouns=RU_PRONOUNS, lemma_table=table)
        assert (tmp_path / "c.txt").read_text(encoding="utf-8") == "<I:F:24> красивый\n"

    def test_streaming_determinism(self, tmp_path):
        src = tmp_path / "posts.jsonl"
        self._write_posts(
            src,
            [{"text": f"я пишу пост номер {i}", "gender": "fm"[i % 2], "age": 20 + i % 10}
             for i in range(50)],
        )
        out1, out2 = tmp_path / "c1.txt", tmp_path / "c2.txt"
        prep_corpus(src, out1, pronouns=RU_PRONOUNS)
        prep_corpus(src, out2, pronouns=RU_PRONOUNS)
        assert out1.read_bytes() == out2.read_bytes()

    def test_english_pronoun_set(self, tmp_path):
        src = tmp_path / "posts.jsonl"
        self._write_posts(src, [{"text": "I love my coffee", "gender": "f", "age": 24}])
        prep_corpus(src, tmp_path / "c.txt", pronouns=EN_PRONOUNS)
        assert (tmp_path / "c.txt").read_text(encoding="utf-8") == "<I:F:24> love <I:F:24> coffee\n"

    def test_read_posts_stats(self, tmp_path):
        src = tmp_path / "posts.jsonl"
        self._write_posts(src, [{"text": "a", "gender": "f", "age": 24}])
        from demovec.corpus import PrepStats

        stats = PrepStats()
        posts = list(read_posts(src, stats=stats))
        assert len(posts) == 1
        assert stats.skipped_parse == 0


def test_load_wordlist(tmp_path):
    path = tmp_path / "words.txt"
    path.write_text("# header\nBrave\n\nkind\nbrave\n", encoding="utf-8")
    assert load_wordlist(path) == ["brave", "kind"]

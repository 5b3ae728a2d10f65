"""Corpus ingestion and rewriting.

Streams demographically annotated posts from JSONL, tokenizes and
lemmatizes them, and replaces first-person pronouns with enhanced
I-tokens of the form ``<I:F:24>`` that carry the author's gender and
age into the training corpus.
"""
from __future__ import annotations

import datetime
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, NamedTuple

__all__ = [
    "Gender",
    "DemographicKey",
    "Post",
    "LemmaTable",
    "PrepStats",
    "CorpusError",
    "RecordParseError",
    "RecordValidationError",
    "AgeRangeError",
    "NotEnhancedTokenError",
    "EnhancedTokenFormatError",
    "LemmaTableError",
    "RU_PRONOUNS",
    "EN_PRONOUNS",
    "tokenize",
    "lemmatize",
    "enhance",
    "render_enhanced",
    "parse_enhanced",
    "try_parse_enhanced",
    "parse_post",
    "read_posts",
    "load_lemma_table",
    "load_wordlist",
    "prep_corpus",
]

DEFAULT_AGE_MIN = 14
DEFAULT_AGE_MAX = 60

# Singular first-person case forms; possessives deliberately excluded.
RU_PRONOUNS = frozenset({"я", "меня", "мне", "мной", "мною"})
EN_PRONOUNS = frozenset({"i", "me", "my", "mine", "myself"})


class CorpusError(Exception):
    """Base class for corpus-level failures."""


class RecordParseError(CorpusError):
    """Input line is not a well-formed JSON record."""


class RecordValidationError(CorpusError):
    """Record parsed but violates the post schema."""


class AgeRangeError(CorpusError):
    """Author age falls outside the configured range."""


class NotEnhancedTokenError(CorpusError):
    """String is not an enhanced I-token at all."""


class EnhancedTokenFormatError(CorpusError):
    """String starts like an enhanced I-token but is malformed."""


class LemmaTableError(CorpusError):
    """Lemma table file is malformed or inconsistent."""


class Gender(str, Enum):
    F = "F"
    M = "M"

    @classmethod
    def from_value(cls, value: object) -> "Gender":
        if isinstance(value, Gender):
            return value
        if isinstance(value, str):
            v = value.strip().upper()
            if v in ("F", "M"):
                return cls(v)
        raise RecordValidationError(f"gender must be 'f' or 'm', got {value!r}")


class DemographicKey(NamedTuple):
    """The (gender, age) identity of an enhanced I-token.

    Tuple ordering gives the total order used everywhere: all F keys
    sort before all M keys, ascending age within a gender.
    """

    gender: Gender
    age: int


@dataclass(frozen=True)
class Post:
    text: str
    gender: Gender
    age: int

    @property
    def key(self) -> DemographicKey:
        return DemographicKey(self.gender, self.age)


# Maximal runs of Unicode letters; apostrophes/hyphens glue runs together
# only when flanked by letters on both sides. Digits, underscores and all
# punctuation (including < > :) are separators, so no raw text can ever
# tokenize into an enhanced-token surface.
_LETTER = r"[^\W\d_]"
_TOKEN_RE = re.compile(rf"{_LETTER}+(?:['’’-]{_LETTER}+)*")

_ENHANCED_RE = re.compile(r"^<I:([FM]):(0|[1-9][0-9]*)>$")


def tokenize(text: str) -> list[str]:
    """Lowercase and split into letter runs; everything else separates."""
    return _TOKEN_RE.findall(text.lower())


def render_enhanced(key: DemographicKey) -> str:
    """Render a key as its corpus surface, e.g. ``<I:F:24>``."""
    return f"<I:{key.gender.value}:{key.age:d}>"


def parse_enhanced(s: str) -> DemographicKey:
    """Inverse of :func:`render_enhanced`.

    Raises ``NotEnhancedTokenError`` for ordinary strings and
    ``EnhancedTokenFormatError`` for strings that carry the ``<I:``
    prefix but do not match the exact surface form.
    """
    m = _ENHANCED_RE.match(s)
    if m is not None:
        return DemographicKey(Gender(m.group(1)), int(m.group(2)))
    if s.startswith("<I:"):
        raise EnhancedTokenFormatError(f"malformed enhanced token: {s!r}")
    raise NotEnhancedTokenError(f"not an enhanced token: {s!r}")


def try_parse_enhanced(s: str) -> DemographicKey | None:
    """Like :func:`parse_enhanced` but returns None on any non-match."""
    m = _ENHANCED_RE.match(s)
    if m is None:
        return None
    return DemographicKey(Gender(m.group(1)), int(m.group(2)))


class LemmaTable:
    """Surface-form → lemma map with identity fallback on misses.

    Lookup chains are resolved to their fixpoint at construction so the
    table is idempotent: ``lemma(lemma(w)) == lemma(w)`` for every entry.
    """

    def __init__(self, entries: dict[str, str] | None = None):
        self._map: dict[str, str] = {}
        if entries:
            for surface, lemma in entries.items():
                self._map[surface] = lemma
            self._resolve_chains()

    def _resolve_chains(self) -> None:
        resolved: dict[str, str] = {}
        for surface in self._map:
            seen = {surface}
            lemma = self._map[surface]
            while lemma in self._map and self._map[lemma] != lemma:
                if lemma in seen:
                    raise LemmaTableError(f"lemma cycle through {surface!r}")
                seen.add(lemma)
                lemma = self._map[lemma]
            resolved[surface] = lemma
        self._map = resolved

    def lemma(self, token: str) -> str:
        return self._map.get(token, token)

    def __len__(self) -> int:
        return len(self._map)

    def __contains__(self, token: str) -> bool:
        return token in self._map

    def items(self) -> Iterable[tuple[str, str]]:
        return self._map.items()


def load_lemma_table(path) -> LemmaTable:
    """Load a two-column TSV ``surface<TAB>lemma``; ``#`` lines are comments."""
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise LemmaTableError(f"{path}:{lineno}: expected 'surface<TAB>lemma'")
            entries[parts[0].lower()] = parts[1].lower()
    return LemmaTable(entries)


def load_wordlist(path) -> list[str]:
    """One word per line, UTF-8, ``#`` comments; lowercased, order kept."""
    words: list[str] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            word = word.lower()
            if word not in seen:
                seen.add(word)
                words.append(word)
    return words


def lemmatize(tokens: list[str], table: LemmaTable) -> list[str]:
    """Replace each token by its lemma; identity on misses."""
    return [table.lemma(t) for t in tokens]


def enhance(tokens: list[str], key: DemographicKey, pronouns: frozenset[str] | set[str]) -> list[str]:
    """Replace every pronoun-set member with the rendered key token."""
    surface = render_enhanced(key)
    return [surface if t in pronouns else t for t in tokens]


def _age_from_record(rec: dict) -> int:
    age = rec.get("age")
    if age is not None:
        if isinstance(age, bool) or not isinstance(age, int):
            raise RecordValidationError(f"age must be an integer, got {age!r}")
        return age
    birth_year = rec.get("birth_year")
    post_date = rec.get("post_date")
    if birth_year is None or post_date is None:
        raise RecordValidationError("record carries neither 'age' nor 'birth_year'+'post_date'")
    if isinstance(birth_year, bool) or not isinstance(birth_year, int):
        raise RecordValidationError(f"birth_year must be an integer, got {birth_year!r}")
    try:
        post_year = datetime.date.fromisoformat(str(post_date)).year
    except ValueError as exc:
        raise RecordValidationError(f"post_date is not an ISO-8601 date: {post_date!r}") from exc
    return post_year - birth_year


def parse_post(line: str, age_min: int = DEFAULT_AGE_MIN, age_max: int = DEFAULT_AGE_MAX) -> Post:
    """Parse one JSONL record into a validated Post.

    Raises ``RecordParseError`` on malformed JSON, ``RecordValidationError``
    on schema violations, and ``AgeRangeError`` when the age falls outside
    ``[age_min, age_max]`` (callers typically count and skip the latter).
    """
    try:
        rec = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise RecordParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(rec, dict):
        raise RecordParseError(f"expected a JSON object, got {type(rec).__name__}")

    text = rec.get("text")
    if not isinstance(text, str) or not text.strip():
        raise RecordValidationError("missing or empty 'text'")
    gender = Gender.from_value(rec.get("gender"))
    age = _age_from_record(rec)
    if not (age_min <= age <= age_max):
        raise AgeRangeError(f"age {age} outside [{age_min}, {age_max}]")
    return Post(text=text, gender=gender, age=age)


@dataclass
class PrepStats:
    """Skip counters accumulated while rewriting a corpus."""

    posts_written: int = 0
    skipped_parse: int = 0
    skipped_invalid: int = 0
    skipped_age_range: int = 0
    skipped_empty: int = 0
    first_errors: list[str] = field(default_factory=list)

    def note_error(self, lineno: int, err: Exception, keep: int = 5) -> None:
        if len(self.first_errors) < keep:
            self.first_errors.append(f"line {lineno}: {err}")

    def as_dict(self) -> dict[str, int]:
        return {
            "posts_written": self.posts_written,
            "skipped_parse": self.skipped_parse,
            "skipped_invalid": self.skipped_invalid,
            "skipped_age_range": self.skipped_age_range,
            "skipped_empty": self.skipped_empty,
        }


def read_posts(
    path,
    age_min: int = DEFAULT_AGE_MIN,
    age_max: int = DEFAULT_AGE_MAX,
    stats: PrepStats | None = None,
) -> Iterator[Post]:
    """Stream valid posts from a JSONL file, counting skipped records."""
    stats = stats if stats is not None else PrepStats()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield parse_post(line, age_min=age_min, age_max=age_max)
            except RecordParseError as exc:
                stats.skipped_parse += 1
                stats.note_error(lineno, exc)
            except AgeRangeError as exc:
                stats.skipped_age_range += 1
                stats.note_error(lineno, exc)
            except RecordValidationError as exc:
                stats.skipped_invalid += 1
                stats.note_error(lineno, exc)


def rewrite_post(
    post: Post,
    pronouns: frozenset[str] | set[str],
    lemma_table: LemmaTable | None = None,
) -> list[str]:
    """Tokenize, optionally lemmatize, and enhance one post."""
    tokens = tokenize(post.text)
    if lemma_table is not None:
        tokens = lemmatize(tokens, lemma_table)
    return enhance(tokens, post.key, pronouns)


def prep_corpus(
    in_path,
    out_path,
    pronouns: frozenset[str] | set[str] = RU_PRONOUNS,
    lemma_table: LemmaTable | None = None,
    age_min: int = DEFAULT_AGE_MIN,
    age_max: int = DEFAULT_AGE_MAX,
) -> PrepStats:
    """Rewrite a JSONL corpus into the plain-text training format.

    One post per output line, tokens space-separated, pronouns replaced
    by enhanced I-tokens. Bad records are skipped and counted, never fatal.
    """
    stats = PrepStats()
    with open(out_path, "w", encoding="utf-8", newline="\n") as out:
        for post in read_posts(in_path, age_min=age_min, age_max=age_max, stats=stats):
            tokens = rewrite_post(post, pronouns, lemma_table)
            if not tokens:
                stats.skipped_empty += 1
                continue
            out.write(" ".join(tokens))
            out.write("\n")
            stats.posts_written += 1
    return stats

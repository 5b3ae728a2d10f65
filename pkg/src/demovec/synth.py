"""Synthetic demographically-signed corpora with planted lexical signals.

Desk-scale stand-in for a real social-media dump: every post draws a
uniform (gender, age), background tokens follow a Zipf(1.0)
distribution, and three planted signals are injected on top:

* gender-marked words at a fixed per-token rate ``gender_rate``; each
  post commits to one of the two marked lists (its "flavor"), choosing
  the list matching the author's gender with probability (1 + beta) / 2.
  beta = 0 makes both lists equally frequent in both genders (no
  signal); beta = 1 makes each list exclusive to matching-gender posts.
  The per-post commitment mirrors how gendered vocabulary clusters
  within real posts and is what lets a single training epoch pick the
  contrast up; mixing lists within posts carries the same marginal
  rates but needs several epochs to separate.
* age-marked words at per-token rate ``gamma`` scaled by the author's
  position in the age range (linear by default, or a V-shaped
  two-segment profile with its pivot at ``age_pivot``);
* a first-person pronoun inserted into a fraction ``pronoun_rate`` of
  posts, which the prep stage later rewrites into enhanced I-tokens.

Output is the JSONL ingestion format, byte-identical for a fixed seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SyntheticSpec", "generate_corpus", "write_wordlists", "default_wordlist"]


def _alpha_id(i: int) -> str:
    """Letters-only base-26 rendering of an index (tokenizer-safe names)."""
    digits = []
    while True:
        i, rem = divmod(i, 26)
        digits.append(chr(ord("a") + rem))
        if i == 0:
            break
    return "".join(reversed(digits))


def default_wordlist(prefix: str, n: int) -> list[str]:
    return [prefix + _alpha_id(i) for i in range(n)]


@dataclass
class SyntheticSpec:
    n_posts: int = 10_000
    age_min: int = 16
    age_max: int = 45
    f_words: list[str] = field(default_factory=lambda: default_wordlist("fem", 500))
    m_words: list[str] = field(default_factory=lambda: default_wordlist("masc", 500))
    beta: float = 0.5
    gender_rate: float = 0.55
    age_words: list[str] = field(default_factory=lambda: default_wordlist("age", 30))
    gamma: float = 0.1
    age_profile: str = "linear"  # or "two_segment" (slope change at age_pivot)
    age_pivot: int = 26
    background_vocab_size: int = 20_000
    post_len_min: int = 8
    post_len_max: int = 30
    pronoun: str = "i"
    pronoun_rate: float = 0.8
    seed: int = 1

    def background_words(self) -> list[str]:
        return ["bg" + _alpha_id(i) for i in range(self.background_vocab_size)]

    def neutral_words(self, n: int = 20, offset: int = 10) -> list[str]:
        """Frequent background words usable as a contrast pole."""
        return ["bg" + _alpha_id(i) for i in range(offset, offset + n)]

    def validate(self) -> None:
        if self.n_posts < 1:
            raise ValueError(f"n_posts must be >= 1, got {self.n_posts}")
        if self.age_min > self.age_max:
            raise ValueError(f"empty age range {self.age_min}..{self.age_max}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 < self.pronoun_rate <= 1.0:
            raise ValueError(f"pronoun_rate must be in (0, 1], got {self.pronoun_rate}")
        if not 0.0 <= self.gender_rate <= 1.0:
            raise ValueError(f"gender_rate must be in [0, 1], got {self.gender_rate}")
        if self.gender_rate + self.gamma > 1.0:
            raise ValueError("gender_rate + gamma must not exceed 1")
        if self.age_profile not in ("linear", "two_segment"):
            raise ValueError(f"unknown age_profile {self.age_profile!r}")
        if not 1 <= self.post_len_min <= self.post_len_max:
            raise ValueError("post length range must satisfy 1 <= min <= max")
        if self.background_vocab_size < 1:
            raise ValueError("background_vocab_size must be >= 1")
        if not self.f_words or not self.m_words or not self.age_words:
            raise ValueError("marked lexicons must be non-empty")
        marked = [set(self.f_words), set(self.m_words), set(self.age_words)]
        for i in range(len(marked)):
            for j in range(i + 1, len(marked)):
                if marked[i] & marked[j]:
                    raise ValueError(f"marked lexicons overlap: {sorted(marked[i] & marked[j])}")
        background = set(self.background_words())
        for lex in marked:
            if lex & background:
                raise ValueError(f"lexicon overlaps background vocabulary: {sorted(lex & background)}")
        if self.pronoun in background or any(self.pronoun in lex for lex in marked):
            raise ValueError(f"pronoun {self.pronoun!r} collides with a lexicon")

    def age_weight(self, ages: np.ndarray) -> np.ndarray:
        """Per-author multiplier in [0, 1] for the age-marked injection rate."""
        ages = np.asarray(ages, dtype=np.float64)
        if self.age_profile == "linear":
            span = max(1, self.age_max - self.age_min)
            return (ages - self.age_min) / span
        lo_span = max(1, self.age_pivot - self.age_min)
        hi_span = max(1, self.age_max - self.age_pivot)
        return np.where(
            ages <= self.age_pivot,
            (self.age_pivot - ages) / lo_span,
            (ages - self.age_pivot) / hi_span,
        )


def generate_corpus(spec: SyntheticSpec, out_path) -> int:
    """Write the synthetic corpus as JSONL; returns the number of posts."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_posts

    is_f = rng.random(n) < 0.5
    ages = rng.integers(spec.age_min, spec.age_max + 1, size=n)
    lengths = rng.integers(spec.post_len_min, spec.post_len_max + 1, size=n)
    total = int(lengths.sum())
    starts = np.concatenate(([0], np.cumsum(lengths)))

    # Post-level flavor: matching-gender list with probability (1 + beta) / 2.
    match = rng.random(n) < (1.0 + spec.beta) / 2.0
    flavor_is_f = np.where(match, is_f, ~is_f)

    # Per-slot class draw: gender-marked, age-marked, or background.
    p_age_post = spec.gamma * spec.age_weight(ages)
    u = rng.random(total)
    p_age_slot = np.repeat(p_age_post, lengths)
    gender_slot = u < spec.gender_rate
    age_slot = (~gender_slot) & (u < spec.gender_rate + p_age_slot)
    bg_slot = ~(gender_slot | age_slot)

    words = np.empty(total, dtype=object)

    n_gender = int(gender_slot.sum())
    if n_gender:
        slot_flavor_f = np.repeat(flavor_is_f, lengths)[gender_slot]
        f_pick = rng.integers(0, len(spec.f_words), size=n_gender)
        m_pick = rng.integers(0, len(spec.m_words), size=n_gender)
        f_arr = np.array(spec.f_words, dtype=object)
        m_arr = np.array(spec.m_words, dtype=object)
        words[gender_slot] = np.where(slot_flavor_f, f_arr[f_pick], m_arr[m_pick])

    n_age = int(age_slot.sum())
    if n_age:
        age_arr = np.array(spec.age_words, dtype=object)
        words[age_slot] = age_arr[rng.integers(0, len(age_arr), size=n_age)]

    n_bg = int(bg_slot.sum())
    if n_bg:
        ranks = np.arange(1, spec.background_vocab_size + 1, dtype=np.float64)
        cdf = np.cumsum(1.0 / ranks)
        cdf /= cdf[-1]
        bg_idx = np.searchsorted(cdf, rng.random(n_bg), side="right")
        bg_idx = np.minimum(bg_idx, spec.background_vocab_size - 1)
        bg_arr = np.array(spec.background_words(), dtype=object)
        words[bg_slot] = bg_arr[bg_idx]

    has_pronoun = rng.random(n) < spec.pronoun_rate
    pronoun_pos = rng.integers(0, lengths + 1)

    with open(out_path, "w", encoding="utf-8", newline="\n") as out:
        for i in range(n):
            toks = list(words[starts[i] : starts[i + 1]])
            if has_pronoun[i]:
                toks.insert(int(pronoun_pos[i]), spec.pronoun)
            rec = {
                "text": " ".join(toks),
                "gender": "f" if is_f[i] else "m",
                "age": int(ages[i]),
            }
            out.write(json.dumps(rec, ensure_ascii=False))
            out.write("\n")
    return n


def write_wordlists(spec: SyntheticSpec, out_dir) -> dict[str, str]:
    """Write the planted lexicons as pole word-list files; returns name -> path."""
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lists = {
        "pole_f.txt": spec.f_words,
        "pole_m.txt": spec.m_words,
        "age_words.txt": spec.age_words,
        "neutral_words.txt": spec.neutral_words(),
    }
    paths: dict[str, str] = {}
    for name, wordlist in lists.items():
        path = out_dir / name
        path.write_text("".join(w + "\n" for w in wordlist), encoding="utf-8")
        paths[name] = str(path)
    return paths

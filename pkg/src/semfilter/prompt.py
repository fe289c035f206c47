"""Prompt condensation: instruction stripping, stop-word removal,
lemmatization, POS tagging, and priority-based pruning to a token budget."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

from .errors import ConfigError
from .prompt_data import (
    ADJ,
    DEFAULT_INSTRUCTION_PHRASES,
    LEMMA_EXCEPTIONS,
    LEXICON,
    NOUN,
    OTHER,
    STOP_WORDS,
    VERB,
)

# lower value = higher priority = pruned later
PRIORITY = {NOUN: 0, ADJ: 1, VERB: 2, OTHER: 3}

_WORD_RE = re.compile(r"[a-z0-9]+")
_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ship", "hood", "ism")
_ADJ_SUFFIXES = ("ful", "less", "ous", "ish", "ive", "able", "ible")
_VERB_SUFFIXES = ("ize", "ise", "ify")


@dataclass(frozen=True)
class PromptToken:
    surface: str
    lemma: str
    pos: str


@dataclass(frozen=True)
class TokenizedPrompt:
    tokens: tuple
    token_count_estimate: int

    def lemmas(self) -> list:
        return [t.lemma for t in self.tokens]


@dataclass(frozen=True)
class PromptTables:
    """Override bundle for the embedded linguistic tables; None means embedded."""

    stop_words: Optional[frozenset] = None
    exceptions: Optional[dict] = None
    lexicon: Optional[dict] = None

    def __post_init__(self):
        if self.stop_words is None:
            object.__setattr__(self, "stop_words", STOP_WORDS)
        if self.exceptions is None:
            object.__setattr__(self, "exceptions", LEMMA_EXCEPTIONS)
        if self.lexicon is None:
            object.__setattr__(self, "lexicon", LEXICON)


DEFAULT_TABLES = PromptTables()


def load_phrase_file(path) -> tuple:
    """One phrase per line; blank lines and '#' comments ignored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    phrases = tuple(ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#"))
    return phrases


def load_word_list(path) -> frozenset:
    """Stop-word file: one word per line, '#' comments."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(ln.strip().lower() for ln in lines
                     if ln.strip() and not ln.lstrip().startswith("#"))


def load_lemma_table(path) -> dict:
    """Lemma exceptions file: 'surface lemma' per line, '#' comments."""
    table = {}
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.lower().split()
        if len(parts) != 2:
            raise ConfigError(f"{path}:{ln}: expected 'surface lemma', got {line!r}")
        table[parts[0]] = parts[1]
    return table


def load_pos_table(path) -> dict:
    """POS lexicon file: 'word TAG' per line with TAG in NOUN/ADJ/VERB/OTHER."""
    table = {}
    valid = {NOUN, ADJ, VERB, OTHER}
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1].upper() not in valid:
            raise ConfigError(f"{path}:{ln}: expected 'word NOUN|ADJ|VERB|OTHER', got {line!r}")
        table[parts[0].lower()] = parts[1].upper()
    return table


@lru_cache(maxsize=32)
def _phrase_patterns(phrases: tuple) -> tuple:
    pats = []
    for phrase in phrases:
        words = phrase.split()
        if not words:
            continue
        body = r"\s+".join(re.escape(w) for w in words)
        pats.append(re.compile(r"(?<!\w)" + body + r"(?!\w)\s*[.?!:;,]?", re.IGNORECASE))
    return tuple(pats)


def strip_instructions(prompt: str, phrases: Optional[Sequence[str]] = None) -> str:
    """Delete every blacklisted instruction phrase (case-insensitive)."""
    phrases = tuple(phrases) if phrases is not None else DEFAULT_INSTRUCTION_PHRASES
    out = prompt
    for pat in _phrase_patterns(phrases):
        out = pat.sub(" ", out)
    return re.sub(r"\s+", " ", out).strip()


def lemmatize(word: str, tables: PromptTables = DEFAULT_TABLES) -> str:
    """Map a lowercase word to its dictionary form.

    Exceptions table first, then lexicon membership, then suffix rules.
    -ing/-ed/-er/-est stripping only applies when the stem validates against
    the lexicon, which keeps the rules idempotent on unknown words.
    """
    exceptions, lexicon = tables.exceptions, tables.lexicon
    if word in exceptions:
        return exceptions[word]
    if word in lexicon:
        return word
    n = len(word)
    if word.endswith("ies") and n > 4:
        for cand in (word[:-3] + "ie", word[:-3] + "y"):
            if cand in lexicon:
                return cand
        return word[:-3] + "y"
    if word.endswith(("sses", "shes", "ches", "xes", "zes")) and n > 4:
        return word[:-2]
    if word.endswith("es") and n > 3:
        for cand in (word[:-1], word[:-2]):
            if cand in lexicon:
                return cand
        return word[:-1]
    if word.endswith("s") and n > 3 and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    if word.endswith("ing") and n > 4:
        stem = word[:-3]
        cands = [stem, stem + "e"]
        if len(stem) > 2 and stem[-1] == stem[-2]:
            cands.append(stem[:-1])
        for cand in cands:
            if cand in lexicon:
                return cand
        return word
    if word.endswith("ed") and n > 3:
        stem = word[:-2]
        cands = [stem, word[:-1]]
        if len(stem) > 2 and stem[-1] == stem[-2]:
            cands.append(stem[:-1])
        for cand in cands:
            if cand in lexicon:
                return cand
        return word
    if (word.endswith("er") or word.endswith("est")) and n > 4:
        stem = word[:-2] if word.endswith("er") else word[:-3]
        cands = [stem, stem + "e"]
        if len(stem) > 2 and stem[-1] == stem[-2]:
            cands.append(stem[:-1])
        for cand in cands:
            if cand in lexicon and lexicon[cand] == ADJ:
                return cand
        return word
    return word


def tag_pos(lemma: str, tables: PromptTables = DEFAULT_TABLES) -> str:
    tag = tables.lexicon.get(lemma)
    if tag is not None:
        return tag
    if lemma.isdigit():
        return OTHER
    if lemma.endswith("ly"):
        return OTHER
    if lemma.endswith(_NOUN_SUFFIXES):
        return NOUN
    if lemma.endswith(_ADJ_SUFFIXES):
        return ADJ
    if lemma.endswith(_VERB_SUFFIXES):
        return VERB
    return NOUN


def normalize(text: str, tables: PromptTables = DEFAULT_TABLES) -> TokenizedPrompt:
    """Lowercase, split, drop stop words, lemmatize, and POS-tag."""
    tokens = []
    for word in _WORD_RE.findall(text.lower()):
        if word in tables.stop_words:
            continue
        lemma = lemmatize(word, tables)
        if lemma in tables.stop_words:
            continue
        tokens.append(PromptToken(word, lemma, tag_pos(lemma, tables)))
    return TokenizedPrompt(tuple(tokens), len(tokens) + 2)


def prune_to_window(tp: TokenizedPrompt, window: int, count_fn: Callable[[str], int]) -> str:
    """Drop lowest-priority words from the end until count_fn fits the window.

    Priority order NOUN > ADJ > VERB > OTHER; within a class, later words go
    first. If even a single word exceeds the window, that word is returned
    and the tokenizer's own hard truncation applies downstream.
    """
    if window < 2:
        raise ConfigError(f"context window must be >= 2, got {window}")
    toks = list(tp.tokens)
    while toks:
        text = " ".join(t.lemma for t in toks)
        if count_fn(text) <= window or len(toks) == 1:
            return text
        worst = max(PRIORITY[t.pos] for t in toks)
        for i in range(len(toks) - 1, -1, -1):
            if PRIORITY[toks[i].pos] == worst:
                del toks[i]
                break
    return ""


def condense(prompt: str, window: int, count_fn: Callable[[str], int],
             phrases: Optional[Sequence[str]] = None,
             tables: PromptTables = DEFAULT_TABLES) -> str:
    """Full preprocessing chain: strip boilerplate, normalize, fit the window."""
    return prune_to_window(normalize(strip_instructions(prompt, phrases), tables),
                           window, count_fn)

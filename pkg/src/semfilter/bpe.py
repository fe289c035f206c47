"""Byte-pair tokenizer for CLIP-style text encoders.

Loads the standard vocab.json + merges.txt pair from the model assets
directory. Text is lowercased and whitespace-collapsed, split with the
usual contraction-aware pattern, byte-mapped to printable units, merged by
rank, and wrapped in start/end markers. encode() hard-truncates to the
context window, keeping the end marker as the final token.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from pathlib import Path

from .errors import BackendError

START_TOKEN = "<|startoftext|>"
END_TOKEN = "<|endoftext|>"

_SPLIT_RE = re.compile(
    r"<\|startoftext\|>|<\|endoftext\|>|'s|'t|'re|'ve|'m|'ll|'d|[^\W\d_]+|\d|(?:[^\s\w]|_)+",
    re.IGNORECASE,
)


@lru_cache(maxsize=1)
def byte_encoder() -> dict:
    """GPT-2 style map from raw bytes to printable unicode units."""
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, (chr(c) for c in cs)))


def _pairs(word: tuple) -> set:
    return {(word[i], word[i + 1]) for i in range(len(word) - 1)}


class ClipBpeTokenizer:
    def __init__(self, vocab_file, merges_file, context_window: int = 77):
        try:
            vocab = json.loads(Path(vocab_file).read_text(encoding="utf-8"))
            merge_lines = Path(merges_file).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise BackendError(f"cannot load tokenizer files: {exc}") from None
        self.encoder = vocab
        self.context_window = int(context_window)
        ranks = {}
        for line in merge_lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = tuple(line.split())
            if len(parts) == 2:
                ranks[parts] = len(ranks)
        self.bpe_ranks = ranks
        self._byte_enc = byte_encoder()
        self._cache = {START_TOKEN: START_TOKEN, END_TOKEN: END_TOKEN}
        for tok in (START_TOKEN, END_TOKEN):
            if tok not in vocab:
                raise BackendError(f"tokenizer vocab lacks special token {tok}")
        self.start_id = vocab[START_TOKEN]
        self.end_id = vocab[END_TOKEN]

    def _bpe(self, token: str) -> str:
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        word = tuple(token[:-1]) + (token[-1] + "</w>",)
        pairs = _pairs(word)
        if not pairs:
            return token + "</w>"
        while True:
            bigram = min(pairs, key=lambda p: self.bpe_ranks.get(p, float("inf")))
            if bigram not in self.bpe_ranks:
                break
            first, second = bigram
            new_word = []
            i = 0
            while i < len(word):
                try:
                    j = word.index(first, i)
                except ValueError:
                    new_word.extend(word[i:])
                    break
                new_word.extend(word[i:j])
                if j < len(word) - 1 and word[j + 1] == second:
                    new_word.append(first + second)
                    i = j + 2
                else:
                    new_word.append(word[j])
                    i = j + 1
            word = tuple(new_word)
            if len(word) == 1:
                break
            pairs = _pairs(word)
        result = " ".join(word)
        self._cache[token] = result
        return result

    def _token_ids(self, text: str) -> list:
        text = " ".join(text.lower().split())
        ids = []
        for chunk in _SPLIT_RE.findall(text):
            if chunk in (START_TOKEN, END_TOKEN):
                ids.append(self.encoder[chunk])
                continue
            mapped = "".join(self._byte_enc[b] for b in chunk.encode("utf-8"))
            for sym in self._bpe(mapped).split(" "):
                try:
                    ids.append(self.encoder[sym])
                except KeyError:
                    raise BackendError(f"token {sym!r} missing from vocab") from None
        return ids

    def count(self, text: str) -> int:
        """Token count including start/end markers, before truncation."""
        return len(self._token_ids(text)) + 2

    def encode(self, text: str) -> list:
        """Start + body + end, hard-truncated to the context window."""
        ids = [self.start_id] + self._token_ids(text) + [self.end_id]
        if len(ids) > self.context_window:
            ids = ids[: self.context_window]
            ids[-1] = self.end_id
        return ids

"""Word tokenization, vocabularies and byte-pair encoding."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

PAD = "<pad>"
UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"
RESERVED = (PAD, UNK, BOS, EOS)

END_OF_WORD = "</w>"
BPE_FILE_VERSION = "#version 1"

# numbers with inner separators first ("28,04", "1.5"), then words, then any single symbol
_TOKEN_RE = re.compile(r"\d+(?:[.,]\d+)+|\w+|[^\w\s]")


class BpeError(ValueError):
    pass


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]
    scheme: str = "word"

    def __post_init__(self):
        if self.scheme not in ("word", "bpe"):
            raise ValueError(f"unknown tokenization scheme {self.scheme!r}")
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]


def word_tokenize(text: str) -> TokenSeq:
    """Split normalized text into word and punctuation tokens.

    Numbers with inner commas or periods stay whole, every other
    punctuation mark becomes its own token.

    >>> list(word_tokenize("до 28,04 руб"))
    ['до', '28,04', 'руб']
    """
    return TokenSeq(tuple(_TOKEN_RE.findall(text)), "word")


class Vocab:
    """Bijective token <-> id map with reserved tokens at the lowest ids."""

    def __init__(self, tokens: Iterable[str] = (), specials: Sequence[str] = ()):
        self.token_of: list[str] = []
        self.id_of: dict[str, int] = {}
        for tok in (*RESERVED, *specials, *tokens):
            self.add(tok)

    def add(self, token: str) -> int:
        if token not in self.id_of:
            self.id_of[token] = len(self.token_of)
            self.token_of.append(token)
        return self.id_of[token]

    @property
    def reserved(self) -> dict[str, int]:
        return {tok: self.id_of[tok] for tok in RESERVED}

    @property
    def pad_id(self) -> int:
        return self.id_of[PAD]

    @property
    def unk_id(self) -> int:
        return self.id_of[UNK]

    @property
    def bos_id(self) -> int:
        return self.id_of[BOS]

    @property
    def eos_id(self) -> int:
        return self.id_of[EOS]

    def __len__(self) -> int:
        return len(self.token_of)

    def __contains__(self, token: str) -> bool:
        return token in self.id_of

    def encode(self, tokens: Iterable[str]) -> list[int]:
        unk = self.unk_id
        return [self.id_of.get(t, unk) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.token_of[i] for i in ids]

    @classmethod
    def build(cls, corpus: Iterable[Iterable[str]], max_size: int | None = None,
              min_count: int = 1, specials: Sequence[str] = ()) -> "Vocab":
        """Frequency-ranked vocabulary; ties are broken alphabetically."""
        counts = Counter(tok for seq in corpus for tok in seq)
        ranked = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
        vocab = cls(specials=specials)
        for tok in ranked:
            if max_size is not None and len(vocab) >= max_size:
                break
            vocab.add(tok)
        return vocab


@dataclass
class BpeModel:
    merges: list[tuple[str, str]]
    alphabet: list[str]
    end_of_word_marker: str = END_OF_WORD
    vocab: Vocab = field(init=False)

    def __post_init__(self):
        self.vocab = Vocab(self.alphabet)
        for left, right in self.merges:
            if left in RESERVED or right in RESERVED:
                raise BpeError(f"merge ({left!r}, {right!r}) touches a reserved token")
            self.vocab.add(left + right)
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._chars = set(self.alphabet)
        self._cache: dict[str, tuple[str, ...]] = {}

    def segment(self, word: str) -> tuple[str, ...]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        symbols = [c if c in self._chars else UNK for c in word] + [self.end_of_word_marker]
        symbols = _apply_merges(symbols, self._ranks)
        out = tuple(symbols)
        self._cache[word] = out
        return out

    def save(self, path: str | Path) -> None:
        path = Path(path)
        lines = [BPE_FILE_VERSION] + [f"{a} {b}" for a, b in self.merges]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        sidecar = {"alphabet": self.alphabet, "reserved": list(RESERVED),
                   "end_of_word_marker": self.end_of_word_marker}
        Path(str(path) + ".json").write_text(json.dumps(sidecar, ensure_ascii=False, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BpeModel":
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].strip() != BPE_FILE_VERSION:
            raise BpeError(f"{path}: missing '{BPE_FILE_VERSION}' header")
        merges = []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise BpeError(f"{path}:{lineno}: expected 'left right', got {line!r}")
            merges.append((parts[0], parts[1]))
        sidecar = json.loads(Path(str(path) + ".json").read_text(encoding="utf-8"))
        if list(sidecar.get("reserved", RESERVED)) != list(RESERVED):
            raise BpeError(f"{path}: reserved tokens differ from {RESERVED}")
        return cls(merges, list(sidecar["alphabet"]), sidecar.get("end_of_word_marker", END_OF_WORD))


def _apply_merges(symbols: list[str], ranks: dict[tuple[str, str], int]) -> list[str]:
    # merging the lowest-ranked pair first is equivalent to replaying merges in training order
    while len(symbols) > 1:
        best = None
        for i in range(len(symbols) - 1):
            r = ranks.get((symbols[i], symbols[i + 1]))
            if r is not None and (best is None or r < best[0]):
                best = (r, i)
        if best is None:
            break
        pair = (symbols[best[1]], symbols[best[1] + 1])
        merged = pair[0] + pair[1]
        out, i = [], 0
        while i < len(symbols):
            if i < len(symbols) - 1 and (symbols[i], symbols[i + 1]) == pair:
                out.append(merged)
                i += 2
            else:
                out.append(symbols[i])
                i += 1
        symbols = out
    return symbols


def bpe_train(corpus: Iterable[Iterable[str]], num_merges: int,
              end_of_word_marker: str = END_OF_WORD) -> BpeModel:
    """Learn BPE merges from word sequences.

    Each round merges the most frequent adjacent symbol pair, with ties
    going to the lexicographically smallest pair. Training stops early
    once no pair occurs at least twice.
    """
    if num_merges < 0:
        raise ValueError("num_merges must be >= 0")
    word_counts = Counter(w for seq in corpus for w in seq)
    if not word_counts:
        raise BpeError("cannot train BPE on an empty corpus")

    alphabet = sorted({c for w in word_counts for c in w}) + [end_of_word_marker]
    words = [[*w, end_of_word_marker] for w in word_counts]
    freqs = [word_counts[w] for w in word_counts]

    pair_counts: Counter = Counter()
    where: dict[tuple[str, str], set[int]] = {}
    for idx, (syms, f) in enumerate(zip(words, freqs)):
        for pair in zip(syms, syms[1:]):
            pair_counts[pair] += f
            where.setdefault(pair, set()).add(idx)

    merges: list[tuple[str, str]] = []
    while len(merges) < num_merges and pair_counts:
        best = min(pair_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        pair, count = best
        if count < 2:
            break
        merges.append(pair)
        merged = pair[0] + pair[1]
        for idx in sorted(where.pop(pair, ())):
            syms, f = words[idx], freqs[idx]
            for p in zip(syms, syms[1:]):
                pair_counts[p] -= f
                if pair_counts[p] <= 0:
                    del pair_counts[p]
            new, i = [], 0
            while i < len(syms):
                if i < len(syms) - 1 and (syms[i], syms[i + 1]) == pair:
                    new.append(merged)
                    i += 2
                else:
                    new.append(syms[i])
                    i += 1
            words[idx] = new
            for p in zip(new, new[1:]):
                pair_counts[p] += f
                where.setdefault(p, set()).add(idx)
    return BpeModel(merges, alphabet, end_of_word_marker)


def bpe_encode(model: BpeModel, words: Iterable[str]) -> TokenSeq:
    out: list[str] = []
    for w in words:
        out.extend(model.segment(w))
    return TokenSeq(tuple(out), "bpe")


def bpe_decode(model: BpeModel, seq: Iterable[str]) -> list[str]:
    marker = model.end_of_word_marker
    words, buf = [], []
    for tok in seq:
        head = tok[:-len(marker)] if tok.endswith(marker) else tok
        if marker in head:
            raise BpeError(f"end-of-word marker inside token {tok!r}")
        buf.append(head)
        if tok.endswith(marker):
            words.append("".join(buf))
            buf = []
    if buf:
        raise BpeError(f"sequence ends without an end-of-word marker (pending {buf!r})")
    return words

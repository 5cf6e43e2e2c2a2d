"""LZW with arithmetic-coded dictionary indices.

Each index is coded under the uniform distribution over the current
dictionary size, so an index costs log2(N) bits.  The dictionary never stops
growing.

Classic mode seeds the dictionary with every byte plus EOF.  Escaped mode
seeds it with the empty string only: the first time a symbol occurs the
encoder emits the empty string's index and codes the symbol with a base model,
after which the symbol is an ordinary dictionary entry.
"""
from __future__ import annotations

from typing import List, Optional, Sequence

from .coder import Decoder, Encoder
from .models import Alphabet, ModelError


class LZWDict:
    """Append-only phrase table.

    Entry ``i`` is stored as ``(prefix index, last symbol)``; the empty
    string, when present, is entry 0 with prefix -1.  ``lookup`` maps
    ``prefix * stride + symbol`` to an entry index.
    """

    def __init__(self, alphabet: Alphabet, seed: Optional[Sequence[int]] = None):
        self.stride = alphabet.size
        self.prefix: List[int] = []
        self.last: List[int] = []
        self.first: List[int] = []
        self.length: List[int] = []
        self.lookup = {}
        self.has_empty = seed is None
        if seed is None:
            self._append(-1, -1)
        else:
            for s in seed:
                self._append(-1, s)
                self.lookup[-1 * self.stride + s] = len(self.prefix) - 1
        # single-symbol entries hang off the root key
        self.root = 0 if self.has_empty else -1

    def __len__(self) -> int:
        return len(self.prefix)

    def _append(self, prefix: int, sym: int) -> int:
        idx = len(self.prefix)
        self.prefix.append(prefix)
        self.last.append(sym)
        if prefix < 0 or (self.has_empty and prefix == 0):
            self.first.append(sym)
            self.length.append(0 if sym < 0 else 1)
        else:
            self.first.append(self.first[prefix])
            self.length.append(self.length[prefix] + 1)
        return idx

    def add(self, prefix: int, sym: int) -> int:
        idx = self._append(prefix, sym)
        self.lookup[prefix * self.stride + sym] = idx
        return idx

    def child(self, prefix: int, sym: int) -> Optional[int]:
        return self.lookup.get(prefix * self.stride + sym)

    def phrase(self, idx: int) -> List[int]:
        out = []
        stop = 0 if self.has_empty else -1
        while idx != stop and idx >= 0:
            out.append(self.last[idx])
            idx = self.prefix[idx]
        out.reverse()
        return out


def _encode_index(enc: Encoder, idx: int, n: int) -> None:
    enc.encode(idx, idx + 1, n)


def _decode_index(dec: Decoder, n: int) -> int:
    idx = dec.decode_target(n)
    dec.decode_commit(idx, idx + 1, n)
    return idx


class LZWEncoder:
    """Greedy longest-match parser.

    ``base`` is None for classic mode.  ``trace`` records the emitted phrases
    as (dictionary index, escaped symbol or None, dictionary size).
    """

    def __init__(self, alphabet: Alphabet, base=None, seed=None):
        self.alphabet = alphabet
        self.base = base
        if base is None:
            if seed is None:
                raise ModelError("classic LZW needs a seed alphabet")
            self.dict = LZWDict(alphabet, seed)
        else:
            self.dict = LZWDict(alphabet)
        self.trace: List[tuple] = []

    def encode(self, symbols: Sequence[int], enc: Encoder) -> None:
        eof = self.alphabet.eof
        if not symbols or symbols[-1] != eof or eof in symbols[:-1]:
            raise ModelError("input must contain exactly one EOF, at the end")
        d = self.dict
        lookup = d.lookup
        stride = d.stride
        base = self.base
        root = d.root
        n_sym = len(symbols)
        i = 0
        while i < n_sym:
            cur = root
            j = i
            while j < n_sym:
                nxt = lookup.get(cur * stride + symbols[j])
                if nxt is None:
                    break
                cur = nxt
                j += 1
            n = len(d)
            if j == i:
                # escape: only reachable in escaped mode for an unseen symbol
                if base is None:
                    raise ModelError(f"symbol {symbols[i]} missing from classic dictionary")
                s = symbols[i]
                _encode_index(enc, 0, n)
                base.encode(enc, s)
                d.add(0, s)
                self.trace.append((0, s, n))
                i += 1
                continue
            _encode_index(enc, cur, n)
            self.trace.append((cur, None, n))
            if j < n_sym and d.last[cur] != eof:
                d.add(cur, symbols[j])
            i = j


class LZWDecoder:
    def __init__(self, alphabet: Alphabet, base=None, seed=None):
        self.alphabet = alphabet
        self.base = base
        if base is None:
            if seed is None:
                raise ModelError("classic LZW needs a seed alphabet")
            self.dict = LZWDict(alphabet, seed)
        else:
            self.dict = LZWDict(alphabet)

    def decode(self, dec: Decoder) -> List[int]:
        d = self.dict
        eof = self.alphabet.eof
        base = self.base
        out: List[int] = []
        pending: Optional[int] = None  # previous phrase still awaiting its next symbol
        while True:
            n = len(d) + (1 if pending is not None else 0)
            idx = _decode_index(dec, n)
            if base is not None and idx == 0:
                s = base.decode(dec)
                if pending is not None:
                    d.add(pending, s)
                d.add(0, s)
                pending = None
                out.append(s)
                if s == eof:
                    return out
                continue
            if idx < len(d):
                phrase = d.phrase(idx)
                if pending is not None:
                    d.add(pending, phrase[0])
            elif pending is not None and idx == len(d):
                # the entry being built: previous phrase plus its own first symbol
                prev = d.phrase(pending)
                phrase = prev + prev[:1]
                d.add(pending, prev[0])
            else:
                raise ModelError(f"index {idx} beyond dictionary size {len(d)}")
            out.extend(phrase)
            if phrase[-1] == eof:
                if eof in phrase[:-1] or eof in out[:-1]:
                    raise ModelError("EOF inside a phrase")
                return out
            if eof in phrase:
                raise ModelError("EOF inside a phrase")
            pending = idx


def classic_seed(alphabet: Alphabet) -> List[int]:
    return list(range(256)) + [alphabet.eof]


def encode_symbols(symbols: Sequence[int], alphabet: Alphabet, base=None) -> bytes:
    seed = classic_seed(alphabet) if base is None else None
    enc = Encoder()
    LZWEncoder(alphabet, base, seed).encode(symbols, enc)
    return enc.finish()


def decode_symbols(payload: bytes, alphabet: Alphabet, base=None) -> List[int]:
    seed = classic_seed(alphabet) if base is None else None
    dec = Decoder(payload)
    out = LZWDecoder(alphabet, base, seed).decode(dec)
    dec.check_finished()
    return out

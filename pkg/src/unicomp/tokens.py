"""Reversible byte <-> token transform.

A token is either a Unicode character (``Char``), a raw byte that could not be
decoded as part of a well-formed UTF-8 sequence (``Byte``), or the end-of-file
marker (``EOF``).  Internally every model works on integer token ids:

    Char(c)  -> c                   (0 .. 0x10FFFF, surrogates never occur)
    Byte(b)  -> 0x110000 + b
    EOF      -> 0x110100
"""
from __future__ import annotations

from typing import Iterable, List, NamedTuple, Sequence, Union

MAX_CODE_POINT = 0x10FFFF
SURROGATE_LO = 0xD800
SURROGATE_HI = 0xE000  # exclusive
BYTE_BASE = 0x110000
EOF_ID = 0x110100
ID_LIMIT = EOF_ID + 1


class TokenError(ValueError):
    pass


class Char(NamedTuple):
    code_point: int

    def __repr__(self):
        return f"Char({self.code_point:#x})"


class Byte(NamedTuple):
    value: int

    def __repr__(self):
        return f"Byte({self.value:#04x})"


class _Eof:
    __slots__ = ()

    def __repr__(self):
        return "EOF"

    def __reduce__(self):
        return "EOF"


EOF = _Eof()

Token = Union[Char, Byte, _Eof]


def is_valid_code_point(c: int) -> bool:
    return 0 <= c <= MAX_CODE_POINT and not SURROGATE_LO <= c < SURROGATE_HI


def token_to_id(t: Token) -> int:
    if t is EOF:
        return EOF_ID
    if isinstance(t, Char):
        if not is_valid_code_point(t.code_point):
            raise TokenError(f"invalid code point {t.code_point:#x}")
        return t.code_point
    if isinstance(t, Byte):
        if not 0 <= t.value <= 0xFF:
            raise TokenError(f"byte out of range: {t.value}")
        return BYTE_BASE + t.value
    raise TokenError(f"not a token: {t!r}")


def id_to_token(i: int) -> Token:
    if i == EOF_ID:
        return EOF
    if BYTE_BASE <= i < EOF_ID:
        return Byte(i - BYTE_BASE)
    if is_valid_code_point(i):
        return Char(i)
    raise TokenError(f"token id {i:#x} is not occupied")


def utf8_length(c: int) -> int:
    """Length in bytes of the UTF-8 code word for code point ``c``."""
    if c < 0x80:
        return 1
    if c < 0x800:
        return 2
    if c < 0x10000:
        return 3
    return 4


# Bulk path.  Python's codec with ``surrogateescape`` maps every byte of an
# ill-formed subsequence to U+DC80..U+DCFF individually and resumes at the
# next byte, which is exactly the one-Byte-per-failing-byte rule.  Genuine
# surrogates cannot come out of a UTF-8 decode, so every surrogate seen is an
# escaped byte.

def tokenize_ids(data: bytes) -> List[int]:
    """Token ids for ``data``, terminated by ``EOF_ID``."""
    text = bytes(data).decode("utf-8", "surrogateescape")
    ids = [ord(ch) for ch in text]
    if not text.isascii():
        for k, c in enumerate(ids):
            if SURROGATE_LO <= c < SURROGATE_HI:
                ids[k] = BYTE_BASE + (c - 0xDC00)
    ids.append(EOF_ID)
    return ids


def detokenize_ids(ids: Sequence[int]) -> bytes:
    """Inverse of :func:`tokenize_ids`.

    Raises TokenError unless ``ids`` holds exactly one EOF, at the end, and
    every other id is occupied.
    """
    if not ids or ids[-1] != EOF_ID:
        raise TokenError("token stream must end with EOF")
    out = bytearray()
    run: List[str] = []
    for i in range(len(ids) - 1):
        c = ids[i]
        if c < BYTE_BASE:
            if SURROGATE_LO <= c < SURROGATE_HI or c < 0:
                raise TokenError(f"invalid character token id {c:#x}")
            run.append(chr(c))
        elif c < EOF_ID:
            if run:
                out += "".join(run).encode("utf-8")
                run.clear()
            out.append(c - BYTE_BASE)
        elif c == EOF_ID:
            raise TokenError(f"EOF at position {i}, before end of stream")
        else:
            raise TokenError(f"token id {c:#x} out of range")
    if run:
        out += "".join(run).encode("utf-8")
    return bytes(out)


def tokenize(data: bytes) -> List[Token]:
    return [id_to_token(i) for i in tokenize_ids(data)]


def detokenize(tokens: Iterable[Token]) -> bytes:
    return detokenize_ids([token_to_id(t) for t in tokens])


# Streaming path, written out as an explicit RFC 3629 state machine.
# For each lead byte: (total length, allowed range of the second byte).
def _lead_table():
    table = {}
    for b in range(0x80):
        table[b] = (1, None)
    for b in range(0xC2, 0xE0):
        table[b] = (2, (0x80, 0xBF))
    table[0xE0] = (3, (0xA0, 0xBF))
    for b in range(0xE1, 0xED):
        table[b] = (3, (0x80, 0xBF))
    table[0xED] = (3, (0x80, 0x9F))
    table[0xEE] = table[0xEF] = (3, (0x80, 0xBF))
    table[0xF0] = (4, (0x90, 0xBF))
    for b in range(0xF1, 0xF4):
        table[b] = (4, (0x80, 0xBF))
    table[0xF4] = (4, (0x80, 0x8F))
    return table


_LEADS = _lead_table()
_LEAD_MASK = {2: 0x1F, 3: 0x0F, 4: 0x07}


class StreamingTokenizer:
    """Incremental tokenizer holding at most three undecided bytes.

    >>> t = StreamingTokenizer()
    >>> t.feed(b"\\xe2\\x82") + t.feed(b"\\xac") + t.finish()
    [8364, 1114368]
    """

    def __init__(self):
        self._pending = bytearray()
        self._need = 0
        self._finished = False

    def feed(self, data: bytes) -> List[int]:
        if self._finished:
            raise TokenError("tokenizer already finished")
        out: List[int] = []
        for b in data:
            self._push(b, out)
        return out

    def finish(self) -> List[int]:
        if self._finished:
            raise TokenError("tokenizer already finished")
        self._finished = True
        # a truncated sequence at end of input: every consumed byte on its own
        out = [BYTE_BASE + b for b in self._pending]
        self._pending.clear()
        out.append(EOF_ID)
        return out

    def _push(self, b: int, out: List[int]) -> None:
        pending = self._pending
        if pending:
            lo, hi = (0x80, 0xBF)
            if len(pending) == 1:
                lo, hi = _LEADS[pending[0]][1]
            if lo <= b <= hi:
                pending.append(b)
                if len(pending) == self._need:
                    cp = pending[0] & _LEAD_MASK[self._need]
                    for cont in pending[1:]:
                        cp = (cp << 6) | (cont & 0x3F)
                    out.append(cp)
                    pending.clear()
                return
            # failure: the lead and any continuations each become a Byte token
            out.extend(BYTE_BASE + p for p in pending)
            pending.clear()
        lead = _LEADS.get(b)
        if lead is None:
            out.append(BYTE_BASE + b)
        elif lead[0] == 1:
            out.append(b)
        else:
            pending.append(b)
            self._need = lead[0]

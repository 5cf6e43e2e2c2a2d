"""Integer arithmetic coder (Witten, Neal & Cleary construction).

Models hand the coder cumulative frequency intervals ``(low, high, total)``;
the coder owns no probabilities of its own.  Registers are 62 bits wide and
totals are capped at 2**30, so the interval after renormalisation is always
at least 2**30 times wider than one frequency quantum and rounding loss per
symbol stays below 2**-29 bits.  Products reach 92 bits, which Python's
integers handle exactly.
Output is packed most-significant-bit first and zero-padded to a byte.  The
encoder finishes with the shortest bit string that, read with zeros after it,
lands inside the final interval, so a stream of certain events is empty.
"""
from __future__ import annotations

from typing import NamedTuple

STATE_BITS = 62
FULL = 1 << STATE_BITS
MASK = FULL - 1
HALF = FULL >> 1
QUARTER = HALF >> 1
THREE_QUARTERS = HALF + QUARTER
MAX_TOTAL = 1 << 30

# A legitimate stream is never read more than this many bits past its end.
_MAX_PHANTOM_BITS = STATE_BITS


class CoderError(Exception):
    """Model bug: an invalid interval was handed to the coder."""


class CorruptStreamError(Exception):
    """The compressed bit stream is truncated, extended or damaged."""


class ProbabilityRange(NamedTuple):
    low: int
    high: int
    total: int

    @property
    def probability(self) -> float:
        return (self.high - self.low) / self.total


def _check(low: int, high: int, total: int) -> None:
    if not 0 <= low < high <= total <= MAX_TOTAL:
        raise CoderError(f"invalid range ({low}, {high}, {total})")


def _tail(low: int, high: int, pending: int) -> list:
    """Bits that terminate a stream in state ``(low, high, pending)``."""
    for k in range(STATE_BITS + 1):
        step = 1 << (STATE_BITS - k)
        v = -(-low // step) * step
        if v <= high:
            break
    if k == 0:
        return [0] + [1] * pending if pending else []
    bits = [(v >> (STATE_BITS - 1 - i)) & 1 for i in range(k)]
    return bits[:1] + [1 - bits[0]] * pending + bits[1:]


class BitSink:
    """Append-only bit buffer."""

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0
        self.nbits = 0

    def write(self, bit: int) -> None:
        self._acc = (self._acc << 1) | bit
        self._nacc += 1
        self.nbits += 1
        if self._nacc == 8:
            self._buf.append(self._acc)
            self._acc = 0
            self._nacc = 0

    def write_repeated(self, bit: int, count: int) -> None:
        for _ in range(count):
            self.write(bit)

    def getvalue(self) -> bytes:
        """Bytes written so far, the last one zero-padded."""
        if self._nacc:
            return bytes(self._buf) + bytes([self._acc << (8 - self._nacc)])
        return bytes(self._buf)


class BitSource:
    """Bit cursor over a byte string; reads zeros past the end."""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._nbits = len(self._data) * 8
        self.pos = 0

    @property
    def nbits(self) -> int:
        return self._nbits

    def read(self) -> int:
        pos = self.pos
        self.pos = pos + 1
        if pos < self._nbits:
            return (self._data[pos >> 3] >> (7 - (pos & 7))) & 1
        if pos - self._nbits >= _MAX_PHANTOM_BITS:
            raise CorruptStreamError("bit stream exhausted prematurely")
        return 0


class Encoder:
    def __init__(self, sink: BitSink | None = None):
        self.sink = sink if sink is not None else BitSink()
        self.low = 0
        self.high = MASK
        self.pending = 0
        self.finished = False

    def encode(self, low: int, high: int, total: int) -> None:
        _check(low, high, total)
        lo = self.low
        rng = self.high - lo + 1
        hi = lo + rng * high // total - 1
        lo = lo + rng * low // total
        sink = self.sink
        while True:
            if hi < HALF:
                sink.write(0)
                if self.pending:
                    sink.write_repeated(1, self.pending)
                    self.pending = 0
            elif lo >= HALF:
                sink.write(1)
                if self.pending:
                    sink.write_repeated(0, self.pending)
                    self.pending = 0
                lo -= HALF
                hi -= HALF
            elif lo >= QUARTER and hi < THREE_QUARTERS:
                self.pending += 1
                lo -= QUARTER
                hi -= QUARTER
            else:
                break
            lo <<= 1
            hi = (hi << 1) | 1
        self.low = lo
        self.high = hi

    def encode_range(self, r: ProbabilityRange) -> None:
        self.encode(r.low, r.high, r.total)

    def finish(self) -> bytes:
        """Emit the disambiguating tail and return the padded payload."""
        if not self.finished:
            self.finished = True
            for bit in _tail(self.low, self.high, self.pending):
                self.sink.write(bit)
            self.pending = 0
        return self.sink.getvalue()


class Decoder:
    def __init__(self, data: bytes | BitSource):
        self.source = data if isinstance(data, BitSource) else BitSource(data)
        self.low = 0
        self.high = MASK
        self.code = 0
        self.shifts = 0
        self.pending = 0  # mirrors the encoder's deferred-bit count
        for _ in range(STATE_BITS):
            self.code = (self.code << 1) | self.source.read()

    def decode_target(self, total: int) -> int:
        """Cumulative frequency in ``[0, total)`` that the next symbol covers."""
        if not 0 < total <= MAX_TOTAL:
            raise CoderError(f"invalid total {total}")
        rng = self.high - self.low + 1
        target = ((self.code - self.low + 1) * total - 1) // rng
        if not 0 <= target < total:
            raise CorruptStreamError("code value outside the coding interval")
        return target

    def decode_commit(self, low: int, high: int, total: int) -> None:
        _check(low, high, total)
        lo = self.low
        rng = self.high - lo + 1
        hi = lo + rng * high // total - 1
        lo = lo + rng * low // total
        code = self.code
        read = self.source.read
        shifts = 0
        while True:
            if hi < HALF:
                self.pending = 0
            elif lo >= HALF:
                lo -= HALF
                hi -= HALF
                code -= HALF
                self.pending = 0
            elif lo >= QUARTER and hi < THREE_QUARTERS:
                lo -= QUARTER
                hi -= QUARTER
                code -= QUARTER
                self.pending += 1
            else:
                break
            lo <<= 1
            hi = (hi << 1) | 1
            code = (code << 1) | read()
            shifts += 1
        self.low = lo
        self.high = hi
        self.code = code
        self.shifts += shifts

    def decode_range(self, r: ProbabilityRange) -> None:
        self.decode_commit(r.low, r.high, r.total)

    def check_finished(self) -> None:
        """Verify the stream length matches what the encoder's flush produced.

        Every shift but the still-pending ones has been emitted; the tail
        follows, then padding to a byte boundary.
        """
        nbits = self.shifts - self.pending + len(_tail(self.low, self.high, self.pending))
        expected = (nbits + 7) // 8
        actual = self.source.nbits // 8
        if actual != expected:
            raise CorruptStreamError(
                f"payload is {actual} bytes, decoder expected {expected}")

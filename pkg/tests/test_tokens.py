import random
import re

import pytest
from hypothesis import given, settings, strategies as st

from unicomp.tokens import (BYTE_BASE, EOF, EOF_ID, Byte, Char, StreamingTokenizer,
                            TokenError, detokenize, detokenize_ids, id_to_token,
                            token_to_id, tokenize, tokenize_ids)

# RFC 3629 ABNF, transcribed as a bytes regex
UTF8_CHAR = re.compile(
    rb"[\x00-\x7f]"
    rb"|[\xc2-\xdf][\x80-\xbf]"
    rb"|\xe0[\xa0-\xbf][\x80-\xbf]|[\xe1-\xec\xee\xef][\x80-\xbf]{2}|\xed[\x80-\x9f][\x80-\xbf]"
    rb"|\xf0[\x90-\xbf][\x80-\xbf]{2}|[\xf1-\xf3][\x80-\xbf]{3}|\xf4[\x80-\x8f][\x80-\xbf]{2}"
)


def oracle_tokens(data: bytes):
    out = []
    i = 0
    while i < len(data):
        m = UTF8_CHAR.match(data, i)
        if m:
            raw = m.group()
            # decode by hand from the bit layout
            n = len(raw)
            c = raw[0] & (0x7F, 0x1F, 0x0F, 0x07)[n - 1]
            for b in raw[1:]:
                c = (c << 6) | (b & 0x3F)
            out.append(Char(c))
            i += n
        else:
            out.append(Byte(data[i]))
            i += 1
    return out + [EOF]


@pytest.mark.parametrize("data,expected", [
    (b"\x41", [Char(0x41), EOF]),
    (b"", [EOF]),
    (b"\xe2\x82\xac", [Char(0x20AC), EOF]),
    (b"\x80", [Byte(0x80), EOF]),
    (b"\xc0\x81", [Byte(0xC0), Byte(0x81), EOF]),
    (b"\xed\xa0\x80", [Byte(0xED), Byte(0xA0), Byte(0x80), EOF]),
    (b"\xf4\x90\x80\x80", [Byte(0xF4), Byte(0x90), Byte(0x80), Byte(0x80), EOF]),
    (b"\xe2\x82A", [Byte(0xE2), Byte(0x82), Char(0x41), EOF]),
    (b"\xf0\x9f\x98\x80", [Char(0x1F600), EOF]),
])
def test_tokenize_examples(data, expected):
    assert tokenize(data) == expected
    assert detokenize(expected) == data


def test_detokenize_examples():
    assert detokenize([Char(0x41), EOF]) == b"A"
    assert detokenize([EOF]) == b""
    assert detokenize([Byte(0xC0), Byte(0x81), EOF]) == b"\xc0\x81"


@pytest.mark.parametrize("bad", [
    [Char(0x41)],
    [EOF, Char(0x41), EOF],
    [Char(0xD800), EOF],
    [Char(0x110000), EOF],
])
def test_detokenize_rejects(bad):
    with pytest.raises(TokenError):
        detokenize(bad)


def test_id_layout():
    assert token_to_id(Char(0x41)) == 0x41
    assert token_to_id(Byte(0x00)) == 0x110000
    assert token_to_id(EOF) == 0x110100
    assert id_to_token(BYTE_BASE + 0xFF) == Byte(0xFF)
    assert id_to_token(EOF_ID) is EOF
    for bad in (0xD800, 0xDFFF, 0x110101, -1):
        with pytest.raises(TokenError):
            id_to_token(bad)


def test_id_bijection_on_boundaries():
    for i in [0, 0x7F, 0x80, 0xD7FF, 0xE000, 0xFFFF, 0x10000, 0x10FFFF,
              BYTE_BASE, BYTE_BASE + 0x80, EOF_ID]:
        assert token_to_id(id_to_token(i)) == i


def test_matches_rfc3629_oracle_on_edge_bytes():
    rng = random.Random(3)
    edge = [0x00, 0x7F, 0x80, 0xBF, 0xC0, 0xC1, 0xC2, 0xDF, 0xE0, 0xE1, 0xEC, 0xED,
            0xEE, 0xEF, 0xF0, 0xF1, 0xF3, 0xF4, 0xF5, 0xFF, 0x90, 0x9F, 0xA0, 0x8F]
    for _ in range(5000):
        data = bytes(rng.choice(edge) for _ in range(rng.randrange(12)))
        assert tokenize(data) == oracle_tokens(data), data.hex()


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=64))
def test_round_trip_and_oracle(data):
    toks = tokenize(data)
    assert toks == oracle_tokens(data)
    assert detokenize(toks) == data
    assert detokenize_ids(tokenize_ids(data)) == data


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=50))
def test_valid_text_is_all_chars(text):
    toks = tokenize(text.encode("utf-8", "surrogatepass"))
    if not any(0xD800 <= ord(ch) < 0xE000 for ch in text):
        assert toks == [Char(ord(ch)) for ch in text] + [EOF]


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=80), st.lists(st.integers(0, 80), max_size=6))
def test_streaming_matches_bulk(data, cuts):
    tk = StreamingTokenizer()
    out = []
    prev = 0
    for c in sorted(set(min(c, len(data)) for c in cuts)):
        out += tk.feed(data[prev:c])
        prev = c
    out += tk.feed(data[prev:])
    out += tk.finish()
    assert out == tokenize_ids(data)


def test_self_synchronisation():
    # corruption inside one character never disturbs tokens two characters later
    text = "Привет, 世界! 😀 ok".encode()
    clean = tokenize(text)
    damaged = bytearray(text)
    damaged[1] = 0x41
    toks = tokenize(bytes(damaged))
    assert toks[-10:] == clean[-10:]


def test_count_conservation():
    rng = random.Random(5)
    for _ in range(200):
        data = rng.randbytes(rng.randrange(200))
        toks = tokenize(data)
        assert sum(len(chr(t.code_point).encode("utf-8")) if isinstance(t, Char) else 1
                   for t in toks[:-1]) == len(data)


def test_large_round_trip():
    rng = random.Random(11)
    chunks = [rng.randbytes(1000), "ü€😀漢".encode() * 1000, b"plain ascii " * 2000]
    data = b"".join(rng.choice(chunks) for _ in range(100))[:1 << 20]
    assert detokenize_ids(tokenize_ids(data)) == data

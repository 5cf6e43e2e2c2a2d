"""Compressor registry and the ``UCMP`` container format.

Layout::

    b"UCMP"  version (1 byte)  compressor id (1 byte)  parameter block  payload

The parameter block depends on the compressor id alone: PPM compressors store
the depth as one byte followed by alpha and beta as big-endian binary64;
Polya-based compressors append the tree concentration as binary64.
"""
from __future__ import annotations

import os
import struct
import tempfile
import time
from dataclasses import dataclass, replace
from typing import Optional

from . import lzw, ppm
from .coder import CoderError, CorruptStreamError
from .models import (BYTE_ALPHABET, TOKEN_ALPHABET, ModelError, PolyaBase,
                     UniformBase, calibrate_prior, Utf8Implicit)
from .ppm import PPMParams
from .tokens import TokenError, detokenize_ids, tokenize_ids

MAGIC = b"UCMP"
VERSION = 1
HEADER_SIZE = 6
DEFAULT_CONCENTRATION = 1.0

ALGORITHMS = ("lzw", "ppm")
BASES = ("none", "uniform_byte", "uniform_token", "polya_token")

# wire ids, frozen
_WIRE_IDS = {
    ("lzw", "none"): 0,
    ("lzw", "uniform_byte"): 1,
    ("lzw", "uniform_token"): 2,
    ("lzw", "polya_token"): 3,
    ("ppm", "uniform_byte"): 4,
    ("ppm", "uniform_token"): 5,
    ("ppm", "polya_token"): 6,
}
_FROM_WIRE = {v: k for k, v in _WIRE_IDS.items()}


class FormatError(ValueError):
    pass


class CorruptionError(ValueError):
    pass


@dataclass(frozen=True)
class CompressorId:
    algorithm: str
    base: str
    params: Optional[PPMParams] = None
    concentration: Optional[float] = None

    def __post_init__(self):
        if (self.algorithm, self.base) not in _WIRE_IDS:
            raise ModelError(f"unsupported compressor {self.algorithm}:{self.base}")
        if self.algorithm == "ppm" and self.params is None:
            object.__setattr__(self, "params", ppm.PRESETS[self.base])
        if self.algorithm == "lzw" and self.params is not None:
            raise ModelError("LZW takes no PPM parameters")
        if self.base == "polya_token":
            if self.concentration is None:
                object.__setattr__(self, "concentration", DEFAULT_CONCENTRATION)
            if not self.concentration > 0:
                raise ModelError("concentration must be positive")
        elif self.concentration is not None:
            raise ModelError("concentration only applies to the Polya base model")

    @property
    def name(self) -> str:
        return f"{self.algorithm}:{self.base}"

    @property
    def wire_id(self) -> int:
        return _WIRE_IDS[(self.algorithm, self.base)]

    @property
    def token_alphabet(self) -> bool:
        return self.base.endswith("_token")

    @property
    def label(self) -> str:
        """Short column label: L/P followed by UB, UT or PT."""
        short = {"none": "none", "uniform_byte": "UB", "uniform_token": "UT",
                 "polya_token": "PT"}[self.base]
        return self.algorithm[0].upper() + short

    def with_params(self, depth=None, alpha=None, beta=None, concentration=None) -> "CompressorId":
        params = self.params
        if any(v is not None for v in (depth, alpha, beta)):
            if params is None:
                raise ModelError(f"{self.name} takes no depth/alpha/beta")
            params = PPMParams(
                params.depth if depth is None else depth,
                params.alpha if alpha is None else alpha,
                params.beta if beta is None else beta,
            )
        conc = self.concentration if concentration is None else concentration
        return replace(self, params=params, concentration=conc)


def parse_compressor(name: str, depth=None, alpha=None, beta=None,
                     concentration=None) -> CompressorId:
    """``"ppm:uniform_byte"`` etc.  ``"lzw:none_byte"`` is accepted for classic LZW."""
    if ":" not in name:
        raise ModelError(f"compressor name must look like 'ppm:polya_token', got {name!r}")
    algorithm, base = name.split(":", 1)
    if base == "none_byte":
        base = "none"
    cid = CompressorId(algorithm, base)
    return cid.with_params(depth, alpha, beta, concentration)


ALL_COMPRESSORS = tuple(CompressorId(a, b) for a, b in _WIRE_IDS)


def _make_base(cid: CompressorId):
    if cid.base == "none":
        return None
    if cid.base == "uniform_byte":
        return UniformBase(BYTE_ALPHABET)
    if cid.base == "uniform_token":
        return UniformBase(TOKEN_ALPHABET)
    tree = calibrate_prior(TOKEN_ALPHABET, Utf8Implicit(), cid.concentration)
    return PolyaBase(tree)


def encode_header(cid: CompressorId) -> bytes:
    out = bytearray(MAGIC)
    out.append(VERSION)
    out.append(cid.wire_id)
    if cid.algorithm == "ppm":
        out.append(cid.params.depth)
        out += struct.pack(">dd", cid.params.alpha, cid.params.beta)
    if cid.base == "polya_token":
        out += struct.pack(">d", cid.concentration)
    return bytes(out)


def param_block_size(wire_id: int) -> int:
    algorithm, base = _FROM_WIRE[wire_id]
    return (17 if algorithm == "ppm" else 0) + (8 if base == "polya_token" else 0)


def decode_header(data: bytes):
    """Parse a container header, returning ``(CompressorId, header length)``."""
    if len(data) < HEADER_SIZE or data[:4] != MAGIC:
        raise FormatError("not a UCMP container (bad magic)")
    version = data[4]
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    wire = data[5]
    if wire not in _FROM_WIRE:
        raise FormatError(f"unknown compressor id {wire}")
    algorithm, base = _FROM_WIRE[wire]
    size = HEADER_SIZE + param_block_size(wire)
    if len(data) < size:
        raise CorruptionError("container truncated inside the parameter block")
    pos = HEADER_SIZE
    params = None
    conc = None
    try:
        if algorithm == "ppm":
            depth = data[pos]
            alpha, beta = struct.unpack(">dd", data[pos + 1:pos + 17])
            params = PPMParams(depth, alpha, beta)
            pos += 17
        if base == "polya_token":
            (conc,) = struct.unpack(">d", data[pos:pos + 8])
        cid = CompressorId(algorithm, base, params, conc)
    except ModelError as exc:
        raise FormatError(f"invalid parameter block: {exc}") from None
    return cid, size


def _symbols(data: bytes, cid: CompressorId):
    if cid.token_alphabet:
        return tokenize_ids(data), TOKEN_ALPHABET
    return list(data) + [BYTE_ALPHABET.eof], BYTE_ALPHABET


def compress(data: bytes, cid: CompressorId) -> bytes:
    symbols, alphabet = _symbols(data, cid)
    base = _make_base(cid)
    if cid.algorithm == "ppm":
        payload = ppm.encode_symbols(symbols, cid.params, base, alphabet.eof)
    else:
        payload = lzw.encode_symbols(symbols, alphabet, base)
    return encode_header(cid) + payload


def decompress(blob: bytes) -> bytes:
    cid, start = decode_header(blob)
    payload = blob[start:]
    alphabet = TOKEN_ALPHABET if cid.token_alphabet else BYTE_ALPHABET
    base = _make_base(cid)
    try:
        if cid.algorithm == "ppm":
            symbols = ppm.decode_symbols(payload, cid.params, base, alphabet.eof)
        else:
            symbols = lzw.decode_symbols(payload, alphabet, base)
        if cid.token_alphabet:
            return detokenize_ids(symbols)
        if any(s > 255 for s in symbols[:-1]):
            raise CorruptionError("EOF symbol inside byte stream")
        return bytes(symbols[:-1])
    except (CorruptStreamError, CoderError, ModelError, TokenError) as exc:
        raise CorruptionError(f"corrupt payload: {exc}") from None


@dataclass
class CompressionStats:
    input_bytes: int
    output_bytes: int
    seconds: float
    compressor: str = ""

    @property
    def bits_per_byte(self) -> float:
        if self.input_bytes == 0:
            return float("nan")
        return 8.0 * self.output_bytes / self.input_bytes


def _atomic_write(path, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".unicomp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def compress_file(in_path, out_path, cid: CompressorId) -> CompressionStats:
    with open(in_path, "rb") as f:
        data = f.read()
    t0 = time.perf_counter()
    blob = compress(data, cid)
    elapsed = time.perf_counter() - t0
    _atomic_write(out_path, blob)
    return CompressionStats(len(data), len(blob), elapsed, cid.name)


def decompress_file(in_path, out_path) -> None:
    """Decompress a container; nothing is written if decoding fails."""
    with open(in_path, "rb") as f:
        blob = f.read()
    data = decompress(blob)
    _atomic_write(out_path, data)

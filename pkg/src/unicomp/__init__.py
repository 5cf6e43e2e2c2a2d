"""Unicode-aware LZW and PPM compressors with pluggable base models."""
from .container import (ALL_COMPRESSORS, CompressorId, CorruptionError, FormatError,
                        compress, compress_file, decompress, decompress_file,
                        parse_compressor)
from .tokens import Byte, Char, EOF, detokenize, tokenize

__version__ = "0.1.0"

__all__ = [
    "ALL_COMPRESSORS", "Byte", "Char", "CompressorId", "CorruptionError", "EOF",
    "FormatError", "compress", "compress_file", "decompress", "decompress_file",
    "detokenize", "parse_compressor", "tokenize",
]

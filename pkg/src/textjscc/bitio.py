"""Bit packing and the binary wire formats shared by the codecs.

Bit arrays are numpy uint8 vectors over {0, 1}.  Packing is MSB-first:
bit 0 of the stream lands in the most significant bit of byte 0.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptStream, ShapeError

# Codec ids for the bitstream container header.
CODEC_FIXED5 = 1
CODEC_HUFFMAN = 2
CODEC_LZSS = 3


def pack_bits(bits: np.ndarray) -> bytes:
    """Pack a {0,1} bit vector into bytes, MSB-first, zero-padded at the end."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ShapeError("pack_bits expects a 1-D bit vector")
    return np.packbits(bits).tobytes()


def unpack_bits(data: bytes, nbits: int) -> np.ndarray:
    """Inverse of pack_bits; nbits strips the byte-boundary padding."""
    arr = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if nbits > arr.size:
        raise CorruptStream(f"need {nbits} bits, payload holds {arr.size}")
    return arr[:nbits].copy()


def write_container(codec_id: int, bits: np.ndarray) -> bytes:
    """Bitstream container: codec id byte, payload bit length (u32 LE), packed payload."""
    header = struct.pack("<BI", codec_id, int(np.asarray(bits).size))
    return header + pack_bits(bits)


def read_container(blob: bytes) -> tuple[int, np.ndarray]:
    """Parse a bitstream container, returning (codec_id, payload bits)."""
    if len(blob) < 5:
        raise CorruptStream("container shorter than its header")
    codec_id, nbits = struct.unpack("<BI", blob[:5])
    expected = (nbits + 7) // 8
    if len(blob) - 5 < expected:
        raise CorruptStream("container payload truncated")
    return codec_id, unpack_bits(blob[5:5 + expected], nbits)


def codeword_to_bytes(codeword: np.ndarray) -> bytes:
    """Pack a {-1,+1} codeword: +1 -> 1, -1 -> 0, MSB-first, zero padding.

    The codeword length travels in the container header, not here.
    """
    cw = np.asarray(codeword)
    if not np.all(np.abs(cw) == 1):
        raise ShapeError("codeword entries must be -1 or +1")
    return pack_bits((cw > 0).astype(np.uint8))


def codeword_from_bytes(data: bytes, length: int) -> np.ndarray:
    """Inverse of codeword_to_bytes for a known codeword length."""
    bits = unpack_bits(data, length)
    return (bits.astype(np.int8) * 2 - 1)


# Observation symbols use 2 bits each: 00 = erased, 01 = -1, 11 = +1.
_OBS_CODES = {0: 0b00, -1: 0b01, 1: 0b11}
_OBS_SYMBOLS = {0b00: 0, 0b01: -1, 0b11: 1}


def observation_to_bytes(obs: np.ndarray) -> bytes:
    """Pack a ternary {-1,0,+1} observation at 2 bits per position."""
    obs = np.asarray(obs)
    bits = np.zeros(2 * obs.size, dtype=np.uint8)
    for i, sym in enumerate(obs.tolist()):
        if sym not in _OBS_CODES:
            raise ShapeError(f"observation symbol {sym} outside {{-1,0,1}}")
        code = _OBS_CODES[sym]
        bits[2 * i] = code >> 1
        bits[2 * i + 1] = code & 1
    return pack_bits(bits)


def observation_from_bytes(data: bytes, length: int) -> np.ndarray:
    """Inverse of observation_to_bytes for a known observation length."""
    bits = unpack_bits(data, 2 * length)
    out = np.zeros(length, dtype=np.int8)
    for i in range(length):
        code = (int(bits[2 * i]) << 1) | int(bits[2 * i + 1])
        if code not in _OBS_SYMBOLS:
            raise CorruptStream(f"invalid observation code {code:02b}")
        out[i] = _OBS_SYMBOLS[code]
    return out

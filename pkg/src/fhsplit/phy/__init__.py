"""Toy PHY chain that makes the bidirectional 7.3 split executable."""

from .coding import (
    CodeBlock,
    TransportBlock,
    coded_length,
    conv_encode,
    decode,
    decode_parallel,
    encode,
    viterbi_decode,
)
from .modem import IqSymbolBlock, awgn, demodulate_llr, modulate
from .softbits import SoftBitBlock, quantize_llr

__all__ = [
    "CodeBlock",
    "IqSymbolBlock",
    "SoftBitBlock",
    "TransportBlock",
    "awgn",
    "coded_length",
    "conv_encode",
    "decode",
    "decode_parallel",
    "demodulate_llr",
    "encode",
    "modulate",
    "quantize_llr",
    "viterbi_decode",
]

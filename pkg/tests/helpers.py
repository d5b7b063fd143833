"""Shared Monte Carlo harness for the codec tests."""

import numpy as np

from fhsplit.phy import coding, modem, softbits


def ber_curve(ebn0_db, widths, n_bits=10**6, block_bits=10_000, o_m=2, seed=2024):
    """Bit errors per soft-bit width (``None`` = unquantised) over shared noise."""
    snr = modem.ebn0_to_snr_db(ebn0_db, o_m, 0.5)
    n0 = modem.noise_variance_for(snr)
    errors = dict.fromkeys(widths, 0)
    rng = np.random.default_rng(seed)
    for b in range(n_bits // block_bits):
        bits = rng.integers(0, 2, block_bits, dtype=np.uint8)
        tx = modem.modulate(coding.conv_encode(bits), o_m)
        rx = modem.awgn(tx, snr, seed=[seed, b])
        llr = modem.demodulate_llr(rx, o_m, n0)[: 2 * (block_bits + coding.TAIL_BITS)]
        for w in widths:
            metrics = llr if w is None else softbits.quantize_llr(llr, w).decoder_metrics()
            errors[w] += int(np.count_nonzero(coding.viterbi_decode(metrics) != bits))
    return errors

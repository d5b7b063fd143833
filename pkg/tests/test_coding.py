import itertools
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhsplit.errors import FramingError, SizeError
from fhsplit.phy import coding, modem, softbits
from fhsplit.phy.coding import TransportBlock

from helpers import ber_curve


def ml_decode(llr, n_info):
    """Exhaustive maximum-likelihood search over all 2**n_info messages."""
    best, best_metric = None, -np.inf
    for bits in itertools.product((0, 1), repeat=n_info):
        c = coding.conv_encode(np.array(bits, np.uint8))
        metric = float(np.dot(llr, 1.0 - 2.0 * c))
        if metric > best_metric:
            best, best_metric = bits, metric
    return np.array(best, np.uint8)


def soft_chain(tb, o_m, s_bw, snr_db=30.0, seed=0, max_cb=2048):
    blocks = coding.encode(tb, max_cb)
    n0 = modem.noise_variance_for(snr_db) if np.isfinite(snr_db) else 1.0
    out = []
    for i, cb in enumerate(blocks):
        tx = modem.modulate(cb.coded_bits, o_m)
        rx = modem.awgn(tx, snr_db, seed=[seed, i])
        llr = modem.demodulate_llr(rx, o_m, n0)[: len(cb.coded_bits)]
        out.append(softbits.quantize_llr(llr, s_bw))
    return out


class TestCrc:
    def test_check_value(self):
        # CRC-16/CCITT-FALSE check value
        assert coding.crc16(b"123456789") == 0x29B1

    def test_transport_block(self):
        tb = TransportBlock.from_payload(b"abc")
        assert tb.crc_valid
        assert not TransportBlock(b"abc", tb.crc ^ 1).crc_valid


class TestEncoder:
    def test_impulse_response(self):
        c = coding.conv_encode(np.array([1], np.uint8))
        g0 = [int(b) for b in f"{0o171:07b}"]
        g1 = [int(b) for b in f"{0o133:07b}"]
        np.testing.assert_array_equal(c[0::2], g0)
        np.testing.assert_array_equal(c[1::2], g1)

    def test_all_zero(self):
        tb = TransportBlock(bytes(10), 0)
        (cb,) = coding.encode(tb)
        assert not cb.coded_bits.any()

    def test_segmentation(self):
        blocks = coding.encode(TransportBlock.from_payload(bytes(1000)), 2048)
        assert len(blocks) == 4  # ceil((8000 + 16) / 2048)
        assert [b.info_len for b in blocks] == [2048, 2048, 2048, 1872]
        assert coding.coded_length(1000, 2048) == sum(len(b.coded_bits) for b in blocks)

    def test_empty_payload(self):
        with pytest.raises(SizeError):
            coding.encode(TransportBlock(b"", 0))

    def test_oversize_payload(self):
        with pytest.raises(SizeError):
            coding.encode(TransportBlock.from_payload(bytes(100)), max_transport_bytes=99)

    @given(st.integers(16, 50_000))
    def test_max_payload_fits(self, budget):
        n = coding.max_payload_for(budget, 2048)
        if n:
            assert coding.coded_length(n, 2048) <= budget
        assert coding.coded_length(n + 1, 2048) > budget


class TestViterbi:
    @pytest.mark.parametrize("n_info", [1, 4, 8, 10])
    def test_matches_ml_search(self, n_info):
        rng = np.random.default_rng(n_info)
        for _ in range(20):
            llr = rng.normal(size=2 * (n_info + coding.TAIL_BITS))
            np.testing.assert_array_equal(coding.viterbi_decode(llr), ml_decode(llr, n_info))

    def test_rejects_odd_length(self):
        with pytest.raises(FramingError):
            coding.viterbi_decode(np.ones(29))

    def test_rejects_hard_bit_blocks(self):
        blocks = coding.encode(TransportBlock.from_payload(b"x"))
        with pytest.raises(TypeError):
            coding.decode(blocks)


class TestRoundTrip:
    def test_noiseless_8bit(self):
        tb = TransportBlock.from_payload(os.urandom(300))
        got, ok = coding.decode(soft_chain(tb, 2, 8, snr_db=np.inf))
        assert ok and got.payload == tb.payload

    @pytest.mark.parametrize("o_m", [2, 4, 6, 8])
    @pytest.mark.parametrize("s_bw", [4, 5, 8, 16])
    def test_high_snr_every_order_and_width(self, o_m, s_bw):
        tb = TransportBlock.from_payload(np.random.default_rng(o_m * s_bw).bytes(700))
        got, ok = coding.decode(soft_chain(tb, o_m, s_bw, snr_db=30.0, seed=o_m))
        assert ok and got.payload == tb.payload

    @settings(max_examples=25, deadline=None)
    @given(st.binary(min_size=1, max_size=600), st.sampled_from([64, 500, 2048]))
    def test_unquantized_arbitrary_payloads(self, payload, max_cb):
        tb = TransportBlock.from_payload(payload)
        llrs = [1.0 - 2.0 * cb.coded_bits for cb in coding.encode(tb, max_cb)]
        got, ok = coding.decode(llrs)
        assert ok and got == tb

    def test_erasure_fails_crc(self):
        rng = np.random.default_rng(5)
        passed = 0
        for _ in range(1000):
            tb = TransportBlock.from_payload(rng.bytes(int(rng.integers(8, 64))))
            blocks = coding.encode(tb, 256)
            erased = [softbits.SoftBitBlock(np.zeros(len(b.coded_bits), np.int16), 8, 1.0) for b in blocks]
            _, ok = coding.decode(erased)
            passed += ok
        assert passed == 0


@pytest.fixture(scope="module")
def blocks():
    tb = TransportBlock.from_payload(np.random.default_rng(3).bytes(12_000))
    return tb, soft_chain(tb, 4, 5, snr_db=12.0, seed=9, max_cb=6144)


class TestParallel:
    @pytest.mark.parametrize("workers", [1, 2, 4, 8])
    def test_identical_to_sequential(self, blocks, workers):
        tb, soft = blocks
        ref, ref_ok = coding.decode(soft)
        got, ok, wall = coding.decode_parallel(soft, workers)
        assert (got, ok) == (ref, ref_ok) and wall >= 0
        assert ok and got.payload == tb.payload

    def test_rejects_zero_workers(self, blocks):
        with pytest.raises(ValueError):
            coding.decode_parallel(blocks[1], 0)


@pytest.mark.slow
class TestBer:
    def test_unquantized_baseline_at_6db(self):
        errors = ber_curve(6.0, [None])
        assert errors[None] / 10**6 < 1e-4

    def test_width_ordering_at_3_5db(self):
        # errors are plentiful here, so the ordering between widths is visible
        e = ber_curve(3.5, [4, 5, 8], n_bits=300_000)
        assert e[4] >= e[5] >= e[8] > 0

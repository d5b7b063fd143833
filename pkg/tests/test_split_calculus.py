from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhsplit import split_calculus as sc
from fhsplit.errors import CapacityError, ConfigurationError
from fhsplit.split_calculus import CellConfig, Direction, Split

DL, UL = Direction.DL, Direction.UL

# published peak-rate table: (layers, o_m) -> (10, 20, 100 MHz)
PEAK_DL = {
    (1, 6): (37.8, 75.6, 378.0),
    (1, 8): (50.4, 100.8, 504.0),
    (2, 6): (75.6, 151.2, 756.0),
    (2, 8): (100.8, 201.6, 100.8),
    (4, 6): (151.2, 302.4, 1512),
    (4, 8): (201.6, 403.2, 2016),
    (8, 6): (302.4, 604.8, 3024),
    (8, 8): (403.2, 806.4, 4032),
}
PEAK_UL = {4: (25.2, 50.4, 252.0), 6: (37.8, 75.6, 378.0)}

CAPACITY = {
    "FS-I": (153.6, 307.2, 614.4, 1228.8, 1843.2, 2457.6),
    "FS-II": (143.4, 286.7, 573.4, 1146.9, 1720.3, 2293.8),
    "FS-III": (86.4, 172.8, 360.0, 720.0, 1080.0, 1140.0),
    "FS-IV": (60.5, 121.0, 252.0, 504.0, 756.0, 1008.0),
    "FS-V": (30.2, 60.5, 126.0, 252.0, 378.0, 504.0),
    "FS-VI": (6.0, 12.1, 25.2, 50.4, 75.6, 100.8),
    "FS-VII": (5.5, 11.1, 23.1, 46.2, 69.3, 92.4),
}

GAIN = {  # o_m -> (UL s_bw 8, 5, 4, DL)
    2: (2, 3.2, 4, 16),
    4: (1, 1.6, 2, 8),
    6: (0.7, 1.1, 1.3, 5.3),
    8: (0.5, 0.8, 1, 4),
}

cells = st.builds(
    CellConfig,
    cell_bandwidth_mhz=st.sampled_from(sorted(sc.N_RB)),
    o_m=st.sampled_from([2, 4, 6, 8]),
    mimo_layers=st.sampled_from([1, 2, 4, 8]),
    n_ant=st.sampled_from([1, 2, 4, 8]),
    gamma=st.fractions(0, 1, max_denominator=100),
    s_bw=st.sampled_from([4, 5, 8, 16]),
)


class TestCellConfig:
    def test_lookup_defaults(self):
        cfg = CellConfig(20)
        assert cfg.n_rb == 100 and cfg.n_sc == 1200
        assert cfg.f_sampling_mhz == Fraction("30.72")

    def test_100mhz_uses_6000_subcarriers(self):
        assert CellConfig(100).n_sc == 6000

    def test_with_rederives_grid(self):
        assert CellConfig(20).with_(cell_bandwidth_mhz=10).n_rb == 50

    @pytest.mark.parametrize("kwargs", [
        {"cell_bandwidth_mhz": 7},
        {"o_m": 0},
        {"mimo_layers": 0},
        {"gamma": Fraction(3, 2)},
        {"n_rb": -1},
        {"s_bw": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            CellConfig(**{"cell_bandwidth_mhz": 20, **kwargs})


class TestPeakRates:
    @pytest.mark.parametrize("layers,o_m", list(PEAK_DL))
    def test_downlink_table(self, layers, o_m):
        for bw, printed in zip((10, 20, 100), PEAK_DL[layers, o_m]):
            got = sc.peak_rate_dl(CellConfig(bw, o_m=o_m, mimo_layers=layers))
            if (layers, o_m, float(bw)) in sc.PEAK_TABLE_ERRATA:
                assert printed == float(sc.PEAK_TABLE_ERRATA[layers, o_m, float(bw)])
                assert got == 1008
            else:
                assert sc.round_display(got) == printed

    def test_worked_example(self):
        assert sc.peak_rate_dl(CellConfig(20, o_m=6)) == Fraction("75.6")

    @pytest.mark.parametrize("o_m", list(PEAK_UL))
    def test_uplink_table(self, o_m):
        for bw, printed in zip((10, 20, 100), PEAK_UL[o_m]):
            assert sc.round_display(sc.peak_rate_ul(CellConfig(bw, o_m=o_m, mimo_layers=8))) == printed

    def test_full_overhead_gives_zero(self):
        assert sc.peak_rate_dl(CellConfig(20, gamma=1)) == 0
        assert sc.peak_rate_ul(CellConfig(10, o_m=4, gamma=1)) == 0

    def test_uplink_layers_override(self):
        cfg = CellConfig(10, o_m=4)
        assert sc.peak_rate_ul(cfg, layers=2) == 2 * sc.peak_rate_ul(cfg)


class TestDownlinkDemand:
    @pytest.mark.parametrize("bw,layers,o_m,gbps", [
        (10, 1, 6, 0.171), (100, 1, 6, 0.511), (10, 8, 8, 0.536), (100, 8, 8, 4.165),
    ])
    def test_fs6_table(self, bw, layers, o_m, gbps):
        d = sc.fs73_dl_demand(CellConfig(bw, o_m=o_m, mimo_layers=layers))
        assert sc.round_display(d.rate_mbps / 1000, 3) == gbps

    def test_exact_values(self):
        assert sc.fs73_dl_demand(CellConfig(100, o_m=6)).rate_mbps == 511
        assert sc.fs73_dl_demand(CellConfig(10, o_m=8, mimo_layers=8)).rate_mbps == Fraction("536.2")

    def test_e1_floor(self):
        d = sc.fs73_dl_demand(CellConfig(20, n_rb=0))
        assert d.rate_mbps == 133 and d.user_plane_mbps == 0

    def test_e1_is_same_constant_at_10_and_100(self):
        for bw in (10, 100):
            cfg = CellConfig(bw, o_m=8, mimo_layers=8)
            assert sc.fs73_dl_demand(cfg).rate_mbps - sc.peak_rate_dl(cfg) == 133


class TestConversions:
    def test_fs72_examples(self):
        assert sc.fs72_rate_from_fs73(100, 4) == 800
        assert sc.fs72_rate_from_fs73(Fraction("75.6"), 6) == Fraction("403.2")
        assert sc.fs72_rate_from_fs73(0, 2) == 0

    def test_fs73_ul_examples(self):
        assert sc.fs73_ul_rate_from_fs72(Fraction("21600"), 6, 32, 5) == 20250
        assert sc.fs73_ul_rate_from_fs72(32, 2, 32, 8) == 16
        assert sc.fs73_ul_rate_from_fs72(0, 8) == 0

    @pytest.mark.parametrize("o_m", [2, 4, 6, 8])
    def test_gain_table(self, o_m):
        row = [sc.gain_ratio(UL, o_m, s) for s in (8, 5, 4)] + [sc.gain_ratio(DL, o_m)]
        assert [sc.round_display(v) for v in row] == list(GAIN[o_m])

    def test_gain_exact_entries(self):
        assert sc.gain_ratio(DL, 2) == 16
        assert sc.gain_ratio(UL, 6, 5) == Fraction(16, 15)
        assert sc.gain_ratio(UL, 4, 8) == 1

    @given(st.fractions(0, 10**5), st.sampled_from([2, 4, 6, 8]), st.sampled_from([4, 5, 8]))
    def test_round_trip(self, r, o_m, s_bw):
        r72 = sc.fs72_rate_from_fs73(r, o_m)
        assert r72 * o_m / 32 == r
        assert sc.fs73_ul_rate_from_fs72(r72, o_m, 32, s_bw) == r * s_bw

    @given(cells)
    def test_fs72_over_peak_is_32_over_om(self, cfg):
        peak = sc.peak_rate_dl(cfg)
        if peak:
            assert sc.fs72_rate_from_fs73(peak, cfg.o_m) / peak == Fraction(32, cfg.o_m)

    @pytest.mark.parametrize("o_m", [2, 4, 6, 8])
    def test_dl_gain_times_om(self, o_m):
        assert sc.gain_ratio(DL, o_m) * o_m == 32


class TestCapacityTable:
    def test_reproduces_published_cells(self):
        table = sc.capacity_table()
        mismatched = []
        for row, printed in CAPACITY.items():
            for bw, value in zip(sc.CAPACITY_BANDWIDTHS, printed):
                if sc.round_display(table[row][bw]) != value:
                    mismatched.append((row, bw))
        assert mismatched == [("FS-III", 20)]
        assert table["FS-III"][20] == 1440
        assert float(sc.CAPACITY_TABLE_ERRATA["FS-III", 20.0]) == CAPACITY["FS-III"][-1]

    def test_spot_values(self):
        table = sc.capacity_table()
        assert table["FS-IV"][1.4] == Fraction("60.48")
        assert table["FS-VII"][1.4] == Fraction("5.544")

    def test_cpri_and_fs3(self):
        assert sc.cpri_rate(CellConfig(20)) == Fraction("2457.6")
        assert sc.cpri_rate(CellConfig(1.4)) == Fraction("153.6")
        assert sc.cpri_rate(CellConfig(20, n_ant=0)) == 0
        assert sc.freq_domain_iq_rate(CellConfig(5)) == 360
        assert sc.freq_domain_iq_rate(CellConfig(10)) == 720
        assert sc.freq_domain_iq_rate(CellConfig(20)) == 1440


class TestDemand:
    def test_cbr_ignores_load(self):
        cfg = CellConfig(20)
        assert sc.demand(Split.S72, DL, cfg, 0).rate_mbps == sc.demand(Split.S72, DL, cfg).rate_mbps

    def test_s73_zero_load_is_e1(self):
        assert sc.demand(Split.S73, DL, CellConfig(20), 0).rate_mbps == 133

    def test_4165(self):
        d = sc.demand(Split.S73, DL, CellConfig(100, o_m=8, mimo_layers=8))
        assert d.rate_mbps == 4165 and d.load_dependent

    def test_uplink_carries_soft_bits(self):
        cfg = CellConfig(10, o_m=4, s_bw=5)
        assert sc.demand(Split.S73, UL, cfg).rate_mbps == Fraction("25.2") * 5

    def test_code_rate_scales_coded_bits(self):
        cfg = CellConfig(10, o_m=4)
        d = sc.demand(Split.S73, DL, cfg, 10, code_rate=Fraction(1, 2))
        assert d.user_plane_mbps == 20

    def test_overload(self):
        with pytest.raises(CapacityError) as info:
            sc.demand(Split.S73, DL, CellConfig(10), 1000)
        assert info.value.exit_code == 3

    @pytest.mark.parametrize("rate", [0, Fraction(3, 2)])
    def test_bad_code_rate(self, rate):
        with pytest.raises(ConfigurationError):
            sc.demand(Split.S73, DL, CellConfig(10), code_rate=rate)

    @settings(max_examples=60)
    @given(cells, st.fractions(0, 1), st.fractions(0, 1))
    def test_monotone_in_load(self, cfg, a, b):
        a, b = sorted((a, b))
        for direction in Direction:
            peak = sc.peak_rate(cfg, direction)
            lo = sc.demand(Split.S73, direction, cfg, peak * a).rate_mbps
            hi = sc.demand(Split.S73, direction, cfg, peak * b).rate_mbps
            assert lo <= hi
            for split in (Split.S72, Split.S71, Split.S8):
                assert (sc.demand(split, direction, cfg, peak * a).rate_mbps
                        == sc.demand(split, direction, cfg, peak * b).rate_mbps)

    @given(cells)
    def test_split_ordering(self, cfg):
        # the E1 constant sits outside the grid, so compare user-plane rates
        if cfg.n_ant < cfg.mimo_layers:
            cfg = cfg.with_(n_ant=cfg.mimo_layers)
        rates = [sc.demand(s, DL, cfg).user_plane_mbps for s in (Split.S8, Split.S71, Split.S72, Split.S73)]
        assert rates == sorted(rates, reverse=True)


class TestModulationMix:
    def test_normalized(self):
        weights = sc.OBSERVED_MIX.normalized()
        assert sum(weights.values()) == 1

    def test_degenerate_mix(self):
        cfg = CellConfig(20)
        got = sc.expected_rate_with_modmix(cfg, sc.ModulationMix({2: 1}), 1)
        assert got == sc.demand(Split.S73, DL, cfg.with_(o_m=2)).rate_mbps

    def test_zero_load(self):
        mix = sc.ModulationMix({2: Fraction(1, 2), 4: Fraction(1, 2)})
        assert sc.expected_rate_with_modmix(CellConfig(20), mix, 0) == 133

    def test_observed_mix_oracle(self):
        # weighted sum evaluated independently in floating point
        assert float(sc.expected_rate_with_modmix(CellConfig(20), sc.OBSERVED_MIX, 1)) == pytest.approx(
            171.87861374407586, rel=1e-12)
        assert float(sc.expected_rate_with_modmix(CellConfig(20), sc.OBSERVED_MIX, Fraction(1, 2))) \
            == pytest.approx(152.43930687203792, rel=1e-12)


def test_round_display_is_half_up():
    assert sc.round_display(Fraction("60.45")) == 60.5
    assert sc.round_display(Fraction("5.544")) == 5.5

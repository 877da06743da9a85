import math

import numpy as np
import pytest

from spssim import grid
from spssim.grid import (Csr, GridConfig, GridError, PscchScheme,
                         default_tbs_table, effective_code_rate,
                         min_rbs_for_payload, modulation_order,
                         subchannel_count, csrs_per_subframe, tb_size)


def load_table_rows():
    """Independent parse of the shipped table text, bypassing TbsTable."""
    from importlib import resources
    rows = []
    text = resources.files("spssim.data").joinpath("tbs_table.txt").read_text()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([int(tok) for tok in line.split()])
    return rows


class TestSubchannelCount:
    def test_ten_mhz_size_ten(self):
        assert subchannel_count(50, 10) == 5

    def test_single_subchannel(self):
        assert subchannel_count(50, 50) == 1

    def test_floor_division(self):
        assert subchannel_count(50, 12) == 4

    def test_zero_size_rejected(self):
        with pytest.raises(GridError):
            subchannel_count(50, 0)


class TestCsrsPerSubframe:
    def test_table_config(self):
        assert csrs_per_subframe(5, 2) == 2

    def test_full_width(self):
        assert csrs_per_subframe(5, 5) == 1

    def test_unit_allocation(self):
        assert csrs_per_subframe(4, 1) == 4

    def test_sensing_window_total(self):
        # candidate count over a 1000-subframe window, by exhaustive enumeration
        for n_subch, l_subch in ((5, 2), (2, 1), (4, 4), (5, 1)):
            per_sf = csrs_per_subframe(n_subch, l_subch)
            enumerated = sum(
                1 for _ in range(1000)
                for x in range(0, (n_subch // l_subch) * l_subch, l_subch))
            assert enumerated == 1000 * per_sf


class TestTbSize:
    def test_matches_independent_parse(self):
        rows = load_table_rows()
        assert tb_size(5, 20) == rows[5][19] == 1520

    def test_190_bytes_fits_in_20_rbs_at_mcs5(self):
        assert tb_size(5, 20) >= 190 * 8
        assert tb_size(5, 19) < 190 * 8

    def test_zero_rbs_rejected(self):
        with pytest.raises(GridError):
            tb_size(5, 0)

    def test_out_of_table_mcs(self):
        with pytest.raises(GridError):
            tb_size(21, 10)

    def test_monotone_in_rbs(self):
        table = default_tbs_table()
        for mcs in range(0, 21):
            sizes = [tb_size(mcs, n) for n in range(1, table.max_prb + 1)]
            assert all(b > a for a, b in zip(sizes, sizes[1:]))

    def test_modulation_order_split(self):
        for mcs in range(0, 11):
            assert modulation_order(mcs) == 2
        for mcs in range(11, 21):
            assert modulation_order(mcs) == 4
        with pytest.raises(GridError):
            modulation_order(21)


class TestEffectiveCodeRate:
    def test_direct_substitution(self):
        assert effective_code_rate(1520, 2, 20) == pytest.approx(1520 / 4320)

    def test_denominator_equality(self):
        assert effective_code_rate(4320, 2, 20) == 1.0

    def test_qpsk_ceiling_near_0_8(self):
        table = default_tbs_table()
        peak = max(
            effective_code_rate(tb_size(mcs, n), 2, n)
            for mcs in range(0, 11) for n in range(1, table.max_prb + 1))
        assert 0.75 <= peak <= 0.85

    def test_qpsk_always_below_bound(self):
        table = default_tbs_table()
        for mcs in range(0, 11):
            for n in range(1, table.max_prb + 1):
                assert effective_code_rate(tb_size(mcs, n), 2, n) <= 0.85

    def test_linear_in_tb_and_inverse_in_rbs(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            tb = int(rng.integers(8, 10000))
            q = int(rng.choice([2, 4]))
            n = int(rng.integers(1, 100))
            base = effective_code_rate(tb, q, n)
            assert effective_code_rate(3 * tb, q, n) == pytest.approx(3 * base)
            assert effective_code_rate(tb, q, 2 * n) == pytest.approx(base / 2)


class TestMinRbsForPayload:
    def test_table_config_anchor(self):
        assert min_rbs_for_payload(5, 190 * 8) == 20

    def test_degenerate_payload(self):
        assert min_rbs_for_payload(5, 0) == 1

    def test_matches_scan_oracle(self):
        # frozen from a linear scan over the shipped table
        assert min_rbs_for_payload(0, 300 * 8) == 94

    def test_scan_oracle_randomized(self):
        rows = load_table_rows()
        rng = np.random.default_rng(11)
        for _ in range(100):
            mcs = int(rng.integers(0, 21))
            itbs = mcs if mcs <= 10 else mcs - 1
            payload = int(rng.integers(1, rows[itbs][-1] + 1))
            expect = next(n for n in range(1, 101) if rows[itbs][n - 1] >= payload)
            assert min_rbs_for_payload(mcs, payload) == expect

    def test_capacity_error(self):
        with pytest.raises(GridError):
            min_rbs_for_payload(0, 10 ** 9)


class TestGridConfig:
    def test_default_table_config(self):
        g = GridConfig()
        g.validate()
        assert g.n_subch == 2
        assert g.csrs_in_subframe() == 2
        assert g.q == 2

    def test_inconsistent_n_subch_rejected(self):
        with pytest.raises(GridError, match="n_subch"):
            GridConfig(n_subch=3)

    def test_adjacent_fit_enforced(self):
        g = GridConfig(subchannel_size=10, l_subch=2, n_pssch_rb=20, n_subch=0)
        with pytest.raises(GridError, match="n_pssch_rb"):
            g.validate()

    def test_strict_subchannel_sizes(self):
        g = GridConfig(subchannel_size=7, n_pssch_rb=4, n_subch=0)
        with pytest.raises(GridError, match="strict"):
            g.validate(strict=True)
        g.validate(strict=False)

    def test_csr_helpers(self):
        g = GridConfig()
        c = Csr(42, 1, 1)
        assert list(c.subchannels()) == [1]
        assert g.csr_rb_span(c) == (25, 47)
        assert c.overlaps(0, 2) and not c.overlaps(0, 1)
        assert g.csr_starts == [0, 1]

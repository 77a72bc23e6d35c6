import numpy as np
import pytest

from brlsmig.linop import DenseOperator, IdentityOperator
from brlsmig.metrics import (
    RunReport,
    bandpass_depth,
    data_misfit,
    format_report,
    model_error,
    parse_report,
    scale_to_data,
    vertical_band,
)
from brlsmig.rls import DataBlock
from brlsmig.wem import Grid2D, Reflectivity


def blocks_from(mat_rows, data):
    blocks = []
    for i, (rows, d) in enumerate(zip(mat_rows, data)):
        blocks.append(DataBlock(i, DenseOperator(rows), d))
    return blocks


class TestDataMisfit:
    def test_zero_model_gives_data_energy(self):
        blocks = blocks_from(
            [np.eye(2), np.eye(2)], [np.array([1.0, 2.0]), np.array([3.0, 0.0])]
        )
        assert data_misfit(blocks, np.zeros(2)) == pytest.approx(1 + 4 + 9)

    def test_exact_model_near_zero(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal(4)
        mats = [rng.standard_normal((3, 4)) for _ in range(3)]
        blocks = blocks_from(mats, [a @ m for a in mats])
        total = sum(float(b.data @ b.data) for b in blocks)
        assert data_misfit(blocks, m) < 1e-12 * total


class TestScaleToData:
    def test_recovers_known_scale(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal(5)
        mats = [rng.standard_normal((4, 5)) for _ in range(2)]
        blocks = blocks_from(mats, [2.5 * (a @ m) for a in mats])
        assert scale_to_data(blocks, m) == pytest.approx(2.5)

    def test_zero_image_gives_zero(self):
        blocks = blocks_from([np.eye(3)], [np.ones(3)])
        assert scale_to_data(blocks, np.zeros(3)) == 0.0


class TestModelError:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.truth = Reflectivity(Grid2D(rng.standard_normal((8, 6)), 10.0, 10.0))

    def test_exact_model_zero_error(self):
        assert model_error(self.truth.ravel(), self.truth) == 0.0

    def test_double_amplitude_unit_error(self):
        assert model_error(2.0 * self.truth.ravel(), self.truth) == pytest.approx(1.0)

    def test_zero_model_unit_error(self):
        assert model_error(np.zeros(48), self.truth) == pytest.approx(1.0)

    def test_zero_truth_reported(self):
        zero = Reflectivity(Grid2D(np.zeros((4, 4)), 1.0, 1.0))
        with pytest.raises(ValueError, match="zero"):
            model_error(np.zeros(16), zero)

    def test_band_projection_removes_out_of_band(self):
        nz = 64
        z = np.arange(nz)
        # harmonics on exact DFT bins: 8/64 in band, 28/64 outside
        in_band = np.cos(2 * np.pi * (8 / nz) * z)
        out_band = np.cos(2 * np.pi * (28 / nz) * z)
        truth = Reflectivity(Grid2D(in_band[:, None] * np.ones((1, 4)), 1.0, 1.0))
        m = (in_band + out_band)[:, None] * np.ones((1, 4))
        err = model_error(m.ravel(), truth, band=(0.05, 0.2))
        assert err < 1e-10


class TestVerticalBand:
    def test_intersection_mapping(self):
        k_lo, k_hi = vertical_band((5.0, 35.0), 1800.0, 2400.0)
        assert k_lo == pytest.approx(2 * 5.0 / 1800.0)
        assert k_hi == pytest.approx(2 * 35.0 / 2400.0)

    def test_empty_intersection_rejected(self):
        with pytest.raises(ValueError, match="recoverable"):
            vertical_band((5.0, 6.0), 100.0, 10000.0)


class TestBandpassDepth:
    def test_flat_spectrum_partition(self):
        rng = np.random.default_rng(9)
        v = rng.standard_normal((32, 3))
        inside = bandpass_depth(v, 1.0, (0.0, 0.5))
        np.testing.assert_allclose(inside, v, atol=1e-12)  # full band is identity


class TestReportRoundTrip:
    def test_round_trip_lossless(self):
        report = RunReport(
            method="brls",
            data_misfit=1.234567890123456e-3,
            model_error=0.4567890123456789,
            wall_time=12.5,
            per_window_iterations=[14, 12, 11, 9],
        )
        back = parse_report(format_report(report))
        assert back == report

    def test_round_trip_without_iterations(self):
        report = RunReport(method="lsm", data_misfit=0.5, model_error=0.25, wall_time=1.0)
        back = parse_report(format_report(report))
        assert back == report

    def test_missing_key_rejected(self):
        with pytest.raises(ValueError, match="missing key"):
            parse_report("method=lsm\ndata_misfit=1.0\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError, match="malformed"):
            parse_report("method=lsm\nnot a pair\n")

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError, match="method"):
            parse_report(
                "method=magic\ndata_misfit=1.0\nmodel_error=1.0\nwall_time=0.0\n"
            )

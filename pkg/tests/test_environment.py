"""
Ground-truth fields, grid files, resampling and the observation model
"""
import numpy as np
import pytest

from app.core.exceptions import GridFormatError, OutOfExtentError
from app.services.environment import (
    Extent,
    FieldGrid,
    GaussianSource,
    crop,
    default_noise_std,
    downsample,
    environment_from_selector,
    field_value,
    load_grid,
    observe,
    rasterize,
    save_grid,
    synth_environment,
    upsample,
)

UNIT = Extent(0.0, 10.0, 0.0, 10.0)


def write_grid(path, header, rows):
    path.write_text(header + "\nx,y,value\n" + "\n".join(rows) + "\n")
    return path


class TestSyntheticFields:
    """Test Gaussian-source fields"""

    def test_peak_equals_amplitude(self):
        source = GaussianSource(center=(4.0, 6.0), amplitude=0.8, spread=1.0)
        assert field_value([source], np.array([[4.0, 6.0]]))[0] == pytest.approx(0.8)
        grid = rasterize([source], UNIT, 30, 30)
        assert grid.cells.max() == pytest.approx(0.8, rel=0.05)

    def test_decay_at_three_spreads(self):
        source = GaussianSource(center=(5.0, 5.0), amplitude=1.0, spread=0.7)
        assert field_value([source], np.array([[5.0 + 2.1, 5.0]]))[0] < 0.012

    def test_superposition(self):
        a = GaussianSource(center=(1.0, 1.0), amplitude=0.5, spread=0.6)
        b = GaussianSource(center=(9.0, 9.0), amplitude=0.9, spread=0.8)
        points = np.random.default_rng(0).uniform(0, 10, size=(100, 2))
        np.testing.assert_allclose(
            field_value([a, b], points), field_value([a], points) + field_value([b], points), atol=1e-12
        )

    def test_seeded_and_non_negative(self):
        first, second = synth_environment(7), synth_environment(7)
        np.testing.assert_array_equal(first.cells, second.cells)
        assert first.cells.shape == (30, 30)
        assert np.all(first.cells >= 0)
        assert not np.array_equal(first.cells, synth_environment(8).cells)

    def test_invalid_source(self):
        with pytest.raises(ValueError):
            GaussianSource(center=(0.0, 0.0), amplitude=0.0, spread=1.0)


class TestFieldGrid:
    """Test grid geometry and hotspot labelling"""

    def test_hotspot_mask_is_half(self, synth_grid):
        assert synth_grid.hotspot_mask().sum() == 450
        odd = FieldGrid(UNIT, np.arange(15.0).reshape(3, 5))
        assert odd.hotspot_mask().sum() == 7
        assert odd.hotspot_threshold == 7.0

    def test_hotspot_ties_go_low(self):
        grid = FieldGrid(UNIT, np.array([[1.0, 1.0], [1.0, 2.0]]))
        assert grid.hotspot_mask().tolist() == [[False, False], [False, True]]

    def test_cell_index(self):
        grid = FieldGrid(UNIT, np.zeros((4, 5)))
        assert grid.cell_index(0.0, 0.0) == (0, 0)
        assert grid.cell_index(10.0, 10.0) == (3, 4)
        assert grid.cell_index(2.1, 7.6) == (3, 1)
        with pytest.raises(OutOfExtentError):
            grid.cell_index(10.5, 1.0)

    def test_cell_centers_row_major(self):
        centers = FieldGrid(UNIT, np.zeros((2, 2))).cell_centers()
        np.testing.assert_allclose(centers, [[2.5, 2.5], [7.5, 2.5], [2.5, 7.5], [7.5, 7.5]])

    def test_non_finite_cells_rejected(self):
        with pytest.raises(GridFormatError, match="row 1, column 0"):
            FieldGrid(UNIT, np.array([[1.0, 2.0], [np.nan, 3.0]]))

    def test_standardize(self, synth_grid):
        standard, transform = synth_grid.standardize()
        assert standard.cells.mean() == pytest.approx(0.0, abs=1e-12)
        assert standard.cells.std() == pytest.approx(1.0)
        np.testing.assert_allclose(transform.to_raw(standard.cells), synth_grid.cells, atol=1e-12)

    def test_cells_read_only(self, synth_grid):
        with pytest.raises(ValueError):
            synth_grid.cells[0, 0] = 1.0


class TestResampling:
    """Test block-mean downsampling and cropping"""

    def test_constant_field(self):
        grid = FieldGrid(UNIT, np.full((300, 300), 2.5))
        small = downsample(grid, 10)
        assert small.cells.shape == (30, 30)
        assert np.all(small.cells == 2.5)
        assert small.extent == grid.extent

    def test_block_mean(self):
        grid = FieldGrid(UNIT, np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert downsample(grid, 2).cells.tolist() == [[2.5]]

    def test_non_divisible(self):
        grid = FieldGrid(UNIT, np.zeros((6, 8)))
        with pytest.raises(GridFormatError, match="6 rows"):
            downsample(grid, 4)
        with pytest.raises(GridFormatError, match="8 columns"):
            downsample(grid, 3)

    def test_mean_preserved_through_upsample(self, synth_grid):
        round_trip = upsample(downsample(synth_grid, 3), 3)
        assert round_trip.cells.shape == synth_grid.cells.shape
        assert round_trip.cells.mean() == pytest.approx(synth_grid.cells.mean(), abs=1e-12)

    def test_crop_keeps_cells_inside_window(self):
        grid = FieldGrid(Extent(0.0, 4.0, 0.0, 4.0), np.arange(16.0).reshape(4, 4))
        cropped = crop(grid, Extent(1.0, 3.0, 0.0, 2.0))
        assert cropped.extent == Extent(1.0, 3.0, 0.0, 2.0)
        np.testing.assert_array_equal(cropped.cells, [[1.0, 2.0], [5.0, 6.0]])
        assert cropped.cell_size == grid.cell_size

    def test_crop_snaps_to_cell_edges(self):
        grid = FieldGrid(Extent(0.0, 4.0, 0.0, 4.0), np.arange(16.0).reshape(4, 4))
        cropped = crop(grid, Extent(0.4, 2.6, 0.4, 3.9))
        assert cropped.extent == Extent(0.0, 3.0, 0.0, 4.0)
        assert cropped.cells.shape == (4, 3)

    def test_empty_crop_window(self):
        grid = FieldGrid(Extent(0.0, 4.0, 0.0, 4.0), np.zeros((4, 4)))
        with pytest.raises(GridFormatError, match="no cell center"):
            crop(grid, Extent(1.1, 1.4, 0.0, 4.0))


class TestObservation:
    """Test the bilinear observation model"""

    def test_cell_center_exact(self, synth_grid, rng):
        centers = synth_grid.cell_centers()
        for i in (0, 31, 899):
            assert observe(synth_grid, centers[i], 0.0, rng) == pytest.approx(synth_grid.cells.ravel()[i], abs=1e-9)

    def test_midpoint_of_constant_rows(self, rng):
        grid = FieldGrid(UNIT, np.array([[1.0, 3.0], [1.0, 3.0]]))
        assert observe(grid, (5.0, 4.0), 0.0, rng) == pytest.approx(2.0)

    def test_noise_level(self, synth_grid):
        gen = np.random.default_rng(21)
        draws = np.array([observe(synth_grid, (5.0, 5.0), 0.05, gen) for _ in range(10_000)])
        assert draws.std() == pytest.approx(0.05, rel=0.05)

    def test_outside_extent(self, synth_grid, rng):
        with pytest.raises(OutOfExtentError):
            observe(synth_grid, (-0.1, 5.0), 0.0, rng)

    def test_default_noise(self):
        grid = FieldGrid(UNIT, np.array([[1.0, 3.0], [2.0, 5.0]]))
        assert default_noise_std(grid) == pytest.approx(0.04)


class TestGridFiles:
    """Test the grid CSV format"""

    def test_sample_grid(self, sample_grid_path):
        grid = load_grid(sample_grid_path)
        assert (grid.height, grid.width) == (60, 60)
        small = downsample(grid, 2)
        assert (small.height, small.width) == (30, 30)
        assert small.extent == grid.extent

    def test_save_then_load(self, synth_grid, tmp_path):
        path = save_grid(synth_grid, tmp_path / "grid.csv")
        loaded = load_grid(path)
        assert loaded.extent == synth_grid.extent
        np.testing.assert_allclose(loaded.cells, synth_grid.cells, rtol=1e-9, atol=1e-12)

    def test_non_round_extent_round_trip(self, tmp_path):
        extent = Extent(0.0, 12.3456789, 0.0, 12.3456789)
        grid = rasterize([GaussianSource((6.0, 6.0), 1.0, 2.0)], extent, 30, 30)
        loaded = load_grid(save_grid(grid, tmp_path / "grid.csv"))
        assert loaded.extent == extent
        np.testing.assert_allclose(loaded.cells, grid.cells, rtol=1e-9, atol=1e-12)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("x,y,value\n0.5,0.5,1\n")
        with pytest.raises(GridFormatError, match="line 1"):
            load_grid(path)

    def test_missing_cell(self, tmp_path):
        path = write_grid(
            tmp_path / "grid.csv",
            "#grid width=2 height=2 x_min=0 x_max=2 y_min=0 y_max=2",
            ["0.5,0.5,1", "1.5,0.5,2", "0.5,1.5,3"],
        )
        with pytest.raises(GridFormatError, match="row 1, column 1"):
            load_grid(path)

    def test_duplicate_cell(self, tmp_path):
        path = write_grid(
            tmp_path / "grid.csv",
            "#grid width=2 height=1 x_min=0 x_max=2 y_min=0 y_max=1",
            ["0.5,0.5,1", "0.5,0.5,2"],
        )
        with pytest.raises(GridFormatError, match="line 4"):
            load_grid(path)

    def test_non_numeric_value(self, tmp_path):
        path = write_grid(
            tmp_path / "grid.csv",
            "#grid width=2 height=1 x_min=0 x_max=2 y_min=0 y_max=1",
            ["0.5,0.5,1", "1.5,0.5,oops"],
        )
        with pytest.raises(GridFormatError, match="line 4"):
            load_grid(path)

    def test_off_grid_coordinate(self, tmp_path):
        path = write_grid(
            tmp_path / "grid.csv",
            "#grid width=2 height=1 x_min=0 x_max=2 y_min=0 y_max=1",
            ["0.5,0.5,1", "1.2,0.5,2"],
        )
        with pytest.raises(GridFormatError, match="not a cell center"):
            load_grid(path)


class TestSelectors:
    """Test environment selectors"""

    def test_synth_with_seed(self):
        grid = environment_from_selector("synth:5", fallback_seed=0)
        np.testing.assert_array_equal(grid.cells, synth_environment(5).cells)

    def test_synth_uses_fallback_seed(self):
        grid = environment_from_selector("synth", fallback_seed=9, width=20, height=20)
        np.testing.assert_array_equal(grid.cells, synth_environment(9, width=20, height=20).cells)

    def test_file_with_downsampling(self, sample_grid_path):
        grid = environment_from_selector(f"file:{sample_grid_path}", fallback_seed=0, downsample_factor=2)
        assert grid.cells.shape == (30, 30)

    def test_file_with_crop_then_downsampling(self, sample_grid_path):
        grid = environment_from_selector(
            f"file:{sample_grid_path}", fallback_seed=0, downsample_factor=2, crop_window=Extent(0.0, 5.0, 0.0, 5.0)
        )
        assert grid.cells.shape == (15, 15)
        assert grid.extent.x_max == pytest.approx(5.0)
        assert grid.extent.y_max == pytest.approx(5.0)

    def test_unknown_selector(self):
        with pytest.raises(ValueError):
            environment_from_selector("noaa:cdom", fallback_seed=0)

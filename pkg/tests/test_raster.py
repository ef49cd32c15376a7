import io

import numpy as np
import pytest
from PIL import Image

from helpers import make_path_graph
from oracles import supersample_rasterize
from sdmapkit import raster
from sdmapkit.errors import DimensionMismatch, TooManyChannels
from sdmapkit.osm import HighwayClass, SdMapGraph


def one_channel_palette(width=0.5):
    return raster.ClassPalette({
        HighwayClass.RESIDENTIAL: raster.PaletteEntry(0, width,
                                                      (255, 255, 255)),
    })


class TestBevSpec:
    def test_default_grid(self):
        spec = raster.BevSpec()
        assert (spec.h_cells, spec.w_cells) == (200, 100)
        assert spec.cells_per_meter == 2.0

    def test_rejects_bad_resolution(self):
        with pytest.raises(DimensionMismatch):
            raster.BevSpec(resolution=0.0)

    def test_rejects_degenerate_range(self):
        with pytest.raises(DimensionMismatch):
            raster.BevSpec(x_range=(10.0, 10.0))


class TestRasterize:
    def test_empty_graph_gives_zero_canvas(self):
        g = SdMapGraph(nodes=[], edges=[])
        canvas = raster.rasterize(g)
        assert canvas.is_empty()
        assert not canvas.data.any()

    def test_horizontal_segment_one_row(self):
        # odd row count puts x=0 on a cell-center line
        spec = raster.BevSpec(x_range=(-25.25, 25.25),
                              y_range=(-25.0, 25.0), resolution=0.5)
        canvas = raster.rasterize(
            [([(0.0, -25.0), (0.0, 25.0)], HighwayClass.RESIDENTIAL)],
            spec, one_channel_palette(width=0.5))
        lit_rows = np.nonzero(canvas.data[:, :, 0].any(axis=1))[0]
        assert lit_rows.tolist() == [50]
        assert canvas.data[50, :, 0].all()

    def test_diagonal_matches_supersampling_oracle(self):
        spec = raster.BevSpec(resolution=0.5)
        pal = raster.default_palette()
        entry = pal.get(HighwayClass.RESIDENTIAL)
        canvas = raster.rasterize(
            [([(0.0, 0.0), (10.0, 10.0)], HighwayClass.RESIDENTIAL)],
            spec, pal)
        oracle = supersample_rasterize([((0.0, 0.0), (10.0, 10.0))], spec,
                                       entry.width, samples=4, threshold=0.5)
        assert np.array_equal(canvas.data[:, :, entry.channel] > 0, oracle)

    def test_determinism(self):
        g = make_path_graph([(0, 0), (10, 5), (20, -3)])
        c1 = raster.rasterize(g)
        c2 = raster.rasterize(g)
        assert np.array_equal(c1.data, c2.data)
        assert c1.data.tobytes() == c2.data.tobytes()

    def test_mirror_symmetry(self):
        spec = raster.BevSpec(resolution=0.5)
        pal = one_channel_palette(width=2.0)
        pts = [(0.0, 1.0), (10.0, 7.0), (20.0, 3.5)]
        mirrored = [(x, -y) for x, y in pts]
        c1 = raster.rasterize([(pts, HighwayClass.RESIDENTIAL)], spec, pal)
        c2 = raster.rasterize([(mirrored, HighwayClass.RESIDENTIAL)],
                              spec, pal)
        assert np.array_equal(c1.data[:, ::-1, :], c2.data)

    def test_monotone_adding_segments(self):
        spec = raster.BevSpec(resolution=0.5)
        pal = one_channel_palette(width=2.0)
        a = [([(0.0, 0.0), (10.0, 0.0)], HighwayClass.RESIDENTIAL)]
        b = a + [([(5.0, -5.0), (5.0, 5.0)], HighwayClass.RESIDENTIAL)]
        ca = raster.rasterize(a, spec, pal)
        cb = raster.rasterize(b, spec, pal)
        assert (cb.data >= ca.data).all()

    def test_out_of_canvas_geometry_skipped(self):
        spec = raster.BevSpec(resolution=0.5)
        pal = one_channel_palette(width=2.0)
        canvas = raster.rasterize(
            [([(100.0, 0.0), (200.0, 0.0)], HighwayClass.RESIDENTIAL)],
            spec, pal)
        assert canvas.is_empty()

    def test_no_writes_outside_grid(self):
        # geometry overlapping the border must not raise or wrap
        spec = raster.BevSpec(x_range=(-5.0, 5.0), y_range=(-5.0, 5.0),
                              resolution=0.5)
        pal = one_channel_palette(width=4.0)
        canvas = raster.rasterize(
            [([(-20.0, 0.0), (20.0, 0.0)], HighwayClass.RESIDENTIAL)],
            spec, pal)
        assert canvas.data.shape == (20, 20, 1)
        assert canvas.data.max() <= 1.0


class TestPng:
    def test_all_zero_canvas_black_image(self):
        spec = raster.BevSpec(x_range=(-5.0, 5.0), y_range=(-5.0, 5.0),
                              resolution=0.5)
        canvas = raster.BevCanvas(spec, np.zeros((20, 20, 3),
                                                 dtype=np.float32))
        img = Image.open(io.BytesIO(raster.canvas_to_png(canvas)))
        assert img.size == (20, 20)
        assert not np.array(img).any()

    def test_single_channel_grayscale(self):
        spec = raster.BevSpec(x_range=(-5.0, 5.0), y_range=(-5.0, 5.0),
                              resolution=0.5)
        data = np.zeros((20, 20, 1), dtype=np.float32)
        data[3, 4, 0] = 1.0
        canvas = raster.BevCanvas(spec, data)
        img = Image.open(io.BytesIO(raster.canvas_to_png(canvas)))
        assert img.mode == "L"
        arr = np.array(img)
        assert arr.max() == 255
        assert (arr > 0).sum() == 1

    def test_forward_is_up(self):
        spec = raster.BevSpec(x_range=(-5.0, 5.0), y_range=(-5.0, 5.0),
                              resolution=0.5)
        data = np.zeros((20, 20, 1), dtype=np.float32)
        data[19, 10, 0] = 1.0   # max forward cell
        canvas = raster.BevCanvas(spec, data)
        arr = np.array(Image.open(io.BytesIO(raster.canvas_to_png(canvas))))
        row, col = np.argwhere(arr > 0)[0]
        assert row == 0   # forward renders at the image top

    def test_golden_bytes_stable(self):
        g = make_path_graph([(0, 0), (10, 5), (20, -3)])
        canvas = raster.rasterize(g)
        assert raster.canvas_to_png(canvas) == raster.canvas_to_png(canvas)

    def test_too_many_channels(self):
        spec = raster.BevSpec(x_range=(-5.0, 5.0), y_range=(-5.0, 5.0),
                              resolution=0.5)
        canvas = raster.BevCanvas(spec, np.zeros((20, 20, 5),
                                                 dtype=np.float32))
        with pytest.raises(TooManyChannels):
            raster.canvas_to_png(canvas)


class TestPalette:
    def test_default_covers_all_classes(self):
        pal = raster.default_palette()
        for cls in HighwayClass:
            assert pal.get(cls) is not None
            assert pal.get(cls).width > 0

    def test_from_dict(self):
        pal = raster.palette_from_dict({"classes": {
            "residential": {"channel": 0, "width": 2.0,
                            "color": [200, 200, 200]}}})
        entry = pal.get(HighwayClass.RESIDENTIAL)
        assert entry.channel == 0
        assert entry.color == (200, 200, 200)
        assert pal.get(HighwayClass.MOTORWAY) is None

    def test_from_dict_rejects_unknown_class(self):
        with pytest.raises(DimensionMismatch):
            raster.palette_from_dict({"classes": {
                "footway": {"channel": 0, "width": 1.0}}})

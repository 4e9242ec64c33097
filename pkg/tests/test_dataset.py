import numpy as np
import pytest

from hdrdistort.blur import FrameStack
from hdrdistort.dataset import (
    PatchGeometry,
    SynthesisFailure,
    SynthesizedPair,
    VirtualSensorParams,
    export_patches,
    extract_patches,
    load_manifest,
    pack_distorted,
    read_index,
    stack_planes,
    synthesize_dataset,
    synthesize_item,
    unpack_distorted,
    unstack_planes,
    virtual_sensor,
    write_index,
)
from hdrdistort.errors import DuplicateSplit, MissingPath, ParseError, PatchTooLarge
from hdrdistort.fileio import read_pfm, write_pfm
from hdrdistort.imaging import ExposureLayout, SensorConfig


@pytest.fixture
def clip_dir(tmp_path, gen):
    d = tmp_path / "clips" / "c1"
    d.mkdir(parents=True)
    for k in range(10):
        write_pfm(d / f"f{k}.pfm", gen.random((8, 12, 3)).astype(np.float32))
    return d


def write_manifest(tmp_path, text):
    p = tmp_path / "m.txt"
    p.write_text(text)
    return p


class TestManifest:
    def test_parse(self, tmp_path, clip_dir):
        p = write_manifest(tmp_path, "# c\nseed 7\nconfig ratio 8\nconfig burst 2\nclip clips/c1 *.pfm 240\n")
        m = load_manifest(p)
        assert m.seed == 7
        assert m.config.exposure_ratio == 8 and m.config.burst_length == 2
        assert m.clips[0].directory == str(clip_dir)
        assert m.window_stride == 2

    @pytest.mark.parametrize(
        "text,line,field",
        [
            ("seed x\n", 1, "seed"),
            ("\nclip a b\n", 2, "clip"),
            ("config color red\n", 1, "color"),
            ("bogus 1\n", 1, "bogus"),
        ],
    )
    def test_parse_errors(self, tmp_path, text, line, field):
        with pytest.raises(ParseError) as info:
            load_manifest(write_manifest(tmp_path, text))
        assert (info.value.line, info.value.field) == (line, field)

    def test_missing(self, tmp_path):
        with pytest.raises(MissingPath):
            load_manifest(write_manifest(tmp_path, "clip nowhere *.pfm 240\n"))

    def test_duplicate_split(self, tmp_path):
        (tmp_path / "a.pgm").write_bytes(b"")
        with pytest.raises(DuplicateSplit):
            load_manifest(write_manifest(tmp_path, "split train a.pgm\nsplit test a.pgm\n"))


class TestVirtualSensor:
    def test_noiseless_quantizes(self):
        clean = np.full((2, 4, 1), 0.1)
        r = virtual_sensor(clean, VirtualSensorParams(ratio=4), seed=0)
        assert r.data[0, :, 0].tolist() == [410, 1638, 410, 1638]

    def test_clamps(self):
        r = virtual_sensor(np.full((2, 2, 1), 0.5), VirtualSensorParams(ratio=4), seed=0)
        assert np.all(r.data[:, 1] == 4095)
        r = virtual_sensor(np.full((64, 64, 1), 0.99), VirtualSensorParams(read_noise=400), seed=0)
        assert r.data.max() == 4095

    def test_variance(self):
        clean = np.full((300, 300, 1), 1000 / 4095)
        r = virtual_sensor(clean, VirtualSensorParams(gain=0.5, read_noise=10), seed=1)
        assert r.data.var() == pytest.approx(0.5 * 1000 + 10 + 1 / 12, rel=0.03)


def test_synthesize_item_shapes(gen):
    stack = FrameStack(gen.random((6, 4, 8, 3)) * 0.2)
    item = synthesize_item(stack, 1, SensorConfig(), None)
    assert item.clean.shape == item.distorted.shape == (4, 8, 3)
    assert np.array_equal(item.reference, stack.frames[4])
    assert np.array_equal(item.clean[:, 0::2], stack.frames[4][:, 0::2])


def test_synthesize_dataset_reports_failures(tmp_path, clip_dir):
    bad = tmp_path / "clips" / "bad"
    bad.mkdir()
    (bad / "f0.pfm").write_bytes(b"junk")
    p = write_manifest(tmp_path, "clip clips/c1 *.pfm 240\nclip clips/bad *.pfm 240\n")
    out = list(synthesize_dataset(load_manifest(p)))
    assert sum(isinstance(o, SynthesizedPair) for o in out) == 2  # t = 0, 4
    fails = [o for o in out if isinstance(o, SynthesisFailure)]
    assert len(fails) == 1 and fails[0].clip == "bad"


class TestPatches:
    def test_pack_planes(self):
        mosaic = np.zeros((2, 4, 3))
        mosaic[:, 1::2] = 1.0
        mosaic[0, 3, 0] = 0.5
        packed = pack_distorted(mosaic, ratio=4)
        assert packed.shape == (2, 2, 8)
        assert packed[:, :, 6].tolist() == [[1, 1], [1, 1]]
        assert np.all(packed[:, :, 7] == 0.25)
        low, high, mask, r = unpack_distorted(packed)
        assert r == 4 and low.shape == high.shape == (2, 2, 3)

    def test_extract_covers_and_aligns(self, gen):
        d, c = gen.random((20, 30, 3)), gen.random((20, 30, 3))
        ps = extract_patches(d, c, PatchGeometry(8, 8, 8))
        assert {p.y for p in ps} == {0, 8, 12}
        assert {p.x for p in ps} == {0, 8, 16, 22}
        for p in ps:
            assert np.array_equal(p.clean, c[p.y : p.y + 8, p.x : p.x + 8])

    def test_seeded_offsets_even(self, gen):
        d = gen.random((40, 40, 3))
        for seed in range(10):
            assert all(p.x % 2 == 0 for p in extract_patches(d, d, PatchGeometry(8, 8, 8), seed=seed))

    def test_too_large(self, gen):
        with pytest.raises(PatchTooLarge):
            extract_patches(gen.random((4, 4, 3)), gen.random((4, 4, 3)), PatchGeometry(8, 8, 8))

    def test_plane_stacking(self, gen):
        packed = gen.random((4, 3, 8))
        assert np.array_equal(unstack_planes(stack_planes(packed)), packed)

    def test_export_and_index(self, tmp_path, gen):
        d = gen.random((8, 8, 3)).astype(np.float32).astype(np.float64)
        ps = extract_patches(d, d, PatchGeometry(8, 8, 8), clip="c", t=3)
        lines = export_patches(ps, tmp_path / "out")
        write_index(tmp_path / "index.txt", lines)
        rows = read_index(tmp_path / "index.txt")
        assert rows[0][2:] == (0, 0, "c", 3)
        back = unstack_planes(read_pfm(tmp_path / "out" / rows[0][0]))
        assert np.allclose(back, ps[0].distorted, atol=1e-7)

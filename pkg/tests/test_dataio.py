import struct

import numpy as np
import pytest

from muellerkit import (
    BadHeaderError,
    BadMagicError,
    MissingPlaneError,
    MuellerCube,
    PlaneKind,
    TruncatedError,
    decompose_cube,
    map_plane_path,
    plane_to_png,
    read_cube,
    read_maps,
    read_plane,
    validate_file,
    write_cube,
    write_maps,
    write_plane,
)
from muellerkit import synth


class TestCubeRoundTrip:
    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_bitwise(self, tmp_path, dtype):
        cube = synth.random_physical_cube(5, 7, seed=2, dtype=dtype)
        p = tmp_path / "c.mmc"
        write_cube(cube, p)
        back = read_cube(p)
        assert back.data.dtype == np.dtype(dtype)
        assert back.data.tobytes() == cube.data.tobytes()
        assert back.wavelengths == [float(np.float32(v)) for v in cube.wavelengths]
        assert not back.normalized
        assert back.m00_plane is None
        assert back.mask is None

    def test_with_m00_and_normalized(self, tmp_path):
        from muellerkit import normalize_cube

        cube = synth.identity_cube(3, 4)
        cube.data *= 2.5
        cube = normalize_cube(cube)
        p = tmp_path / "c.mmc"
        write_cube(cube, p)
        back = read_cube(p)
        assert back.normalized
        assert back.m00_plane.tobytes() == cube.m00_plane.tobytes()

    def test_with_mask(self, tmp_path):
        from muellerkit import apply_mask

        cube = apply_mask(synth.identity_cube(2, 2), "ul3x3")
        p = tmp_path / "c.mmc"
        write_cube(cube, p)
        back = read_cube(p)
        assert back.mask is not None
        assert back.mask.bits == 0x0777
        assert back.data.tobytes() == cube.data.tobytes()

    def test_multi_wavelength(self, tmp_path):
        cube = synth.identity_cube(2, 2, wavelengths=[450.0, 550.0, 650.0])
        p = tmp_path / "c.mmc"
        write_cube(cube, p)
        assert read_cube(p).wavelengths == [450.0, 550.0, 650.0]

    def test_wavelength_f32_collision_rejected(self, tmp_path):
        # distinct in f64 but identical after f32 rounding
        cube = synth.identity_cube(1, 1, wavelengths=[550.0, 550.0 + 1e-9])
        with pytest.raises(BadHeaderError):
            write_cube(cube, tmp_path / "c.mmc")

    def test_golden_bytes(self, tmp_path):
        data = np.arange(16, dtype=np.float32).reshape(1, 1, 1, 4, 4)
        data[0, 0, 0, 0, 0] = 1.0
        cube = MuellerCube(data=data, wavelengths=[550.0])
        p = tmp_path / "c.mmc"
        write_cube(cube, p)
        raw = p.read_bytes()
        assert len(raw) == 28 + 4 + 64
        assert raw[:28] == struct.pack("<4sIIIIII", b"MMC1", 1, 1, 1, 1, 0, 0)
        assert raw[28:32] == struct.pack("<f", 550.0)
        assert raw[32:] == data.tobytes()


class TestCubeErrors:
    def write_good(self, tmp_path):
        p = tmp_path / "c.mmc"
        write_cube(synth.identity_cube(2, 2), p)
        return p

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.mmc"
        p.write_bytes(b"JUNK" + b"\0" * 100)
        with pytest.raises(BadMagicError):
            read_cube(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "x.mmc"
        p.write_bytes(b"")
        with pytest.raises(BadMagicError):
            read_cube(p)

    def test_header_cut_short(self, tmp_path):
        p = tmp_path / "x.mmc"
        p.write_bytes(b"MMC1\x01\x00")
        with pytest.raises(TruncatedError):
            read_cube(p)

    def test_truncated_data(self, tmp_path):
        p = self.write_good(tmp_path)
        raw = p.read_bytes()
        p.write_bytes(raw[:-7])
        with pytest.raises(TruncatedError):
            read_cube(p)

    def test_trailing_garbage(self, tmp_path):
        p = self.write_good(tmp_path)
        p.write_bytes(p.read_bytes() + b"extra")
        with pytest.raises(TruncatedError):
            read_cube(p)

    def test_bad_version(self, tmp_path):
        p = self.write_good(tmp_path)
        raw = bytearray(p.read_bytes())
        raw[4] = 99
        p.write_bytes(bytes(raw))
        with pytest.raises(BadHeaderError):
            read_cube(p)

    def test_bad_dtype_code(self, tmp_path):
        p = self.write_good(tmp_path)
        raw = bytearray(p.read_bytes())
        raw[20] = 7  # dtype field
        p.write_bytes(bytes(raw))
        with pytest.raises(BadHeaderError):
            read_cube(p)

    def test_zero_dimension(self, tmp_path):
        p = self.write_good(tmp_path)
        raw = bytearray(p.read_bytes())
        raw[8:12] = struct.pack("<I", 0)  # height
        p.write_bytes(bytes(raw))
        with pytest.raises(BadHeaderError):
            read_cube(p)

    def test_unknown_flags(self, tmp_path):
        p = self.write_good(tmp_path)
        raw = bytearray(p.read_bytes())
        raw[24] |= 0x80
        p.write_bytes(bytes(raw))
        with pytest.raises(BadHeaderError):
            read_cube(p)

    def test_wavelengths_out_of_order(self, tmp_path):
        cube = synth.identity_cube(1, 1, wavelengths=[500.0, 600.0])
        p = tmp_path / "c.mmc"
        write_cube(cube, p)
        raw = bytearray(p.read_bytes())
        lam = raw[28:36]
        raw[28:32], raw[32:36] = lam[4:], lam[:4]
        p.write_bytes(bytes(raw))
        with pytest.raises(Exception) as exc:
            read_cube(p)
        from muellerkit import MuellerKitError

        assert isinstance(exc.value, MuellerKitError)


class TestPlaneRoundTrip:
    @pytest.mark.parametrize(
        "dtype,kind",
        [
            (np.float32, PlaneKind.DEPOLARIZATION),
            (np.float64, PlaneKind.RETARDANCE),
            (np.uint8, PlaneKind.STATUS),
        ],
    )
    def test_bitwise(self, tmp_path, dtype, kind, rng):
        if np.dtype(dtype).kind == "f":
            plane = rng.standard_normal((5, 3)).astype(dtype)
        else:
            plane = rng.integers(0, 4, (5, 3)).astype(dtype)
        p = tmp_path / "p.mmp"
        write_plane(plane, kind, 550.0, p)
        back, back_kind, lam = read_plane(p)
        assert back.tobytes() == plane.tobytes()
        assert back.dtype == np.dtype(dtype)
        assert back_kind == kind
        assert lam == 550.0

    def test_golden_bytes(self, tmp_path):
        plane = np.array([[1.0, 2.0]], dtype=np.float32)
        p = tmp_path / "p.mmp"
        write_plane(plane, PlaneKind.DIATTENUATION, 550.0, p)
        raw = p.read_bytes()
        assert len(raw) == 32 + 8
        assert raw[:32] == struct.pack(
            "<4sIIIIIfI", b"MMP1", 1, 1, 2, 2, 0, 550.0, 0
        )
        assert raw[32:] == plane.tobytes()

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "p.mmp"
        p.write_bytes(b"NOPE" + b"\0" * 40)
        with pytest.raises(BadMagicError):
            read_plane(p)

    def test_size_mismatch(self, tmp_path):
        p = tmp_path / "p.mmp"
        write_plane(np.zeros((2, 2), dtype=np.float32), PlaneKind.M00, 550.0, p)
        p.write_bytes(p.read_bytes()[:-1])
        with pytest.raises(TruncatedError):
            read_plane(p)

    def test_reserved_must_be_zero(self, tmp_path):
        p = tmp_path / "p.mmp"
        write_plane(np.zeros((1, 1), dtype=np.float32), PlaneKind.M00, 550.0, p)
        raw = bytearray(p.read_bytes())
        raw[28] = 1  # reserved field
        p.write_bytes(bytes(raw))
        with pytest.raises(BadHeaderError):
            read_plane(p)

    def test_bad_kind(self, tmp_path):
        p = tmp_path / "p.mmp"
        write_plane(np.zeros((1, 1), dtype=np.float32), PlaneKind.M00, 550.0, p)
        raw = bytearray(p.read_bytes())
        raw[16] = 42  # kind field
        p.write_bytes(bytes(raw))
        with pytest.raises(BadHeaderError):
            read_plane(p)

    def test_non_storable_dtype(self, tmp_path):
        with pytest.raises(BadHeaderError):
            write_plane(
                np.zeros((1, 1), dtype=np.int64), PlaneKind.M00, 550.0,
                tmp_path / "p.mmp",
            )


class TestMapsDirectory:
    def test_round_trip(self, tmp_path, small_physical_cube):
        maps = decompose_cube(small_physical_cube)
        paths = write_maps(maps, tmp_path)
        # four planes per wavelength
        assert len(paths) == 4 * len(maps.wavelengths)
        back = read_maps(tmp_path)
        assert back.wavelengths == [float(np.float32(v)) for v in maps.wavelengths]
        assert back.depolarization.tobytes() == maps.depolarization.tobytes()
        assert back.retardance.tobytes() == maps.retardance.tobytes()
        assert back.diattenuation.tobytes() == maps.diattenuation.tobytes()
        assert back.status.tobytes() == maps.status.tobytes()

    def test_filenames(self, tmp_path, small_physical_cube):
        maps = decompose_cube(small_physical_cube)
        write_maps(maps, tmp_path)
        names = sorted(f.name for f in tmp_path.iterdir())
        assert names == [
            "delta_500.mmp",
            "delta_600.mmp",
            "diat_500.mmp",
            "diat_600.mmp",
            "ret_500.mmp",
            "ret_600.mmp",
            "status_500.mmp",
            "status_600.mmp",
        ]

    def test_map_plane_path_g_format(self, tmp_path):
        assert map_plane_path(tmp_path, PlaneKind.RETARDANCE, 550.5).name == "ret_550.5.mmp"
        assert map_plane_path(tmp_path, PlaneKind.DEPOLARIZATION, 550.0).name == "delta_550.mmp"

    def test_missing_plane(self, tmp_path, small_physical_cube):
        maps = decompose_cube(small_physical_cube)
        write_maps(maps, tmp_path)
        map_plane_path(tmp_path, PlaneKind.RETARDANCE, 600.0).unlink()
        with pytest.raises(MissingPlaneError):
            read_maps(tmp_path)

    def test_empty_dir(self, tmp_path):
        with pytest.raises(MissingPlaneError):
            read_maps(tmp_path)

    def test_extra_kinds_ignored(self, tmp_path, small_physical_cube):
        maps = decompose_cube(small_physical_cube)
        write_maps(maps, tmp_path)
        write_plane(
            np.zeros((6, 5), dtype=np.float32), PlaneKind.M00, 500.0,
            tmp_path / "m00_500.mmp",
        )
        back = read_maps(tmp_path)
        assert back.depolarization.shape == (2, 6, 5)


class TestValidateFile:
    def test_clean_cube(self, tmp_path, small_physical_cube):
        p = tmp_path / "c.mmc"
        write_cube(small_physical_cube, p)
        rep = validate_file(p)
        assert rep.clean
        assert rep.kind == "cube"
        assert rep.fraction_physical == 1.0
        assert rep.nan_count == 0
        assert rep.n_pixels == 60

    def test_unphysical_cube(self, tmp_path):
        p = tmp_path / "c.mmc"
        write_cube(synth.unphysical_tile_cube(4, 4), p)
        rep = validate_file(p)
        assert not rep.clean
        assert rep.fraction_physical == 0.5
        assert any("unphysical" in s for s in rep.issues)
        assert rep.min_eigenvalue == pytest.approx(-0.425, abs=1e-12)

    def test_nan_cube(self, tmp_path):
        cube = synth.identity_cube(2, 2)
        cube.data[0, 0, 0, 1, 1] = np.nan
        p = tmp_path / "c.mmc"
        write_cube(cube, p)
        rep = validate_file(p)
        assert not rep.clean
        assert rep.nan_count == 1

    def test_masked_cube_reported(self, tmp_path):
        from muellerkit import apply_mask

        p = tmp_path / "c.mmc"
        write_cube(apply_mask(synth.identity_cube(2, 2), "ul3x3"), p)
        rep = validate_file(p)
        assert rep.mask_bits == 0x0777
        assert any("mask" in s for s in rep.issues)

    def test_plane_report(self, tmp_path):
        p = tmp_path / "p.mmp"
        write_plane(
            np.array([[0.5, np.nan]], dtype=np.float64),
            PlaneKind.DEPOLARIZATION, 550.0, p,
        )
        rep = validate_file(p)
        assert rep.kind == "plane:depolarization"
        assert rep.nan_count == 1
        assert not rep.clean

    def test_tolerance_forwarded(self, tmp_path):
        # min coherency eigenvalue -5e-10: inside the default tolerance
        m = np.diag([1.0, 1.0 - 1e-9, 1.0 - 1e-9, 1.0 - 4e-9])
        cube = MuellerCube(
            data=np.broadcast_to(m, (1, 1, 1, 4, 4)).copy(), wavelengths=[550.0]
        )
        p = tmp_path / "c.mmc"
        write_cube(cube, p)
        assert validate_file(p).clean
        assert not validate_file(p, tol_phys=1e-12).clean


def test_plane_to_png(tmp_path):
    from PIL import Image

    plane = np.array([[0.0, 1.0], [np.nan, 0.5]])
    p = tmp_path / "x.png"
    plane_to_png(plane, p)
    img = Image.open(p)
    assert img.mode == "L"
    assert img.size == (2, 2)
    px = np.asarray(img)
    assert px[0, 0] == 0 and px[0, 1] == 255

import numpy as np
import pytest

from wheeldr import io
from wheeldr.evaluate import ErrorSeries
from wheeldr.io import ConfigError, ParseError


def test_imu_csv_round_trip(tmp_path, rng):
    path = str(tmp_path / "imu.csv")
    times = np.arange(1, 11) * 0.005
    gyro = rng.standard_normal((10, 3))
    accel = rng.standard_normal((10, 3))
    io.write_imu_csv(path, times, gyro, accel)
    t2, g2, a2 = io.read_imu_csv(path)
    assert np.allclose(t2, times, rtol=1e-8)
    assert np.allclose(g2, gyro, rtol=1e-8)
    assert np.allclose(a2, accel, rtol=1e-8)


def test_pose_csv_round_trip(tmp_path, rng):
    path = str(tmp_path / "pose.csv")
    times = np.arange(5, dtype=float)
    pos = rng.standard_normal((5, 3))
    vel = rng.standard_normal((5, 3))
    euler = rng.standard_normal((5, 3))
    io.write_pose_csv(path, times, pos, vel, euler)
    ps = io.read_pose_csv(path)
    assert len(ps) == 5
    assert np.allclose(ps.pos, pos, rtol=1e-8)
    assert np.allclose(ps.euler, euler, rtol=1e-8)


def test_series_csv(tmp_path):
    path = str(tmp_path / "series.csv")
    s = ErrorSeries(
        times=np.array([0.0, 1.0]),
        north=np.array([0.1, 0.2]),
        east=np.array([0.0, -0.1]),
        down=np.array([0.0, 0.0]),
        heading=np.array([0.01, 0.02]),
        distance=np.array([0.0, 2.0]),
    )
    io.write_series_csv(path, s)
    lines = open(path).read().splitlines()
    assert lines[0] == io.SERIES_HEADER
    assert len(lines) == 3
    assert lines[1].startswith("0,0.1,0,")


def test_write_is_byte_deterministic(tmp_path, rng):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    times = np.arange(20) * 0.1
    data = rng.standard_normal((20, 3))
    io.write_imu_csv(a, times, data, data)
    io.write_imu_csv(b, times, data, data)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_no_tmp_file_left(tmp_path):
    path = str(tmp_path / "out.csv")
    io.write_imu_csv(path, np.array([1.0]), np.zeros((1, 3)), np.zeros((1, 3)))
    assert not (tmp_path / "out.csv.tmp").exists()


def test_parse_error_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("wrong,header\n1,2\n")
    with pytest.raises(ParseError) as e:
        io.read_imu_csv(str(p))
    assert e.value.line == 1


def test_parse_error_field_count(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(io.IMU_HEADER + "\n1,2,3\n")
    with pytest.raises(ParseError) as e:
        io.read_imu_csv(str(p))
    assert e.value.line == 2


def test_parse_error_bad_number(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(io.IMU_HEADER + "\n1,2,x,4,5,6,7\n")
    with pytest.raises(ParseError) as e:
        io.read_imu_csv(str(p))
    assert e.value.line == 2
    assert e.value.column == 3


def test_parse_error_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text(io.IMU_HEADER + "\n")
    with pytest.raises(ParseError):
        io.read_imu_csv(str(p))


def test_read_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nmodel = velocity\n\nseed=3\n")
    entries = io.read_config_file(str(p))
    assert entries == {"model": "velocity", "seed": "3"}


def test_read_config_file_errors(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("novalue\n")
    with pytest.raises(ConfigError):
        io.read_config_file(str(p))
    p.write_text("a=1\na=2\n")
    with pytest.raises(ConfigError):
        io.read_config_file(str(p))

import json

import numpy as np
import pytest

from soco import (
    AttributionMap,
    DataError,
    Dataset,
    EvalCurve,
    TrialSummary,
    emit_plot_data,
    read_curve,
    read_dataset,
    read_maps,
    write_curve,
    write_dataset,
    write_maps,
)
from soco.io import MAGIC, canonical_json, config_digest, dataset_digest


@pytest.fixture
def disk_dataset(rng):
    feats = rng.standard_normal((6, 9)).astype(np.float32).astype(np.float64)
    labels = rng.integers(0, 3, size=6)
    return Dataset.from_arrays(feats, labels, n_classes=3)


@pytest.fixture
def grid_dataset(rng):
    feats = rng.standard_normal((4, 3, 5, 2)).astype(np.float32).astype(np.float64)
    labels = rng.integers(0, 2, size=4)
    return Dataset.from_arrays(feats, labels, n_classes=2)


def maps_for(dataset, rng):
    out = []
    for _ in dataset.samples:
        raw = rng.random(dataset.feature_shape).astype(np.float32)
        raw.flat[0] = 1.0
        out.append(AttributionMap(raw.astype(np.float64), normalized=True))
    return out


# -- dataset containers --------------------------------------------------------


@pytest.mark.parametrize("format", ["binary", "json"])
def test_dataset_round_trip(tmp_path, disk_dataset, format):
    path = tmp_path / "data.soco"
    write_dataset(disk_dataset, path, format=format)
    loaded = read_dataset(path)
    np.testing.assert_array_equal(
        loaded.feature_matrix(), disk_dataset.feature_matrix()
    )
    np.testing.assert_array_equal(loaded.labels(), disk_dataset.labels())
    assert loaded.n_classes == disk_dataset.n_classes
    assert [s.sample_id for s in loaded.samples] == [
        s.sample_id for s in disk_dataset.samples
    ]


def test_grid_dataset_round_trip(tmp_path, grid_dataset):
    path = tmp_path / "grids.soco"
    write_dataset(grid_dataset, path)
    loaded = read_dataset(path)
    assert loaded.feature_shape == (3, 5, 2)
    np.testing.assert_array_equal(
        loaded.feature_matrix(), grid_dataset.feature_matrix()
    )


def test_round_trip_is_exact_from_second_write(tmp_path, rng):
    # first write quantizes doubles to f32; rewriting the loaded copy is exact
    feats = rng.standard_normal((5, 4))
    ds = Dataset.from_arrays(feats, np.zeros(5, dtype=int), n_classes=2)
    first = tmp_path / "a.soco"
    second = tmp_path / "b.soco"
    write_dataset(ds, first)
    loaded = read_dataset(first)
    write_dataset(loaded, second)
    assert first.read_bytes() == second.read_bytes()
    np.testing.assert_array_equal(
        read_dataset(second).feature_matrix(), loaded.feature_matrix()
    )


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.soco"
    path.write_bytes(b"\x89PNG----not a container")
    with pytest.raises(DataError, match="bad magic"):
        read_dataset(path)


def test_unsupported_version(tmp_path, disk_dataset):
    path = tmp_path / "data.soco"
    write_dataset(disk_dataset, path)
    blob = bytearray(path.read_bytes())
    blob[4:6] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(blob))
    with pytest.raises(DataError, match="version 99"):
        read_dataset(path)


def test_truncated_payload(tmp_path, disk_dataset):
    path = tmp_path / "data.soco"
    write_dataset(disk_dataset, path)
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(DataError, match="truncated payload"):
        read_dataset(path)


def test_kind_mismatch(tmp_path, disk_dataset, rng):
    path = tmp_path / "maps.soco"
    write_maps(maps_for(disk_dataset, rng), path, dataset=disk_dataset)
    with pytest.raises(DataError, match="kind 2"):
        read_dataset(path)


# -- map containers --------------------------------------------------------------


@pytest.mark.parametrize("format", ["binary", "json"])
def test_maps_round_trip(tmp_path, disk_dataset, rng, format):
    maps = maps_for(disk_dataset, rng)
    path = tmp_path / "maps.soco"
    write_maps(maps, path, dataset=disk_dataset, format=format)
    loaded = read_maps(path, dataset=disk_dataset)
    assert len(loaded) == len(maps)
    for a, b in zip(loaded, maps):
        np.testing.assert_array_equal(a.values, b.values)


def test_maps_digest_mismatch(tmp_path, disk_dataset, rng):
    maps = maps_for(disk_dataset, rng)
    path = tmp_path / "maps.soco"
    write_maps(maps, path, dataset=disk_dataset)
    other = Dataset.from_arrays(
        disk_dataset.feature_matrix() + 1.0, disk_dataset.labels(), n_classes=3
    )
    with pytest.raises(DataError, match="different dataset"):
        read_maps(path, dataset=other)


def test_maps_count_mismatch(tmp_path, disk_dataset, rng):
    maps = maps_for(disk_dataset, rng)
    path = tmp_path / "maps.soco"
    write_maps(maps[:4], path)
    with pytest.raises(DataError, match="4 maps for 6 samples"):
        read_maps(path, dataset=disk_dataset)


def test_maps_without_dataset_skip_alignment(tmp_path, disk_dataset, rng):
    maps = maps_for(disk_dataset, rng)
    path = tmp_path / "maps.soco"
    write_maps(maps, path)  # no digest recorded
    loaded = read_maps(path)
    assert len(loaded) == 6


def test_maps_refuse_empty(tmp_path):
    with pytest.raises(DataError, match="no maps"):
        write_maps([], tmp_path / "empty.soco")


# -- digests -----------------------------------------------------------------------


def test_dataset_digest_tracks_content(disk_dataset):
    same = Dataset.from_arrays(
        disk_dataset.feature_matrix(), disk_dataset.labels(), n_classes=3
    )
    assert dataset_digest(same) == dataset_digest(disk_dataset)
    moved = Dataset.from_arrays(
        disk_dataset.feature_matrix() * 2.0, disk_dataset.labels(), n_classes=3
    )
    assert dataset_digest(moved) != dataset_digest(disk_dataset)


def test_digest_survives_container_round_trip(tmp_path, disk_dataset):
    path = tmp_path / "data.soco"
    write_dataset(disk_dataset, path)
    assert dataset_digest(read_dataset(path)) == dataset_digest(disk_dataset)


def test_config_digest_is_order_insensitive_but_value_sensitive():
    a = config_digest({"x": 1, "y": [1, 2]})
    b = config_digest({"y": [1, 2], "x": 1})
    c = config_digest({"x": 2, "y": [1, 2]})
    assert a == b
    assert a != c


def test_canonical_json_is_compact_and_sorted():
    assert canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'


# -- curves ------------------------------------------------------------------------


def test_curve_round_trip(tmp_path):
    curve = EvalCurve(
        "soundness",
        "accuracy_level",
        ((0.5, 0.25), (1.0, 1.0)),
        config_digest="abc123",
        meta={"epsilon": 0.01, "skipped": 0},
    )
    path = tmp_path / "c.curve.json"
    write_curve(curve, path)
    loaded = read_curve(path)
    assert loaded.points == curve.points
    assert loaded.metric_kind == "soundness"
    assert loaded.config_digest == "abc123"
    assert loaded.meta["epsilon"] == 0.01


def test_curve_rejects_non_json(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(MAGIC + b"\x00" * 16)
    with pytest.raises(DataError, match="not a curve file"):
        read_curve(path)


def test_curve_missing_field(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"metric_kind": "deletion", "points": []}))
    with pytest.raises(DataError, match="missing field"):
        read_curve(path)


# -- plot emission -------------------------------------------------------------------


def test_emit_curve_csv(tmp_path):
    curve = EvalCurve("deletion", "masked_fraction", ((0.0, 1.0), (0.5, 0.25)))
    path = tmp_path / "plot.csv"
    emit_plot_data(curve, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "masked_fraction,deletion:accuracy"
    assert lines[1] == "0.0,1.0"
    assert lines[2] == "0.5,0.25"


def test_emit_summary_json(tmp_path):
    summary = TrialSummary(
        x_grid=np.array([0.1, 0.9]),
        mean=np.array([0.5, 0.25]),
        std=np.array([0.0, np.nan]),
        counts=np.array([3, 1]),
        n_trials=3,
    )
    path = tmp_path / "plot.json"
    emit_plot_data(summary, path, format="json")
    payload = json.loads(path.read_text())
    assert payload["columns"] == ["x", "mean", "std", "n_trials"]
    assert payload["rows"][0] == [0.1, 0.5, 0.0, 3]
    assert payload["rows"][1] == [0.9, 0.25, None, 1]


def test_emit_rejects_unknown_sources_and_formats(tmp_path):
    curve = EvalCurve("deletion", "masked_fraction", ((0.0, 1.0), (1.0, 0.0)))
    with pytest.raises(DataError, match="unknown format"):
        emit_plot_data(curve, tmp_path / "x", format="xml")
    with pytest.raises(DataError, match="cannot emit"):
        emit_plot_data({"not": "a curve"}, tmp_path / "y")


# -- atomicity ------------------------------------------------------------------------


def test_writes_leave_no_temp_files(tmp_path, disk_dataset):
    write_dataset(disk_dataset, tmp_path / "data.soco")
    write_dataset(disk_dataset, tmp_path / "data.soco")  # overwrite in place
    assert sorted(p.name for p in tmp_path.iterdir()) == ["data.soco"]

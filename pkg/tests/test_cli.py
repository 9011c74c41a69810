import hashlib
import json
from datetime import date
from pathlib import Path

import pytest

from gantryflow.cli import main
from gantryflow.cubeio import read_cube_json
from gantryflow.synth import GenConfig, config_to_json_dict
from gantryflow.views import best_departure
from gantryflow.model import Weekday


def write_config(tmp_path, **overrides) -> Path:
    cfg = GenConfig(
        seed=77,
        date_from=date(2018, 9, 3),
        date_to=date(2018, 9, 4),
        hourly_rates={"NF03-S": tuple(20.0 if h in (8, 16) else 1.0 for h in range(24))},
        vehicle_mix={31: 0.9, 5: 0.1},
        travel_time=tuple((14.0, 0.1) for _ in range(24)),
    )
    if overrides:
        cfg = GenConfig(**{**config_kwargs(cfg), **overrides})
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(config_to_json_dict(cfg)), encoding="utf-8")
    return path


def config_kwargs(cfg: GenConfig) -> dict:
    return dict(
        seed=cfg.seed, date_from=cfg.date_from, date_to=cfg.date_to,
        hourly_rates=cfg.hourly_rates, vehicle_mix=cfg.vehicle_mix,
        travel_time=cfg.travel_time, weekday_factors=cfg.weekday_factors,
        malformed_fraction=cfg.malformed_fraction,
        incomplete_fraction=cfg.incomplete_fraction,
        travel_cap_seconds=cfg.travel_cap_seconds,
    )


def sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_gen_zero_rates(tmp_path, capsys):
    cfg = write_config(tmp_path, hourly_rates={"NF03-S": (0.0,) * 24})
    rc = main(["gen", "--config", str(cfg), "--out", str(tmp_path / "ds")])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["complete_trips"] == 0
    assert Path(out["manifest"]).is_file()
    assert Path(out["truth"]).is_file()


def test_gen_same_seed_identical_digests(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "d1")]) == 0
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "d2")]) == 0
    d1 = sorted((tmp_path / "d1").glob("trips-*.log"))
    d2 = sorted((tmp_path / "d2").glob("trips-*.log"))
    assert [sha(p) for p in d1] == [sha(p) for p in d2]


def test_gen_september_profile_thirty_daily_files(tmp_path, capsys):
    rc = main(["gen", "--config", "september-2018", "--out", str(tmp_path / "sept"),
               "--seed", "3"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["files"] == 30
    assert len(list((tmp_path / "sept").glob("trips-2018-09-*.log"))) == 30


def test_gen_bad_config_path(tmp_path):
    rc = main(["gen", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)])
    assert rc == 2


@pytest.fixture()
def generated(tmp_path, capsys):
    cfg = write_config(tmp_path)
    main(["gen", "--config", str(cfg), "--out", str(tmp_path / "ds")])
    capsys.readouterr()
    return tmp_path / "ds" / "manifest.json"


def test_extract_workers_invariant(generated, tmp_path, capsys):
    for workers, out in (("1", "w1.json"), ("8", "w8.json")):
        rc = main([
            "extract", "--dataset", str(generated), "--corridor", "NF03-S",
            "--from", "2018-09-03", "--to", "2018-09-04",
            "--workers", workers, "--out", str(tmp_path / out),
        ])
        assert rc == 0
    assert sha(tmp_path / "w1.json") == sha(tmp_path / "w8.json")
    err = capsys.readouterr().err
    assert "records_ok=" in err


def test_extract_matches_truth(generated, tmp_path):
    rc = main([
        "extract", "--dataset", str(generated), "--corridor", "NF03-S",
        "--from", "2018-09-03", "--to", "2018-09-04",
        "--out", str(tmp_path / "cube.json"),
    ])
    assert rc == 0
    assert sha(tmp_path / "cube.json") == sha(generated.parent / "truth.cube.json")


def test_extract_unknown_corridor(generated, tmp_path, capsys):
    rc = main(["extract", "--dataset", str(generated), "--corridor", "NF09-N",
               "--out", str(tmp_path / "c.json")])
    assert rc == 1
    assert "unknown corridor" in capsys.readouterr().err


def test_extract_missing_dataset(tmp_path):
    rc = main(["extract", "--dataset", str(tmp_path / "none.json"),
               "--corridor", "NF03-S", "--out", str(tmp_path / "c.json")])
    assert rc == 2


def test_extract_empty_dataset_valid_cube(tmp_path, capsys):
    cfg = write_config(tmp_path, hourly_rates={"NF03-S": (0.0,) * 24})
    main(["gen", "--config", str(cfg), "--out", str(tmp_path / "empty")])
    capsys.readouterr()
    rc = main(["extract", "--dataset", str(tmp_path / "empty" / "manifest.json"),
               "--corridor", "NF03-S", "--out", str(tmp_path / "cube.json")])
    assert rc == 0
    cube = read_cube_json(tmp_path / "cube.json")
    assert cube.cells == {}


@pytest.fixture()
def cube_path(generated, tmp_path, capsys):
    out = tmp_path / "cube.json"
    main(["extract", "--dataset", str(generated), "--corridor", "NF03-S",
          "--out", str(out)])
    capsys.readouterr()
    return out


def test_stats_hourly_json(cube_path, capsys):
    rc = main(["stats", "--cube", str(cube_path), "--view", "hourly",
               "--corridor", "NF03-S"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["counts"]) == 24


def test_stats_best_departure_equals_library(cube_path, capsys):
    rc = main(["stats", "--cube", str(cube_path), "--view", "best_departure",
               "--corridor", "NF03-S", "--weekday", "Mon", "--window", "6-20"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    cube = read_cube_json(cube_path)
    hour, minutes = best_departure(cube, "NF03-S", Weekday.MON, range(6, 21))
    assert (payload["hour"], payload["minutes"]) == (hour, minutes)


def test_stats_heatmap_csv(cube_path, capsys):
    rc = main(["stats", "--cube", str(cube_path), "--view", "heatmap",
               "--corridor", "NF03-S", "--format", "csv"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 8
    assert lines[0].startswith("weekday,0,1,")


def test_stats_byte_stable(cube_path, capsys):
    main(["stats", "--cube", str(cube_path), "--view", "hourly", "--corridor", "NF03-S"])
    first = capsys.readouterr().out
    main(["stats", "--cube", str(cube_path), "--view", "hourly", "--corridor", "NF03-S"])
    assert capsys.readouterr().out == first


def test_stats_bad_view(cube_path, capsys):
    rc = main(["stats", "--cube", str(cube_path), "--view", "nosuch",
               "--corridor", "NF03-S"])
    assert rc == 1
    assert "unknown view" in capsys.readouterr().err


def test_stats_requires_corridor(cube_path):
    assert main(["stats", "--cube", str(cube_path), "--view", "hourly"]) == 1


def test_usage_error_exit_code():
    assert main(["extract", "--nope"]) == 1
    assert main(["nosuchcommand"]) == 1


def test_serve_bad_listen(tmp_path):
    assert main(["serve", "--listen", "nocolon", "--data", str(tmp_path)]) == 1

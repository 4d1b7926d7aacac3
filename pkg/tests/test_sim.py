import csv

import numpy as np
import pytest

from vrcache.catalog import SvcId
from vrcache.cli import main
from vrcache.sim.config import SimConfig, dump_config, parse_config
from vrcache.sim.engine import HeadsetBuffer, buffer_admit, prepare, run

SMALL = SimConfig().with_values(video__segments=3, users__count=3, sched__policy="URF")


def small_wi(**kw):
    return SMALL.with_values(sched__policy="wi", sched__train_passes=1, sched__hidden="16", **kw)


# --- configuration ----------------------------------------------------------------------


def test_config_round_trip():
    cfg = SMALL.with_values(delay__chi=2e-7, quality__adaptive=True, sched__hidden="32,8")
    assert parse_config(dump_config(cfg)) == cfg
    assert parse_config("") == SimConfig()


@pytest.mark.parametrize("text,match", [
    ("video.nope = 3", "line 1: unknown key"),
    ("\n# comment\nbogus.x = 1", "line 3: unknown section"),
    ("users.count", "line 1: expected key=value"),
    ("quality.adaptive = maybe", "expected a boolean"),
    ("delay.chi = nan", "NaN"),
])
def test_config_rejects_bad_lines(text, match):
    with pytest.raises(ValueError, match=match):
        parse_config(text)


@pytest.mark.parametrize("override", [
    dict(users__count=0), dict(users__move_prob=0.3), dict(cache__method="magic"),
    dict(cache__partition="even"), dict(sched__policy="LRU"), dict(run__slots=10**9),
    dict(video__x0=2), dict(quality__miss_threshold=2.0),
])
def test_config_validate(override):
    with pytest.raises(ValueError):
        SMALL.with_values(**override).validate()


# --- headset buffer ---------------------------------------------------------------------


def test_buffer_admit_and_eviction():
    world = prepare(SMALL.with_values(cache__method="none"))
    cat = world.catalog
    buf = HeadsetBuffer((cat.grid.rows, cat.grid.cols))
    f0, f1 = SvcId(2, 3, 0), SvcId(2, 4, 1)
    buffer_admit(buf, f0, cat, playing_segment=0)
    buffer_admit(buf, f1, cat, playing_segment=0)
    assert len(buf) == 2
    for t in cat.render_tiles(f0.tile):
        assert buf.renders(*t, 0)
    assert not buf.renders(5, 9, 0)
    # moving on to segment 1 drops segment 0 but nothing from the playing segment
    buffer_admit(buf, SvcId(0, 0, 1), cat, playing_segment=1)
    assert sorted(buf.svcs) == [1] and len(buf) == 2
    # a late SVC of a played segment is discarded
    buffer_admit(buf, f0, cat, playing_segment=1)
    assert 0 not in buf.svcs
    keep = HeadsetBuffer((cat.grid.rows, cat.grid.cols))
    buffer_admit(keep, f0, cat, 2, "keep_all")
    assert keep.renders(2, 3, 0)
    with pytest.raises(ValueError):
        buffer_admit(keep, f0, cat, 0, "lru")


# --- engine ---------------------------------------------------------------------------------


def test_static_single_user_misses_only_while_waiting():
    cfg = SimConfig().with_values(video__segments=3, users__count=1, users__move_prob=0.0,
                                  sched__policy="URF", sched__computing_units=2,
                                  cache__capacity_fraction=1.0)
    m = run(cfg)
    # one request per segment, each served before or just after its segment starts
    assert m.deliveries == 3 and m.obsolete_requests == 0
    assert m.extra["played"] - m.extra["hits"] <= 3
    assert m.delay_satisfaction == 1.0


def test_no_computing_units_means_no_deliveries():
    m = run(SMALL.with_values(sched__computing_units=0))
    assert m.deliveries == 0 and m.hit_probability == 0.0 and m.frame_missing_rate == 1.0
    assert np.isnan(m.delay_satisfaction)


@pytest.mark.parametrize("E", [1, 2])
def test_time_average_activation_within_unit_budget(E):
    m = run(SMALL.with_values(sched__computing_units=E))
    slots = m.extra["played"] / SMALL.users.count
    assert m.deliveries <= E * slots
    assert m.deliveries <= m.extra["requests"]


def test_metric_consistency():
    m = run(SMALL)
    assert m.hit_probability_mean == pytest.approx(m.extra["hits"] / m.extra["played"])
    assert m.frame_missing_rate == pytest.approx(1 - m.hit_probability_mean)
    assert m.hit_probability == pytest.approx(m.moving_average[-1])
    assert ((m.moving_average >= 0) & (m.moving_average <= 1)).all()
    assert set(m.row()) >= {"hit_probability", "delay_satisfaction", "request_waiting_time"}


def test_adaptive_x0_stays_in_range():
    cfg = SMALL.with_values(users__count=4, users__move_prob=0.05, quality__adaptive=True)
    x0 = run(cfg).extra["final_x0"]
    assert cfg.video.x_total - x0 <= x0 <= cfg.video.x_total


def test_runs_are_bit_reproducible():
    cfg = small_wi()
    a, b = run(cfg, prepare(cfg)), run(cfg, prepare(cfg))
    assert a.row() == b.row()
    assert np.array_equal(a.moving_average, b.moving_average)
    c = run(cfg, prepare(cfg), seed=cfg.run.seed + 1)
    assert not np.array_equal(a.moving_average, c.moving_average)


def test_world_must_match_config():
    world = prepare(SMALL)
    with pytest.raises(ValueError):
        run(SMALL.with_values(delay__chi=1e-7), world)


# --- CLI --------------------------------------------------------------------------------------


SMOKE = ["--set", "video.segments=2", "--set", "users.count=2", "--set", "run.replications=2"]


def test_cli_simulate_writes_csv_and_meta(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path), "--seed", "4", "--set", "sched.policy=URF", *SMOKE]) == 0
    rows = list(csv.DictReader(open(tmp_path / "simulate.csv")))
    assert [r["seed"] for r in rows] == ["4", "5"]
    meta = (tmp_path / "run.meta").read_text()
    assert "run.seed=4" in meta and "sched.policy=URF" in meta
    assert "hit_probability=" in capsys.readouterr().out


def test_cli_train_then_simulate_from_checkpoint(tmp_path):
    args = ["--out", str(tmp_path), *SMOKE, "--set", "sched.train_passes=1", "--set", "sched.hidden=8"]
    assert main(["train", *args]) == 0
    assert (tmp_path / "agents.ckpt").exists()
    assert main(["simulate", "--checkpoint", str(tmp_path / "agents.ckpt"), *args]) == 0


def test_cli_place_and_traces(tmp_path):
    assert main(["place", "--out", str(tmp_path), *SMOKE]) == 0
    assert (tmp_path / "cache.txt").exists()
    assert main(["synth-traces", "--out", str(tmp_path), *SMOKE]) == 0
    assert (tmp_path / "traces.csv").read_text().startswith("user_id")


def test_cli_config_errors(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path), "--set", "video.nope=1"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("users.count = 0\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err

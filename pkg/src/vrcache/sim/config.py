"""Simulation configuration: nested dataclasses and a flat ``section.key=value`` file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, get_type_hints

from ..catalog import QualityConfig, TileGrid
from ..delay import ChannelModel, DelayParams
from ..dynamics import PredictorConfig
from ..scheduler.agent import SchedulerHyper


@dataclass(frozen=True)
class GridCfg:
    rows: int = 6
    cols: int = 12
    fov_rows: int = 3
    fov_cols: int = 3


@dataclass(frozen=True)
class VideoCfg:
    segments: int = 30
    segment_seconds: float = 4.0
    x0: int = 9  # layer-0 MVCs per SVC
    x_total: int = 14  # X, all MVCs per SVC
    alpha: float = 1.3
    size_mean: float = 30e3
    size_sd: float = 10e3
    size_floor: float = 1e3


@dataclass(frozen=True)
class DelayCfg:
    backhaul_rate: float = 700e6
    chi: float = 1.5e-7
    deadline: float = 0.085
    slot_len: float = 0.033


@dataclass(frozen=True)
class ChannelCfg:
    rate_low: float = 400e6
    rate_high: float = 704e6
    p_high: float = 0.6  # p_H: High -> Low
    p_low: float = 0.3  # p_L: Low -> High


@dataclass(frozen=True)
class CacheCfg:
    capacity_fraction: float = 0.3  # of the bits needed to cache every candidate SVC
    method: str = "listed"  # place | listed | svc_only | mvc_only | cache_size_search | none
    partition: str = "proportional"  # proportional | admm


@dataclass(frozen=True)
class UsersCfg:
    count: int = 10
    move_prob: float = 0.02  # p, per direction per slot
    train_seed_offset: int = 1_000_003


@dataclass(frozen=True)
class SchedCfg:
    policy: str = "wi"  # wi | URF | RoundRobin | Random
    computing_units: int = 1
    discount: float = 0.9
    epoch_slots: int = 0  # 0: derive phi = T_bar / (E delta) after placement
    wi_step: float = 0.1
    lr_q: float = 1e-3
    lr_w: float = 1e-3
    epsilon: float = 1.0
    eps_min: float = 0.05
    eps_attn: float = 0.999
    target: str = "max"
    discount_next_q: bool = True
    hidden: str = "64,64"
    lr_decay_steps: float = 0.0
    grad_clip: float = 10.0
    train_passes: int = 3  # passes over the training profile before testing
    featurizer: str = "compact"  # compact | tilemap
    shared_agent: bool = True  # one parameter set for all (statistically identical) headsets


@dataclass(frozen=True)
class PredictorCfg:
    kind: str = "velocity"
    history_len: int = 8
    horizon: int = 0  # 0: one segment of slots


@dataclass(frozen=True)
class QualityCfg:
    adaptive: bool = False
    miss_threshold: float = 0.05
    window_slots: int = 0  # 0: one segment


@dataclass(frozen=True)
class RunCfg:
    slots: int = 0  # 0: the whole video
    seed: int = 0
    replications: int = 5
    ma_window_epochs: int = 1000


@dataclass(frozen=True)
class SimConfig:
    grid: GridCfg = field(default_factory=GridCfg)
    video: VideoCfg = field(default_factory=VideoCfg)
    delay: DelayCfg = field(default_factory=DelayCfg)
    channel: ChannelCfg = field(default_factory=ChannelCfg)
    cache: CacheCfg = field(default_factory=CacheCfg)
    users: UsersCfg = field(default_factory=UsersCfg)
    sched: SchedCfg = field(default_factory=SchedCfg)
    predictor: PredictorCfg = field(default_factory=PredictorCfg)
    quality: QualityCfg = field(default_factory=QualityCfg)
    run: RunCfg = field(default_factory=RunCfg)

    # --- derived objects ---------------------------------------------------------

    def tile_grid(self) -> TileGrid:
        g = self.grid
        return TileGrid(g.rows, g.cols, g.fov_rows, g.fov_cols)

    def quality_config(self) -> QualityConfig:
        return QualityConfig(self.video.x_total, self.video.x0)

    def delay_params(self) -> DelayParams:
        d = self.delay
        return DelayParams(d.backhaul_rate, d.chi, d.deadline, d.slot_len)

    def channel_model(self) -> ChannelModel:
        c = self.channel
        return ChannelModel(c.rate_low, c.rate_high, p_to_high=c.p_low, p_to_low=c.p_high)

    @property
    def seg_slots(self) -> int:
        return int(round(self.video.segment_seconds / self.delay.slot_len))

    @property
    def total_slots(self) -> int:
        return self.run.slots or self.video.segments * self.seg_slots

    def predictor_config(self) -> PredictorConfig:
        p = self.predictor
        return PredictorConfig(p.kind, p.history_len, p.horizon or self.seg_slots)

    def hyper(self, epoch_slots: int) -> SchedulerHyper:
        s = self.sched
        hidden = tuple(int(h) for h in s.hidden.split(",") if h.strip())
        return SchedulerHyper(
            discount=s.discount, epoch_slots=epoch_slots, wi_step=s.wi_step, lr_q=s.lr_q,
            lr_w=s.lr_w, epsilon=s.epsilon, eps_min=s.eps_min, eps_attn=s.eps_attn,
            computing_units=s.computing_units, discount_next_q=s.discount_next_q,
            target=s.target, grad_clip=s.grad_clip, hidden=hidden, lr_decay_steps=s.lr_decay_steps,
        )

    def validate(self) -> None:
        """Raise ValueError on any inconsistency, before a run starts."""
        grid = self.tile_grid()
        self.quality_config().validate(grid)
        self.delay_params()
        self.channel_model()
        self.predictor_config()
        self.hyper(max(self.sched.epoch_slots, 1))
        if self.video.segments < 1 or self.seg_slots < 1:
            raise ValueError("need at least one segment of at least one slot")
        if self.users.count < 1:
            raise ValueError("need at least one user")
        if not 0 <= 4 * self.users.move_prob <= 1:
            raise ValueError("need 0 <= 4 * users.move_prob <= 1")
        if self.cache.method not in ("place", "listed", "svc_only", "mvc_only", "cache_size_search", "none"):
            raise ValueError(f"unknown cache.method {self.cache.method!r}")
        if self.cache.partition not in ("proportional", "admm"):
            raise ValueError(f"unknown cache.partition {self.cache.partition!r}")
        if not 0 <= self.cache.capacity_fraction:
            raise ValueError("cache.capacity_fraction must be >= 0")
        if self.sched.policy not in ("wi", "URF", "RoundRobin", "Random"):
            raise ValueError(f"unknown sched.policy {self.sched.policy!r}")
        if self.sched.featurizer not in ("compact", "tilemap"):
            raise ValueError(f"unknown sched.featurizer {self.sched.featurizer!r}")
        if self.run.slots < 0 or self.run.slots > self.video.segments * self.seg_slots:
            raise ValueError("run.slots must lie within the video length")
        if self.run.replications < 1 or self.run.ma_window_epochs < 1:
            raise ValueError("replications and ma_window_epochs must be >= 1")
        if not 0 <= self.quality.miss_threshold <= 1:
            raise ValueError("quality.miss_threshold must lie in [0, 1]")

    def with_values(self, **dotted: Any) -> "SimConfig":
        """Copy with ``section__key=value`` overrides (``__`` stands for the dot)."""
        return apply_overrides(self, {k.replace("__", "."): v for k, v in dotted.items()})


def _convert(tp, raw: str, key: str):
    if tp is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if tp is int:
        return int(float(raw)) if raw.strip().lower().endswith(("e", "e0")) else int(raw)
    if tp is float:
        v = float(raw)
        if math.isnan(v):
            raise ValueError(f"{key}: NaN is not allowed")
        return v
    return raw.strip()


def apply_overrides(cfg: SimConfig, values: dict[str, Any]) -> SimConfig:
    sections = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for key, raw in values.items():
        if key.count(".") != 1:
            raise ValueError(f"unknown key {key!r}: expected section.field")
        sec, name = key.split(".")
        if sec not in sections:
            raise ValueError(f"unknown section {sec!r} in key {key!r}")
        obj = sections[sec]
        hints = get_type_hints(type(obj))
        if name not in hints:
            raise ValueError(f"unknown key {key!r}")
        tp = hints[name]
        val = _convert(tp, raw, key) if isinstance(raw, str) else tp(raw)
        sections[sec] = dataclasses.replace(obj, **{name: val})
    return SimConfig(**sections)


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        try:
            apply_overrides(base or SimConfig(), {k: v})
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from None
        values[k] = v
    return apply_overrides(base or SimConfig(), values)


def load_config(path: str | Path, base: SimConfig | None = None) -> SimConfig:
    return parse_config(Path(path).read_text(), base)


def dump_config(cfg: SimConfig) -> str:
    lines = []
    for sec in fields(cfg):
        obj = getattr(cfg, sec.name)
        for f in fields(obj):
            lines.append(f"{sec.name}.{f.name}={getattr(obj, f.name)!r}".replace("'", ""))
    return "\n".join(lines) + "\n"

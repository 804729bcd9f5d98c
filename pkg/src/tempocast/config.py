"""Experiment configuration: a flat key=value text format where every key has
a matching CLI flag. Unknown keys are rejected so typos fail loudly."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .errors import ParameterError
from .nn.model import VARIANTS
from .nn.training import PROFILES, TrainConfig, apply_profile
from .synthetic import SyntheticSpec

DEFAULT_VARIANTS = tuple(v for v in VARIANTS if "MIXER" not in v)


@dataclass(frozen=True)
class ArchConfig:
    mlp_hidden: tuple = (100, 200, 50)
    lstm_units: int = 4
    lstm_cell_activation: str = "tanh"
    mixer_blocks: int = 4
    mixer_token_hidden: int = 64
    mixer_channel_hidden: int = 128

    def for_regressor(self, regressor: str) -> dict:
        if regressor == "MLP":
            return {"hidden": self.mlp_hidden}
        if regressor == "LSTM":
            return {"units": self.lstm_units, "cell_activation": self.lstm_cell_activation}
        return {
            "blocks": self.mixer_blocks,
            "token_hidden": self.mixer_token_hidden,
            "channel_hidden": self.mixer_channel_hidden,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    data: str = "synthetic"  # "synthetic" or a CSV path
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    variants: tuple = DEFAULT_VARIANTS
    lookbacks: tuple = (4, 8, 12, 16)
    horizons: int = 6
    retro: int = 24
    fractions: tuple = (0.8, 0.1, 0.1)
    profile: str = "desk"
    train: TrainConfig = field(default_factory=TrainConfig)
    arch: ArchConfig = field(default_factory=ArchConfig)
    smoothing: bool = True
    gap_policy: str = "forward-fill"
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.variants:
            raise ParameterError("variant set must be non-empty")
        for v in self.variants:
            if v not in VARIANTS:
                raise ParameterError(f"unknown variant {v!r}")
        if not self.lookbacks:
            raise ParameterError("lookback set must be non-empty")
        for lb in self.lookbacks:
            if lb < 1 or lb > self.retro:
                raise ParameterError(f"lookback {lb} must lie in 1..retro ({self.retro})")
        if self.profile not in PROFILES:
            raise ParameterError(f"unknown profile {self.profile!r}")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"expected a boolean, got {text!r}")


def _parse_tuple(text: str, conv):
    items = [s.strip() for s in text.split(",") if s.strip()]
    return tuple(conv(s) for s in items)


#: key -> (section, field, converter); sections map onto the nested dataclasses
_KEYS = {}


def _register_keys():
    for f in fields(SyntheticSpec):
        conv = int if f.type == "int" else float
        _KEYS[f"synthetic.{f.name}"] = ("synthetic", f.name, conv)
    for f in fields(TrainConfig):
        conv = {"float": float, "int": int, "str": str}[f.type]
        _KEYS[f"train.{f.name}"] = ("train", f.name, conv)
    _KEYS["arch.mlp_hidden"] = ("arch", "mlp_hidden", lambda s: _parse_tuple(s, int))
    _KEYS["arch.lstm_units"] = ("arch", "lstm_units", int)
    _KEYS["arch.lstm_cell_activation"] = ("arch", "lstm_cell_activation", str)
    _KEYS["arch.mixer_blocks"] = ("arch", "mixer_blocks", int)
    _KEYS["arch.mixer_token_hidden"] = ("arch", "mixer_token_hidden", int)
    _KEYS["arch.mixer_channel_hidden"] = ("arch", "mixer_channel_hidden", int)
    _KEYS["data"] = (None, "data", str)
    _KEYS["variants"] = (None, "variants", lambda s: _parse_tuple(s, str))
    _KEYS["lookbacks"] = (None, "lookbacks", lambda s: _parse_tuple(s, int))
    _KEYS["horizons"] = (None, "horizons", int)
    _KEYS["retro"] = (None, "retro", int)
    _KEYS["fractions"] = (None, "fractions", lambda s: _parse_tuple(s, float))
    _KEYS["profile"] = (None, "profile", str)
    _KEYS["smoothing"] = (None, "smoothing", _parse_bool)
    _KEYS["gap_policy"] = (None, "gap_policy", str)
    _KEYS["workers"] = (None, "workers", int)
    _KEYS["seed"] = (None, "seed", int)


_register_keys()

CONFIG_KEYS = tuple(sorted(_KEYS))


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines ('#' starts a comment, 'meta.*' is ignored)."""
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("meta."):
            continue
        if key not in _KEYS:
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
        section, name, conv = _KEYS[key]
        try:
            updates[(section, name)] = conv(value)
        except (ValueError, ParameterError) as err:
            raise ParameterError(f"config line {lineno}: bad value for {key}: {err}") from None
    return merge_config(base or ExperimentConfig(), updates)


def merge_config(base: ExperimentConfig, updates: dict) -> ExperimentConfig:
    top = {}
    nested = {"synthetic": {}, "train": {}, "arch": {}}
    for (section, name), value in updates.items():
        if section is None:
            top[name] = value
        else:
            nested[section][name] = value
    cfg = base
    if nested["synthetic"]:
        cfg = replace(cfg, synthetic=replace(cfg.synthetic, **nested["synthetic"]))
    if nested["train"]:
        cfg = replace(cfg, train=replace(cfg.train, **nested["train"]))
    if nested["arch"]:
        cfg = replace(cfg, arch=replace(cfg.arch, **nested["arch"]))
    if top:
        cfg = replace(cfg, **top)
    # a profile named in the file pins patience and max_epochs unless the
    # file also sets them explicitly
    if ("train", "patience") not in updates and ("train", "max_epochs") not in updates:
        cfg = replace(cfg, train=apply_profile(cfg.train, cfg.profile))
    return cfg


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = []
    simple = {
        "data": cfg.data,
        "variants": ",".join(cfg.variants),
        "lookbacks": ",".join(str(x) for x in cfg.lookbacks),
        "horizons": cfg.horizons,
        "retro": cfg.retro,
        "fractions": ",".join(repr(float(x)) for x in cfg.fractions),
        "profile": cfg.profile,
        "smoothing": str(cfg.smoothing).lower(),
        "gap_policy": cfg.gap_policy,
        "workers": cfg.workers,
        "seed": cfg.seed,
    }
    for key, value in simple.items():
        lines.append(f"{key} = {value}")
    for f in fields(SyntheticSpec):
        lines.append(f"synthetic.{f.name} = {getattr(cfg.synthetic, f.name)}")
    for f in fields(TrainConfig):
        lines.append(f"train.{f.name} = {getattr(cfg.train, f.name)}")
    lines.append("arch.mlp_hidden = " + ",".join(str(x) for x in cfg.arch.mlp_hidden))
    lines.append(f"arch.lstm_units = {cfg.arch.lstm_units}")
    lines.append(f"arch.lstm_cell_activation = {cfg.arch.lstm_cell_activation}")
    lines.append(f"arch.mixer_blocks = {cfg.arch.mixer_blocks}")
    lines.append(f"arch.mixer_token_hidden = {cfg.arch.mixer_token_hidden}")
    lines.append(f"arch.mixer_channel_hidden = {cfg.arch.mixer_channel_hidden}")
    return "\n".join(lines) + "\n"

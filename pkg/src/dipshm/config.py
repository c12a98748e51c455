"""Line-oriented run configuration: sections of key = value pairs.

Every key has a default (the training section ships the benchmark recipe
values); unknown sections or keys are rejected outright, as are values
outside their valid ranges, so a typo aborts before any computation starts.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .neural.training import TrainConfig

CASES = ("deterioration", "damage")


@dataclass(frozen=True)
class SynthConfig:
    case: str = "deterioration"
    records_per_class: int = 80
    sampling_rate_hz: float = 200.0
    story_mass_kg: float = 1000.0
    fundamental_hz: float = 3.0
    damping_ratio: float = 0.02
    adr_per_year: float = 0.002
    state_years: tuple = (12.5, 25.0, 37.5, 50.0)
    column_reduction: float = 0.875
    added_mass_kg: float = 1.2
    excitation_bandwidth: float = 0.4
    snr_db: float = 20.0
    settle_samples: int = 2048
    seed: int = 0


@dataclass(frozen=True)
class DspConfig:
    filter_order: int = 12
    passband_ripple_db: float = 1.0
    cutoff_hz: float | None = None     # None: 40% of Nyquist
    zca_epsilon: float = 1e-8


@dataclass(frozen=True)
class StConfig:
    crop: str = "quarter"              # keep rows 1..N/4
    freq_downsample: int = 1
    time_downsample: int = 1


@dataclass(frozen=True)
class EvalConfig:
    folds: int = 5
    validation_fraction: float = 0.1875
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    dsp: DspConfig = field(default_factory=DspConfig)
    st: StConfig = field(default_factory=StConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    train_dtype: str = "float32"
    eval: EvalConfig = field(default_factory=EvalConfig)

    def with_seed(self, seed: int) -> "RunConfig":
        """Override every per-stage seed at once (the --seed flag)."""
        return RunConfig(
            synth=_replace(self.synth, seed=seed),
            dsp=self.dsp,
            st=self.st,
            train=_replace(self.train, seed=seed),
            train_dtype=self.train_dtype,
            eval=_replace(self.eval, seed=seed),
        )


def _replace(obj, **kw):
    values = {f.name: getattr(obj, f.name) for f in fields(obj)}
    values.update(kw)
    return type(obj)(**values)


def default_config(case: str = "deterioration") -> RunConfig:
    """Per-case defaults: the damage case runs at 320 Hz on a light frame."""
    if case not in CASES:
        raise ConfigError(f"case must be one of {CASES}")
    if case == "damage":
        synth = SynthConfig(case="damage", records_per_class=50,
                            sampling_rate_hz=320.0, story_mass_kg=6.0,
                            fundamental_hz=20.0)
    else:
        synth = SynthConfig()
    return RunConfig(synth=synth)


# parsing ---------------------------------------------------------------

_BOOLISH = {"true": True, "false": False}


def _parse_value(raw: str, kind, key: str):
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "float_or_auto":
            return None if raw.lower() in ("auto", "none") else float(raw)
        if kind == "float_tuple":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if kind is str:
            return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for '{key}': {raw!r}") from exc
    raise ConfigError(f"unhandled kind for '{key}'")


_SCHEMA = {
    "synth": {
        "case": str, "records_per_class": int, "sampling_rate_hz": float,
        "story_mass_kg": float, "fundamental_hz": float, "damping_ratio": float,
        "adr_per_year": float, "state_years": "float_tuple",
        "column_reduction": float, "added_mass_kg": float,
        "excitation_bandwidth": float, "snr_db": float,
        "settle_samples": int, "seed": int,
    },
    "dsp": {
        "filter_order": int, "passband_ripple_db": float,
        "cutoff_hz": "float_or_auto", "zca_epsilon": float,
    },
    "st": {"crop": str, "freq_downsample": int, "time_downsample": int},
    "train": {
        "optimizer": str, "loss": str, "momentum": float, "batch_size": int,
        "max_epochs": int, "learning_rate": float, "l2_regularization": float,
        "lr_drop_factor": float, "lr_drop_period": int, "seed": int, "dtype": str,
    },
    "eval": {"folds": int, "validation_fraction": float, "seed": int},
}


def parse_config(text: str, case: str | None = None) -> RunConfig:
    """Parse key = value sections over the per-case defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    values = {section: {} for section in _SCHEMA}
    declared_case = case
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            values[section][key] = _parse_value(raw, _SCHEMA[section][key], key)
    if declared_case is None:
        declared_case = values["synth"].get("case", "deterioration")
    elif "case" in values["synth"] and values["synth"]["case"] != declared_case:
        raise ConfigError("config case conflicts with the requested case")

    base = default_config(declared_case)
    synth = _replace(base.synth, **values["synth"])
    dsp = _replace(base.dsp, **values["dsp"])
    st = _replace(base.st, **values["st"])
    train_kw = dict(values["train"])
    train_dtype = train_kw.pop("dtype", base.train_dtype)
    train = _replace(base.train, **train_kw)
    ev = _replace(base.eval, **values["eval"])
    cfg = RunConfig(synth=synth, dsp=dsp, st=st, train=train,
                    train_dtype=train_dtype, eval=ev)
    validate_config(cfg)
    return cfg


def load_config(path, case: str | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), case=case)


def validate_config(cfg: RunConfig):
    s = cfg.synth
    if s.case not in CASES:
        raise ConfigError(f"case must be one of {CASES}")
    if s.records_per_class < 1:
        raise ConfigError("records_per_class must be >= 1")
    if s.sampling_rate_hz not in (200.0, 320.0):
        raise ConfigError("sampling_rate_hz must be 200 or 320")
    if s.story_mass_kg <= 0 or s.fundamental_hz <= 0:
        raise ConfigError("mass and fundamental frequency must be positive")
    if not 0.0 < s.damping_ratio < 1.0:
        raise ConfigError("damping_ratio must lie in (0, 1)")
    if s.adr_per_year < 0 or any(y < 0 for y in s.state_years):
        raise ConfigError("deterioration rate and years must be non-negative")
    if s.state_years and s.adr_per_year * max(s.state_years) >= 1.0:
        raise ConfigError("adr_per_year * max(state_years) must stay below 1")
    if len(s.state_years) != 4:
        raise ConfigError("exactly four severity states are supported")
    if not 0.0 < s.excitation_bandwidth < 1.0:
        raise ConfigError("excitation_bandwidth must lie in (0, 1)")
    if not 0.0 <= s.column_reduction < 1.0:
        raise ConfigError("column_reduction must lie in [0, 1)")
    if s.settle_samples < 0:
        raise ConfigError("settle_samples must be non-negative")

    d = cfg.dsp
    if d.filter_order < 1:
        raise ConfigError("filter_order must be positive")
    if d.passband_ripple_db <= 0:
        raise ConfigError("passband_ripple_db must be positive")
    if d.cutoff_hz is not None and not 0.0 < d.cutoff_hz < s.sampling_rate_hz / 2:
        raise ConfigError("cutoff_hz must lie in (0, Nyquist)")
    if d.zca_epsilon <= 0:
        raise ConfigError("zca_epsilon must be positive")

    if cfg.st.crop != "quarter":
        raise ConfigError("only the 'quarter' crop rule is supported")
    if cfg.st.freq_downsample < 1 or cfg.st.time_downsample < 1:
        raise ConfigError("downsample factors must be >= 1")

    if cfg.train_dtype not in ("float32", "float64"):
        raise ConfigError("train dtype must be float32 or float64")
    if not 0.0 < cfg.train.momentum < 1.0:
        raise ConfigError("momentum must lie in (0, 1)")
    if not 0.0 < cfg.train.lr_drop_factor <= 1.0:
        raise ConfigError("lr_drop_factor must lie in (0, 1]")

    e = cfg.eval
    if e.folds < 2:
        raise ConfigError("folds must be >= 2")
    if not 0.0 <= e.validation_fraction < 1.0:
        raise ConfigError("validation_fraction must lie in [0, 1)")


def config_to_text(cfg: RunConfig) -> str:
    """Render a config back to its file form (deterministic ordering)."""
    parser = configparser.ConfigParser(interpolation=None)

    def fill(section, obj, extra=None):
        parser.add_section(section)
        for f in fields(obj):
            v = getattr(obj, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            elif v is None:
                v = "auto"
            parser.set(section, f.name, str(v))
        for k, v in (extra or {}).items():
            parser.set(section, k, str(v))

    fill("synth", cfg.synth)
    fill("dsp", cfg.dsp)
    fill("st", cfg.st)
    fill("train", cfg.train, extra={"dtype": cfg.train_dtype})
    fill("eval", cfg.eval)
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()

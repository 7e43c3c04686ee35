"""Pipeline configuration: nested dataclasses read from ``section.key = value`` files."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InputConfig:
    survey: tuple[str, ...] = ()
    macro: str = ""
    share_unit: str = "fraction"
    renorm_tol: float = 0.02
    collapse_consumer: bool = True


@dataclass(frozen=True)
class RunConfig:
    countries: tuple[str, ...] = ()
    seed: int = 0
    jobs: int = 1
    out: str = "out"


@dataclass(frozen=True)
class IndicatorConfig:
    metric: str = "D"


@dataclass(frozen=True)
class AlignConfig:
    method: str = "step"


@dataclass(frozen=True)
class VarConfig:
    pmax: int = 12
    intercept: bool = True
    transform: str = "levels"


@dataclass(frozen=True)
class MinnesotaConfig:
    delta: float = 0.0
    lambda1: float = 0.2
    lambda2: float = 0.5
    lambda3: float = 1.0
    lambda4: float = 100.0


@dataclass(frozen=True)
class IrfConfig:
    horizon: int = 24
    draws: int = 1000
    quantiles: tuple[float, ...] = (0.16, 0.84)
    stability_rule: str = "reject"


@dataclass(frozen=True)
class CcfConfig:
    max_lag: int = 12


@dataclass(frozen=True)
class PipelineConfig:
    input: InputConfig = field(default_factory=InputConfig)
    run: RunConfig = field(default_factory=RunConfig)
    indicators: IndicatorConfig = field(default_factory=IndicatorConfig)
    align: AlignConfig = field(default_factory=AlignConfig)
    var: VarConfig = field(default_factory=VarConfig)
    minnesota: MinnesotaConfig = field(default_factory=MinnesotaConfig)
    irf: IrfConfig = field(default_factory=IrfConfig)
    ccf: CcfConfig = field(default_factory=CcfConfig)

    def validate(self) -> "PipelineConfig":
        if self.indicators.metric not in ("D", "DISP"):
            raise ConfigError(f"indicators.metric must be D or DISP, got {self.indicators.metric!r}")
        if self.align.method not in ("step", "linear"):
            raise ConfigError(f"align.method must be step or linear, got {self.align.method!r}")
        if self.input.share_unit not in ("fraction", "percent"):
            raise ConfigError("input.share_unit must be fraction or percent")
        if self.input.renorm_tol < 0:
            raise ConfigError("input.renorm_tol must be nonnegative")
        if self.var.pmax < 1:
            raise ConfigError("var.pmax must be >= 1")
        if self.var.transform not in ("levels", "diff"):
            raise ConfigError("var.transform must be levels or diff")
        if self.irf.horizon < 1:
            raise ConfigError("irf.horizon must be >= 1")
        if self.irf.draws < 100:
            raise ConfigError(f"irf.draws must be >= 100, got {self.irf.draws}")
        q = self.irf.quantiles
        if len(q) != 2 or not 0 < q[0] < q[1] < 1:
            raise ConfigError("irf.quantiles must be two levels with 0 < lower < upper < 1")
        if self.irf.stability_rule not in ("keep", "reject"):
            raise ConfigError("irf.stability_rule must be keep or reject")
        if self.ccf.max_lag < 0:
            raise ConfigError("ccf.max_lag must be >= 0")
        if self.run.jobs < 1:
            raise ConfigError("run.jobs must be >= 1")
        m = self.minnesota
        if not (m.lambda1 > 0 and 0 < m.lambda2 <= 1 and m.lambda3 >= 0 and m.lambda4 > 0):
            raise ConfigError("minnesota hyperparameters out of range")
        return self

    def check_inputs(self) -> None:
        """Raise FileNotFoundError for missing input files."""
        if not self.input.survey:
            raise ConfigError("input.survey is required")
        if not self.input.macro:
            raise ConfigError("input.macro is required")
        for path in (*self.input.survey, self.input.macro):
            if not Path(path).is_file():
                raise FileNotFoundError(f"input file not found: {path}")

    def with_overrides(self, **dotted) -> "PipelineConfig":
        cfg = self
        for key, value in dotted.items():
            if value is not None:
                cfg = _set(cfg, key, value)
        return cfg.validate()

    def items(self):
        for sec in dataclasses.fields(self):
            section = getattr(self, sec.name)
            for f in dataclasses.fields(section):
                yield f"{sec.name}.{f.name}", getattr(section, f.name)

    def to_text(self, exclude: tuple[str, ...] = ()) -> str:
        lines = []
        current = None
        for key, value in self.items():
            if key in exclude:
                continue
            sec = key.split(".")[0]
            if sec != current:
                if current is not None:
                    lines.append("")
                current = sec
            lines.append(f"{key} = {_format(value)}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of everything that affects emitted data (not jobs or output dir)."""
        text = self.to_text(exclude=("run.jobs", "run.out"))
        return hashlib.sha256(text.encode()).hexdigest()


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(raw, default, key: str):
    if not isinstance(raw, str):
        return tuple(raw) if isinstance(default, tuple) else raw
    text = raw.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            parts = [p.strip() for p in text.split(",") if p.strip()]
            if key == "irf.quantiles":
                return tuple(float(p) for p in parts)
            return tuple(parts)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return text


def _set(cfg: PipelineConfig, key: str, raw) -> PipelineConfig:
    if key.count(".") != 1:
        raise ConfigError(f"config keys look like section.name, got {key!r}")
    sec, name = key.split(".")
    if not hasattr(cfg, sec) or not dataclasses.is_dataclass(getattr(cfg, sec)):
        raise ConfigError(f"unknown config section {sec!r}")
    section = getattr(cfg, sec)
    if name not in {f.name for f in dataclasses.fields(section)}:
        raise ConfigError(f"unknown config key {key!r}")
    value = _coerce(raw, getattr(section, name), key)
    return dataclasses.replace(cfg, **{sec: dataclasses.replace(section, **{name: value})})


def parse_config_text(text: str, base_dir: Path | None = None) -> PipelineConfig:
    """Parse ``section.key = value`` lines; ``#`` starts a comment.

    Relative input paths resolve against ``base_dir``.
    """
    cfg = PipelineConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg = _set(cfg, key, value)
    if base_dir is not None:
        survey = tuple(str((base_dir / p).resolve()) if not Path(p).is_absolute() else p for p in cfg.input.survey)
        macro = cfg.input.macro
        if macro and not Path(macro).is_absolute():
            macro = str((base_dir / macro).resolve())
        out = cfg.run.out
        if not Path(out).is_absolute():
            out = str((base_dir / out).resolve())
        cfg = dataclasses.replace(
            cfg,
            input=dataclasses.replace(cfg.input, survey=survey, macro=macro),
            run=dataclasses.replace(cfg.run, out=out),
        )
    return cfg.validate()


def load_config(path) -> PipelineConfig:
    """Read a config file, or the resolved config embedded in a run manifest (``.json``)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            resolved = json.loads(text)["config"]
        except (ValueError, KeyError, TypeError):
            raise ConfigError(f"{path} is not a run manifest") from None
        text = "".join(f"{k} = {v}\n" for k, v in resolved.items())
    return parse_config_text(text, path.parent)

"""YAML run configuration: schema, validation with line numbers, and round-trip serialization.

Every key carries its unit in its name. Frequencies are ordinary frequencies in
MHz; conversion to rad/us happens in :meth:`Config.run_config`.

Example::

    seed: 0
    system:
      delta_e_mhz: 0.04
      a_par_mhz: 0.03
      a_perp_mhz: 0.04
      b_field_gauss: 80.0
    sequence:
      variant: rnovel
      tau_us: 2.0
      n_pulses: 60
      omega_sl_mhz: 0.15
    noise:
      dt_us: 0.1
      realizations: 100
      components:
        - {tau_c_us: 11.0, delta_noise_rad_per_us: 1.0}
        - {tau_c_us: 150.0, delta_noise_rad_per_us: 1.0}
    sweep:
      axis1: {name: omega_sl_mhz, start: 0.0, stop: 1.5, steps: 151}
      axis2: {name: n_pulses, start: 1, stop: 60, steps: 60}
    output:
      record_mode: per_pulse_unit

Files written by the CLI carry their resolved config as a ``#``-prefixed
header, and :func:`load_config` accepts such a file directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from nvdnp.engine import RECORD_MODES, AxisSpec, RunConfig
from nvdnp.noise import NoiseComponentSpec
from nvdnp.quantum import SpinSystemParams
from nvdnp.sequence import VARIANTS, SequenceInfo, build_from_info
from nvdnp.units import GAMMA_C13_MHZ_PER_GAUSS, TWO_PI

# Sweep axis names as written in config files -> engine axis names.
AXIS_UNITS = {
    "omega_sl_mhz": "omega_sl",
    "omega_f_mhz": "omega_f",
    "tau_us": "tau",
    "n_pulses": "n_pulses",
    "n_cycles": "n_cycles",
}

META_KEYS = ("generated_by", "command")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class _LineDict(dict):
    """dict remembering the source line of each key."""

    lines: dict


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _LineDict()
    out.lines = {}
    out.start_line = node.start_mark.line + 1
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        out[key] = loader.construct_object(value_node, deep=True)
        out.lines[key] = key_node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


@dataclass
class SystemSection:
    delta_e_mhz: float = 0.04
    a_par_mhz: float = 0.03
    a_perp_mhz: float = 0.04
    a_perp_phase_rad: float = 0.0
    b_field_gauss: float | None = 80.0
    omega_n0_mhz: float | None = None
    gamma_n_khz_per_gauss: float = GAMMA_C13_MHZ_PER_GAUSS * 1e3


@dataclass
class SequenceSection:
    variant: str = "rnovel"
    tau_us: float = 2.0
    n_pulses: int = 60
    omega_sl_mhz: float = 0.0
    n_cycles: int = 1
    sl_phase_rad: float = 0.0
    prep_phase_rad: float = math.pi / 2
    detect_phase_rad: float = -math.pi / 2


@dataclass
class NoiseComponent:
    tau_c_us: float
    delta_noise_rad_per_us: float


@dataclass
class NoiseSection:
    dt_us: float = 0.1
    realizations: int = 100
    components: list = field(default_factory=list)


@dataclass
class AxisSection:
    name: str
    values: list


@dataclass
class SweepSection:
    axis1: AxisSection
    axis2: AxisSection


@dataclass
class OutputSection:
    path: str = "."
    record_mode: str = "per_pulse_unit"


@dataclass
class PredictSection:
    k_max: int = 5


@dataclass
class Config:
    seed: int = 0
    system: SystemSection = field(default_factory=SystemSection)
    sequence: SequenceSection = field(default_factory=SequenceSection)
    noise: NoiseSection | None = None
    sweep: SweepSection | None = None
    output: OutputSection = field(default_factory=OutputSection)
    predict: PredictSection = field(default_factory=PredictSection)

    # -- conversion to engine objects --

    def spin_params(self) -> SpinSystemParams:
        s = self.system
        kwargs = {}
        if s.omega_n0_mhz is not None:
            kwargs["omega_n0_mhz"] = s.omega_n0_mhz
        else:
            kwargs["b_field_gauss"] = s.b_field_gauss
        return SpinSystemParams.from_mhz(
            s.delta_e_mhz,
            s.a_par_mhz,
            s.a_perp_mhz,
            a_perp_phase_rad=s.a_perp_phase_rad,
            gamma_n_mhz_per_gauss=s.gamma_n_khz_per_gauss * 1e-3,
            **kwargs,
        )

    def sequence_info(self) -> SequenceInfo:
        q = self.sequence
        return SequenceInfo(
            variant=q.variant,
            tau=q.tau_us,
            n_pulses=q.n_pulses,
            omega_sl=TWO_PI * q.omega_sl_mhz,
            sl_phase=q.sl_phase_rad,
            prep_phase=q.prep_phase_rad,
            detect_phase=q.detect_phase_rad,
            n_cycles=None if q.n_cycles == 1 else q.n_cycles,
        )

    def noise_specs(self) -> tuple[NoiseComponentSpec, ...]:
        if self.noise is None:
            return ()
        return tuple(NoiseComponentSpec(c.tau_c_us, c.delta_noise_rad_per_us) for c in self.noise.components)

    def run_config(self, record_mode: str | None = None) -> RunConfig:
        specs = self.noise_specs()
        noisy = any(s.delta_noise > 0 for s in specs)
        return RunConfig(
            params=self.spin_params(),
            sequence=build_from_info(self.sequence_info()),
            noise_specs=specs,
            noise_dt=self.noise.dt_us if self.noise is not None else 0.1,
            n_realizations=self.noise.realizations if (self.noise is not None and noisy) else 1,
            master_seed=self.seed,
            record_mode=record_mode or self.output.record_mode,
        )

    def axes(self) -> tuple[AxisSpec, AxisSpec]:
        if self.sweep is None:
            raise ConfigError("config has no sweep section")
        return tuple(_engine_axis(a) for a in (self.sweep.axis1, self.sweep.axis2))

    # -- serialization --

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("noise", "sweep"):
            if d[key] is None:
                del d[key]
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=False)


def _engine_axis(a: AxisSection) -> AxisSpec:
    name = AXIS_UNITS[a.name]
    values = a.values
    if a.name in ("omega_sl_mhz", "omega_f_mhz"):
        values = [TWO_PI * v for v in values]
    return AxisSpec(name, tuple(values))


# -- parsing ------------------------------------------------------------------


def _line_of(d, key=None):
    if isinstance(d, _LineDict):
        if key is not None and key in d.lines:
            return d.lines[key]
        return d.start_line
    return None


def _number(d, key, kind=float, minimum=None, positive=False, optional=False):
    value = d[key]
    line = _line_of(d, key)
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}", line)
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{key} must be an integer, got {value!r}", line)
        value = int(value)
    else:
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{key} must be finite", line)
    if positive and not value > 0:
        raise ConfigError(f"{key} must be > 0, got {value}", line)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}", line)
    return value


def _section(raw, name, cls, rules: dict):
    d = raw.get(name)
    if d is None:
        return cls()
    if not isinstance(d, dict):
        raise ConfigError(f"section {name!r} must be a mapping", _line_of(raw, name))
    unknown = set(d) - set(rules)
    if unknown:
        key = sorted(unknown, key=str)[0]
        raise ConfigError(f"unknown key {name}.{key}", _line_of(d, key))
    kwargs = {}
    for key, rule in rules.items():
        if key in d:
            kwargs[key] = rule(d, key)
    return cls(**kwargs)


def _choice(options):
    def rule(d, key):
        v = d[key]
        if v not in options:
            raise ConfigError(f"{key} must be one of {list(options)}, got {v!r}", _line_of(d, key))
        return v

    return rule


def _num(**kw):
    return lambda d, key: _number(d, key, **kw)


def _parse_noise(raw) -> NoiseSection | None:
    d = raw.get("noise")
    if d is None:
        return None
    if not isinstance(d, dict):
        raise ConfigError("section 'noise' must be a mapping", _line_of(raw, "noise"))
    unknown = set(d) - {"dt_us", "realizations", "components"}
    if unknown:
        key = sorted(unknown, key=str)[0]
        raise ConfigError(f"unknown key noise.{key}", _line_of(d, key))
    sec = NoiseSection()
    if "dt_us" in d:
        sec.dt_us = _number(d, "dt_us", positive=True)
    if "realizations" in d:
        sec.realizations = _number(d, "realizations", kind=int, minimum=1)
    comps = d.get("components") or []
    if not isinstance(comps, list):
        raise ConfigError("noise.components must be a list", _line_of(d, "components"))
    for c in comps:
        if not isinstance(c, dict):
            raise ConfigError("each noise component must be a mapping", _line_of(d, "components"))
        keys = set(c)
        allowed = {"tau_c_us", "delta_noise_rad_per_us", "delta_noise_mhz"}
        if keys - allowed:
            key = sorted(keys - allowed, key=str)[0]
            raise ConfigError(f"unknown key in noise component: {key}", _line_of(c, key))
        if "tau_c_us" not in c:
            raise ConfigError("noise component needs tau_c_us", _line_of(c))
        has_rad, has_mhz = "delta_noise_rad_per_us" in c, "delta_noise_mhz" in c
        if has_rad == has_mhz:
            raise ConfigError("noise component needs exactly one of delta_noise_rad_per_us, delta_noise_mhz", _line_of(c))
        tau_c = _number(c, "tau_c_us", positive=True)
        if has_rad:
            strength = _number(c, "delta_noise_rad_per_us", minimum=0.0)
        else:
            strength = TWO_PI * _number(c, "delta_noise_mhz", minimum=0.0)
        sec.components.append(NoiseComponent(tau_c, strength))
    return sec


def _axis_values(d, where) -> list:
    if "values" in d:
        if set(d) - {"name", "values"}:
            raise ConfigError(f"{where}: give either values or start/stop/steps", _line_of(d))
        vals = d["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{where}.values must be a non-empty list", _line_of(d, "values"))
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{where}.values must be numbers", _line_of(d, "values"))
        return list(vals)
    for key in ("start", "stop", "steps"):
        if key not in d:
            raise ConfigError(f"{where} needs 'values' or start/stop/steps (missing {key})", _line_of(d))
    unknown = set(d) - {"name", "start", "stop", "steps"}
    if unknown:
        key = sorted(unknown, key=str)[0]
        raise ConfigError(f"unknown key {where}.{key}", _line_of(d, key))
    start = _number(d, "start")
    stop = _number(d, "stop")
    steps = _number(d, "steps", kind=int, minimum=1)
    return [float(v) for v in np.linspace(start, stop, steps)]


def _parse_sweep(raw) -> SweepSection | None:
    d = raw.get("sweep")
    if d is None:
        return None
    if not isinstance(d, dict) or set(d) != {"axis1", "axis2"}:
        raise ConfigError("sweep needs exactly axis1 and axis2", _line_of(raw, "sweep"))
    axes = []
    for key in ("axis1", "axis2"):
        a = d[key]
        if not isinstance(a, dict) or "name" not in a:
            raise ConfigError(f"sweep.{key} must be a mapping with a name", _line_of(d, key))
        if a["name"] not in AXIS_UNITS:
            raise ConfigError(
                f"sweep.{key}.name must be one of {list(AXIS_UNITS)}, got {a['name']!r}", _line_of(a, "name")
            )
        values = _axis_values(a, f"sweep.{key}")
        if a["name"] in ("n_pulses", "n_cycles"):
            if any(int(v) != v for v in values):
                raise ConfigError(f"sweep.{key} values must be integers", _line_of(a))
            values = [int(v) for v in values]
            lo = 0 if a["name"] == "n_pulses" else 1
            if min(values) < lo:
                raise ConfigError(f"sweep.{key} values must be >= {lo}", _line_of(a))
        elif a["name"] in ("tau_us", "omega_f_mhz") and min(values) <= 0:
            raise ConfigError(f"sweep.{key} values must be > 0", _line_of(a))
        elif min(values) < 0:
            raise ConfigError(f"sweep.{key} values must be >= 0", _line_of(a))
        axes.append(AxisSection(a["name"], values))
    if axes[0].name == axes[1].name:
        raise ConfigError("sweep axes must differ", _line_of(raw, "sweep"))
    return SweepSection(*axes)


def parse_config(raw) -> Config:
    """Validate a mapping (as loaded from YAML) into a :class:`Config`."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping", 1)
    known = {"seed", "system", "sequence", "noise", "sweep", "output", "predict", *META_KEYS}
    unknown = set(raw) - known
    if unknown:
        key = sorted(unknown, key=str)[0]
        raise ConfigError(f"unknown top-level key {key!r}", _line_of(raw, key))
    cfg = Config()
    if "seed" in raw:
        cfg.seed = _number(raw, "seed", kind=int, minimum=0)
        if cfg.seed >= 2**64:
            raise ConfigError("seed must fit in 64 bits", _line_of(raw, "seed"))
    cfg.system = _section(
        raw,
        "system",
        SystemSection,
        {
            "delta_e_mhz": _num(),
            "a_par_mhz": _num(),
            "a_perp_mhz": _num(),
            "a_perp_phase_rad": _num(),
            "b_field_gauss": _num(minimum=0.0, optional=True),
            "omega_n0_mhz": _num(minimum=0.0, optional=True),
            "gamma_n_khz_per_gauss": _num(),
        },
    )
    sys_raw = raw.get("system") or {}
    if "omega_n0_mhz" in sys_raw and sys_raw.get("omega_n0_mhz") is not None:
        if sys_raw.get("b_field_gauss") is not None:
            raise ConfigError("give only one of system.b_field_gauss and system.omega_n0_mhz", _line_of(sys_raw, "omega_n0_mhz"))
        cfg.system.b_field_gauss = None
    elif cfg.system.b_field_gauss is None:
        raise ConfigError("system needs b_field_gauss or omega_n0_mhz", _line_of(raw, "system"))
    cfg.sequence = _section(
        raw,
        "sequence",
        SequenceSection,
        {
            "variant": _choice(VARIANTS),
            "tau_us": _num(positive=True),
            "n_pulses": _num(kind=int, minimum=0),
            "omega_sl_mhz": _num(minimum=0.0),
            "n_cycles": _num(kind=int, minimum=1),
            "sl_phase_rad": _num(),
            "prep_phase_rad": _num(),
            "detect_phase_rad": _num(),
        },
    )
    cfg.noise = _parse_noise(raw)
    cfg.sweep = _parse_sweep(raw)
    cfg.output = _section(raw, "output", OutputSection, {"path": lambda d, k: str(d[k]), "record_mode": _choice(RECORD_MODES)})
    cfg.predict = _section(raw, "predict", PredictSection, {"k_max": _num(kind=int)})
    return cfg


def _strip_header(text: str) -> str:
    """Recover the YAML block from a '#'-prefixed CSV header, if ``text`` is one."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# generated_by:"):
        return text
    out = []
    for line in lines:
        if not line.startswith("#"):
            break
        out.append(line[2:] if line.startswith("# ") else line[1:])
    return "\n".join(out)


def loads_config(text: str) -> Config:
    try:
        raw = yaml.load(_strip_header(text), Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from exc
    return parse_config(raw)


def load_config(path) -> Config:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads_config(text)

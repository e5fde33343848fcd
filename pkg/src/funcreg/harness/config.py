"""Scenario configuration files (INI) and the objects they describe."""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..fnspace import FunctionExpr, eval_number, parse_expr
from ..fpca import kl_decompose, population_covariance
from ..processes import (
    AppendixCProcess,
    CounterexampleProcess,
    ExampleProcess,
    ProcessSpec,
    Remark3Process,
)
from ..subspace import Subspace, d_theta, legendre_even_space

PRESET_DIR = Path(__file__).with_name("presets")
OUT_ENV = "FUNCREG_OUT"
DEFAULT_OUT = "out"

_THETA_RE = re.compile(r"^D_theta\((.+)\)$")
_PCS_RE = re.compile(r"^first_pcs\((\d+)\)$")
_CHAIN_RE = re.compile(r"^chain\((\d+)\)$")


@dataclass
class ScenarioConfig:
    case: str
    beta: str = "0"
    subspace: str = "legendre_even"
    process: str = "appendix_c"
    process_params: dict = field(default_factory=dict)
    n: int = 500
    replicates: int = 100
    sigma: float = 1.0
    seed: int = 0
    k_s: int = 50
    grid_points: int = 201
    center: bool = False
    out_dir: str | None = None
    thresholds: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    source: str | None = None

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def output_dir(self, override: str | None = None) -> Path:
        """CLI override, then the config file, then the environment, then ``./out``."""
        if override:
            return Path(override)
        if self.out_dir:
            return Path(self.out_dir)
        return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)

    def beta_expr(self) -> FunctionExpr:
        try:
            return parse_expr(self.beta)
        except ValueError as exc:
            raise ConfigError(f"bad beta: {exc}") from exc


def _get(section, key, conv, default):
    if key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def _to_int(text: str) -> int:
    v = eval_number(text)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _to_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def resolve_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.is_file():
        return p
    preset = PRESET_DIR / (name_or_path if name_or_path.endswith(".ini") else name_or_path + ".ini")
    if preset.is_file():
        return preset
    raise ConfigError(f"no config file or preset named {name_or_path!r}")


def list_presets() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.ini"))


def load_config(name_or_path: str) -> ScenarioConfig:
    """Read a config file path or a bundled preset name."""
    path = resolve_path(name_or_path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_parser(parser, str(path))


def config_from_string(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return config_from_parser(parser, None)


def config_from_parser(parser: configparser.ConfigParser, source: str | None) -> ScenarioConfig:
    if "scenario" not in parser:
        raise ConfigError("config needs a [scenario] section")
    sc = parser["scenario"]
    if "case" not in sc:
        raise ConfigError("[scenario] needs a case label")
    case = sc["case"].strip()
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", case):
        raise ConfigError(f"case label {case!r} must be a plain file-name token")
    space = parser["space"] if "space" in parser else {}
    proc = dict(parser["process"]) if "process" in parser else {}
    cfg = ScenarioConfig(
        case=case,
        beta=sc.get("beta", "0").strip(),
        subspace=sc.get("subspace", "legendre_even").strip(),
        process=proc.pop("variant", "appendix_c").strip(),
        process_params=proc,
        n=_get(sc, "n", _to_int, 500),
        replicates=_get(sc, "replicates", _to_int, 100),
        sigma=_get(sc, "sigma", eval_number, 1.0),
        seed=_get(sc, "seed", _to_int, 0),
        k_s=_get(space, "k_s", _to_int, 50),
        grid_points=_get(space, "grid_points", _to_int, 201),
        center=_get(sc, "center", _to_bool, False),
        out_dir=(parser["output"].get("dir", "").strip() or None) if "output" in parser else None,
        thresholds={k: _get(parser["thresholds"], k, eval_number, None)
                    for k in parser["thresholds"]} if "thresholds" in parser else {},
        sections={name: dict(parser[name]) for name in parser.sections()},
        source=source,
    )
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    if cfg.replicates < 1:
        raise ConfigError("replicates (M) must be at least 1")
    if cfg.sigma < 0:
        raise ConfigError("sigma must be non-negative")
    if cfg.n < 1:
        raise ConfigError("n must be positive")
    if cfg.k_s < 1 or cfg.grid_points < 2:
        raise ConfigError("k_s must be positive and grid_points at least 2")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be a non-negative 64-bit integer")
    cfg.beta_expr()
    m = _THETA_RE.match(cfg.subspace)
    if m:
        theta = _theta(m.group(1))
        if not 0.0 <= theta <= 2.0 * math.pi:
            raise ConfigError(f"theta must lie in [0, 2 pi], got {theta}")


def _theta(text: str) -> float:
    try:
        return eval_number(text)
    except ValueError as exc:
        raise ConfigError(f"bad theta {text!r}") from exc


# ---------------------------------------------------------------------------
# building objects


def _rule(params: dict, key: str, default: str, var: str, count: int, start: int = 1) -> tuple:
    text = params.get(key, default)
    try:
        return tuple(eval_number(text, {var: i}) for i in range(start, start + count))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad {key} rule {text!r}") from exc


def build_process(cfg: ScenarioConfig) -> ProcessSpec:
    p = cfg.process_params
    try:
        if cfg.process == "example":
            K = _to_int(p.get("terms", "20"))
            return ExampleProcess(_rule(p, "eta", "1/(k+1)", "k", K + 1, start=0), cfg.seed)
        if cfg.process == "appendix_c":
            return AppendixCProcess(
                poisson_rate=eval_number(p.get("poisson_rate", "10")),
                amplitude=eval_number(p.get("amplitude", "10")),
                eta_first=eval_number(p.get("eta_first", "0.01")),
                z_cap=_to_int(p.get("z_cap", "100")),
                seed=cfg.seed,
            )
        if cfg.process == "counterexample":
            cap = _to_int(p.get("d_cap", "21"))
            return CounterexampleProcess(
                _rule(p, "beta", "1/d", "d", cap + 2),
                _rule(p, "eps", "1/d**2", "d", cap + 1),
                eval_number(p.get("lambda_1", "1")),
                cfg.seed,
            )
        if cfg.process == "remark3":
            cap = _to_int(p.get("d_cap", "12"))
            return Remark3Process(_rule(p, "lambda", "1/j**2", "j", cap),
                                  eval_number(p.get("scale", "1")), cfg.seed)
    except ValueError as exc:
        raise ConfigError(f"bad process parameters: {exc}") from exc
    raise ConfigError(f"unknown process variant {cfg.process!r}")


def first_pcs(process: ProcessSpec, k: int) -> Subspace:
    """Span of the ``k`` leading population eigenfunctions of the process."""
    atoms = Subspace(process.atoms, "X", validate=False)
    kl = kl_decompose(population_covariance(process, atoms), atoms)
    if not 1 <= k <= len(kl.psi) or kl.lam[k - 1] <= 0:
        raise ConfigError(f"first_pcs({k}) needs {k} positive-variance components")
    return Subspace(kl.psi[:k], "D")


def build_subspace(spec: str, process: ProcessSpec) -> Subspace:
    """Parse a D specification.

    Accepted forms: ``D_theta(<angle>)``, ``legendre_even``, ``first_pcs(<k>)``,
    ``chain(<d>)`` and ``atoms: <term list>; <term list>; ...``.
    """
    spec = spec.strip()
    m = _THETA_RE.match(spec)
    if m:
        return d_theta(_theta(m.group(1)))
    if spec == "legendre_even":
        return legendre_even_space("D")
    m = _PCS_RE.match(spec)
    if m:
        return first_pcs(process, int(m.group(1)))
    m = _CHAIN_RE.match(spec)
    if m:
        try:
            return process.chain_basis(int(m.group(1)))
        except Exception as exc:
            raise ConfigError(str(exc)) from exc
    if spec.startswith("atoms:"):
        try:
            funcs = [parse_expr(part) for part in spec[len("atoms:"):].split(";") if part.strip()]
            return Subspace.from_functions(funcs, "D")
        except Exception as exc:
            raise ConfigError(f"bad atom list: {exc}") from exc
    raise ConfigError(f"unknown subspace specification {spec!r}")


def int_list(text: str) -> list[int]:
    """``"3..9"`` or ``"3, 5, 8"`` to a list of integers."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(_to_int(lo), _to_int(hi) + 1))
        return [_to_int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc

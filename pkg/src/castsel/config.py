"""Run configuration: defaults, key=value file parsing, override merging.

The on-disk format is one ``key = value`` per line; ``#`` starts a comment and
blank lines are ignored. List values are comma-separated. Overrides (from CLI
flags) are applied after the file and win.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

# tuple-typed keys and their element parser
_TUPLE_INT_KEYS = {"scales"}
_TUPLE_FLOAT_KEYS = {"omega", "beta_scale"}


@dataclass
class RunConfig:
    # neighborhood graphs
    k: int = 15
    normalize_img: bool = False
    normalize_txt: bool = True
    zero_img: bool = False  # ablation: zero the image block at ingestion

    # collapse refinement
    theta: float = 0.1
    kappa_max: float = 0.3

    # diffusion-wavelet fusion
    scales: tuple = (1, 2, 4)
    probe_width: int = 16
    fusion_temp: float = 0.5
    omega: tuple | None = None  # None -> uniform over scales
    lambda_sp: float = 0.05

    # wavelet matching
    k_proxy: int = 8
    tau_eta: float = 0.5
    tau: float = 0.5
    n_proj: int = 64
    beta_scale: tuple | None = None  # None -> uniform over scales
    lambda_edge: float = 0.5
    lambda_cov: float = 0.2
    swd_cost: str = "squared"  # or "absolute"

    # relational coverage
    sigma_r: float = 0.0  # 0 -> auto: median support-edge distance
    eta_rel: float = 0.5
    support_cap: int = 10
    tau_c: float = 0.1  # must resolve within-cluster spacing on unit-norm fused vectors
    beta_prop: float = 0.5
    mu: float = 0.1

    # optimizer
    lr: float = 0.05
    steps: int = 400
    clip_norm: float = 5.0
    sched_full: float = 0.6  # fraction of steps by which all scales are active
    lambda_lsrc: float = 1.0
    lambda_reg: float = 0.05
    w_div: float = 0.01

    # discrete assignment
    alpha_d: float = 0.4
    alpha_w: float = 0.4
    alpha_t: float = 0.1
    alpha_q: float = 0.1

    seed: int = 0

    def validate(self) -> "RunConfig":
        c = self
        if c.k < 2:
            raise ConfigError("k must be >= 2")
        if not c.scales:
            raise ConfigError("scales must be nonempty")
        if any(int(s) != s or s < 1 for s in c.scales):
            raise ConfigError("scales must be positive integers")
        if list(c.scales) != sorted(set(c.scales)):
            raise ConfigError("scales must be strictly increasing")
        for name in ("fusion_temp", "tau_eta", "tau", "tau_c", "lr", "clip_norm"):
            if getattr(c, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in (
            "theta",
            "lambda_sp",
            "lambda_edge",
            "lambda_cov",
            "lambda_lsrc",
            "lambda_reg",
            "mu",
            "w_div",
            "sigma_r",
            "alpha_d",
            "alpha_w",
            "alpha_t",
            "alpha_q",
        ):
            if getattr(c, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("kappa_max", "eta_rel", "beta_prop"):
            v = getattr(c, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        if not 0.0 < c.sched_full <= 1.0:
            raise ConfigError("sched_full must be in (0, 1]")
        if c.probe_width < 1 or c.n_proj < 1 or c.k_proxy < 1:
            raise ConfigError("probe_width, n_proj, k_proxy must be >= 1")
        if c.steps < 0:
            raise ConfigError("steps must be >= 0")
        if c.support_cap < 0:
            raise ConfigError("support_cap must be >= 0")
        if c.swd_cost not in ("squared", "absolute"):
            raise ConfigError("swd_cost must be 'squared' or 'absolute'")
        for name in ("omega", "beta_scale"):
            v = getattr(c, name)
            if v is not None:
                if len(v) != len(c.scales):
                    raise ConfigError(f"{name} must have one entry per scale")
                if any(x < 0 for x in v):
                    raise ConfigError(f"{name} entries must be >= 0")
                if sum(v) <= 0:
                    raise ConfigError(f"{name} must have positive sum")
        return c

    def scale_weights(self, name: str) -> dict:
        """Per-scale weight mapping for 'omega' or 'beta_scale' (normalized)."""
        raw = getattr(self, name)
        if raw is None:
            w = [1.0 / len(self.scales)] * len(self.scales)
        else:
            tot = float(sum(raw))
            w = [float(x) / tot for x in raw]
        return {int(s): w[i] for i, s in enumerate(self.scales)}


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key: {key!r}")
    raw = raw.strip()
    if key in _TUPLE_INT_KEYS:
        try:
            return tuple(int(x) for x in raw.split(",") if x.strip())
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated integers, got {raw!r}")
    if key in _TUPLE_FLOAT_KEYS:
        if raw.lower() in ("", "none"):
            return None
        try:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated numbers, got {raw!r}")
    kind = type(getattr(RunConfig(), key))
    if kind is bool:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}")
    return raw  # str field


def parse_config_text(text: str) -> dict:
    """Parse config file text into a raw string mapping (no coercion)."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"config line {lineno}: expected `key = value`, got {line!r}")
        key, val = body.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from defaults, an optional file, and overrides.

    `overrides` maps key names to raw strings (as received from the CLI) or to
    already-typed values; strings are coerced like file values.
    """
    cfg = RunConfig()
    merged: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                merged.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}")
    if overrides:
        merged.update(overrides)
    for key, raw in merged.items():
        value = _coerce(key, raw) if isinstance(raw, str) else raw
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key: {key!r}")
        setattr(cfg, key, value)
    return cfg.validate()

"""Flat ``key = value`` trial configuration files.

One key per line, ``#`` starts a comment.  Keys::

    n side radius m partition_mode
    beta gamma dt r0          # r0 overrides beta as r0 * gamma
    s0 i0 infection target    # infection: homogeneous | gathered
    policy b0 w_bar pruning_rule f0 stride
    adversary horizon max_horizon eps seed early_stop
"""

from __future__ import annotations

from dataclasses import replace
from typing import Iterable, Mapping

from .epidemic import SirParams
from .harness import TrialConfig
from .policy import PolicyConfig
from .population import InfectionMode

__all__ = ["ConfigError", "parse_config", "load_config", "build_trial_config", "CONFIG_KEYS"]


class ConfigError(ValueError):
    pass


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_float(v: str):
    return None if v.strip().lower() in ("", "none", "auto") else float(v)


def _opt_int(v: str):
    return None if v.strip().lower() in ("", "none", "auto") else int(v)


CONFIG_KEYS = {
    "n": int,
    "side": float,
    "radius": float,
    "m": int,
    "partition_mode": str,
    "beta": float,
    "gamma": float,
    "dt": float,
    "r0": float,
    "s0": float,
    "i0": float,
    "infection": str,
    "target": int,
    "policy": str,
    "b0": _opt_float,
    "w_bar": float,
    "pruning_rule": str,
    "f0": _opt_int,
    "stride": int,
    "adversary": float,
    "horizon": int,
    "max_horizon": int,
    "eps": float,
    "seed": int,
    "early_stop": _bool,
}


def parse_config(lines: Iterable[str]) -> dict:
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return out


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None


def build_trial_config(values: Mapping, base: TrialConfig | None = None) -> TrialConfig:
    """Overlay parsed ``values`` on ``base`` (defaults when omitted)."""
    base = base or TrialConfig()
    v = dict(values)
    try:
        gamma = v.pop("gamma", base.params.gamma)
        dt = v.pop("dt", base.params.dt)
        beta = v.pop("beta", base.params.beta)
        if "r0" in v:
            beta = v.pop("r0") * gamma
        params = SirParams(beta=beta, gamma=gamma, dt=dt)

        inf_kind = v.pop("infection", base.infection.kind)
        infection = InfectionMode(inf_kind, v.pop("target", base.infection.target))

        pol = base.policy
        policy = PolicyConfig(
            kind=v.pop("policy", pol.kind),
            b0=v.pop("b0", pol.b0),
            w_bar=v.pop("w_bar", pol.w_bar),
            pruning_rule=v.pop("pruning_rule", pol.pruning_rule),
            f0=v.pop("f0", pol.f0),
            stride=v.pop("stride", pol.stride),
        )
        return replace(base, params=params, infection=infection, policy=policy, **v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

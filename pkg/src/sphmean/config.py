"""Run configuration: a small TOML file describing one experiment."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

__all__ = ["ConfigError", "RunConfig", "load_config", "loads_config", "dumps_config"]

PIPELINES = ("means", "wave", "kernel-map")
ROUTES = ("auto", "analytic", "chebyshev", "fourier")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    domain: dict
    phantom: dict
    dimension: int
    boundary_res: int = 256
    radial_res: int = 1024
    grid_res: int = 32
    time_res: int = 0  # 0 picks the default time grid
    variant: str = "b"
    pipeline: str = "means"
    output: str = "out"
    seed: int = 0
    threads: int = 0
    kernel_route: str = "auto"
    kernel_x0: list = field(default_factory=list)

    def validate(self) -> "RunConfig":
        n = self.dimension
        if not isinstance(n, int) or n < 2:
            raise ConfigError("dimension", "must be an integer >= 2")
        if self.pipeline not in PIPELINES:
            raise ConfigError("pipeline", f"must be one of {PIPELINES}")
        if self.pipeline != "kernel-map" and n not in (2, 3, 4, 5):
            raise ConfigError("dimension", "full pipelines support n in {2, 3, 4, 5}")
        if self.variant not in ("a", "b"):
            raise ConfigError("variant", "must be 'a' or 'b'")
        for name in ("boundary_res", "radial_res", "grid_res"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"resolution.{name.split('_')[0]}", "must be positive")
        if self.time_res < 0:
            raise ConfigError("resolution.time", "must be >= 0")
        if self.kernel_route not in ROUTES:
            raise ConfigError("kernel.route", f"must be one of {ROUTES}")
        if not isinstance(self.domain, dict) or "kind" not in self.domain:
            raise ConfigError("domain.kind", "missing")
        bumps = self.phantom.get("bumps")
        if not isinstance(bumps, list):
            raise ConfigError("phantom.bumps", "must be a list of bumps")
        for i, b in enumerate(bumps):
            for key in ("center", "radius", "smoothness"):
                if key not in b:
                    raise ConfigError(f"phantom.bumps[{i}].{key}", "missing")
            if len(b["center"]) != n:
                raise ConfigError(f"phantom.bumps[{i}].center", f"must have {n} coordinates")
        if self.kernel_x0 and len(self.kernel_x0) != n:
            raise ConfigError("kernel.x0", f"must have {n} coordinates")
        return self

    # -- TOML mapping

    def to_dict(self) -> dict:
        d = asdict(self)
        out = {
            "pipeline": d["pipeline"],
            "dimension": d["dimension"],
            "variant": d["variant"],
            "seed": d["seed"],
            "threads": d["threads"],
            "output": d["output"],
            "domain": d["domain"],
            "resolution": {
                "boundary": d["boundary_res"],
                "radial": d["radial_res"],
                "grid": d["grid_res"],
                "time": d["time_res"],
            },
            "phantom": {"bumps": d["phantom"].get("bumps", [])},
            "kernel": {"route": d["kernel_route"]},
        }
        if d["kernel_x0"]:
            out["kernel"]["x0"] = d["kernel_x0"]
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {"pipeline", "dimension", "variant", "seed", "threads", "output", "domain",
                 "resolution", "phantom", "kernel"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown key")
        if "dimension" not in raw:
            raise ConfigError("dimension", "missing")
        if "domain" not in raw:
            raise ConfigError("domain", "missing")
        res = raw.get("resolution", {})
        ker = raw.get("kernel", {})
        phantom = raw.get("phantom", {"bumps": []})
        bumps = [dict(b) for b in phantom.get("bumps", [])]
        cfg = cls(
            domain=dict(raw["domain"]),
            phantom={"bumps": bumps},
            dimension=raw["dimension"],
            boundary_res=int(res.get("boundary", 256)),
            radial_res=int(res.get("radial", 1024)),
            grid_res=int(res.get("grid", 32)),
            time_res=int(res.get("time", 0)),
            variant=raw.get("variant", "b"),
            pipeline=raw.get("pipeline", "means"),
            output=raw.get("output", "out"),
            seed=int(raw.get("seed", 0)),
            threads=int(raw.get("threads", 0)),
            kernel_route=ker.get("route", "auto"),
            kernel_x0=list(ker.get("x0", [])),
        )
        return cfg.validate()


def loads_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML ({exc})") from exc
    return RunConfig.from_dict(raw)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return loads_config(fh.read())


def dumps_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())

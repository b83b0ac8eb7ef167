"""Run configuration shared by the CLI and the verification harness."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError

DATA_DIR = Path(__file__).resolve().parent / "data"
PREC_ENV = "PFMIRROR_PREC"


@dataclass
class Config:
    prec: int = 256
    order: int = 40
    dmax_x: int = 15
    dmax_y: int = 12
    gkz_order: int = 20
    chart_order: int = 8
    snap_tol: float = 1e-8
    operator: Path | None = None
    tables_dir: Path = field(default_factory=lambda: DATA_DIR)
    paths: Path = field(default_factory=lambda: DATA_DIR / "paths.json")
    out_dir: Path = field(default_factory=Path.cwd)
    check_doubling: bool = False

    @classmethod
    def from_env(cls, **overrides) -> "Config":
        env = os.environ.get(PREC_ENV)
        if env is not None and overrides.get("prec") is None:
            try:
                overrides["prec"] = int(env)
            except ValueError:
                raise ConfigError(f"{PREC_ENV}={env!r} is not an integer") from None
        cfg = cls(**{k: v for k, v in overrides.items() if v is not None})
        cfg.validate()
        return cfg

    def with_degree(self, D: int) -> "Config":
        """Cap both genus-0/1 comparisons at degree D."""
        out = Config(**asdict(self))
        out.dmax_x = min(self.dmax_x, D)
        out.dmax_y = min(self.dmax_y, D)
        out.validate()
        return out

    def validate(self) -> None:
        for name in ("prec", "order", "dmax_x", "dmax_y", "gkz_order", "chart_order"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.prec < 32:
            raise ConfigError("prec must be at least 32 bits")
        if self.order < 6:
            raise ConfigError("series order must be at least 6")
        if self.gkz_order < 6:
            raise ConfigError("gkz_order must be at least 6")
        if not 0 < self.snap_tol < 0.5:
            raise ConfigError("snap_tol must lie in (0, 1/2)")
        for name in ("tables_dir", "paths", "operator"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, Path(v))
                if not Path(v).exists():
                    raise ConfigError(f"{name}: {v} does not exist")
        self.out_dir = Path(self.out_dir)

    def load_operator(self):
        from .pfode import DiffOperator, build_reye_operator
        if self.operator is None:
            return build_reye_operator()
        return DiffOperator.from_json(Path(self.operator).read_text())

    def to_json(self) -> dict:
        return {k: str(v) if isinstance(v, Path) else v for k, v in asdict(self).items()}

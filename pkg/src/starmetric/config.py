"""Space descriptors: (t-definer name) x (construction) x arity."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import UsageError
from .metric import (StarMetricSpace, euclidean_product_L, induced_metric, product_max,
                     product_T, signed_line_space)
from .tdefiner import DEFAULT_TOLERANCES, ToleranceConfig, get_tdefiner

CONSTRUCTIONS = ("induced", "signed_line", "product_max", "product_T", "euclidean_L")
FACTORS = ("induced", "signed_line")
SCALAR_CONSTRUCTIONS = ("induced", "signed_line")


@dataclass(frozen=True)
class SpaceConfig:
    """Declarative description of a built-in space.

    Product constructions use ``arity`` scalar factors. ``factor`` picks the
    factor space; by default lukasiewicz factors live on the whole real line
    (|b - a| is a metric there) and every other t-definer uses its induced
    metric on [0, inf).
    """

    tdefiner: str = "lukasiewicz"
    construction: str = "induced"
    arity: int = 1
    pseudometric: bool = False
    factor: Optional[str] = None

    def __post_init__(self):
        get_tdefiner(self.tdefiner)
        if self.construction not in CONSTRUCTIONS:
            raise UsageError(f"unknown construction {self.construction!r}; expected one of {CONSTRUCTIONS}")
        if int(self.arity) != self.arity or self.arity < 1:
            raise UsageError(f"arity must be a positive integer, got {self.arity!r}")
        if self.construction in SCALAR_CONSTRUCTIONS and self.arity != 1:
            raise UsageError(f"construction {self.construction!r} requires arity 1")
        if self.construction == "euclidean_L" and self.tdefiner != "lukasiewicz":
            raise UsageError("euclidean_L requires tdefiner 'lukasiewicz'")
        if self.construction == "signed_line" and self.tdefiner not in ("lukasiewicz", "s"):
            raise UsageError("signed_line requires tdefiner 'lukasiewicz' or 's'")
        if self.factor is not None and self.factor not in FACTORS:
            raise UsageError(f"unknown factor {self.factor!r}; expected one of {FACTORS}")

    @property
    def factor_kind(self) -> str:
        if self.factor is not None:
            return self.factor
        return "signed_line" if self.tdefiner == "lukasiewicz" else "induced"

    def build(self, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> StarMetricSpace:
        star = get_tdefiner(self.tdefiner)
        if self.construction == "induced":
            space = induced_metric(star, cfg)
        elif self.construction == "signed_line":
            space = signed_line_space(star)
        else:
            base = signed_line_space(star) if self.factor_kind == "signed_line" else induced_metric(star, cfg)
            factors = [base] * self.arity
            space = {"product_max": product_max, "product_T": product_T,
                     "euclidean_L": euclidean_product_L}[self.construction](factors)
        if self.pseudometric and not space.pseudometric:
            space = dataclasses.replace(space, pseudometric=True)
        return space

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, data: dict) -> "SpaceConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"config file {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


def resolve_config(file_values: Optional[dict], **flags) -> SpaceConfig:
    """Merge a config-file mapping with command-line flags; flags that are set win."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in flags.items() if v is not None})
    return SpaceConfig.from_mapping(merged)

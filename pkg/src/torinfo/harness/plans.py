"""Line-oriented ``key = value`` experiment plans.

Blank lines and ``#`` comments are ignored. List values are comma separated;
distribution entries are separated by ``;`` and written ``name`` or
``name(key=value, ...)``. Angles accept ``pi`` expressions such as ``7pi/8``.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..distributions import DISTRIBUTIONS
from ..index import BACKENDS

KINDS = ("accuracy", "perf", "complexity", "stability", "periodicity")


class PlanError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class ExperimentPlan:
    kind: str
    output: str = ""
    distributions: List[Tuple[str, Dict[str, float]]] = field(default_factory=list)
    metrics: List[str] = field(default_factory=lambda: ["mi", "te", "gte"])
    backends: List[str] = field(default_factory=lambda: ["vp"])
    N: List[int] = field(default_factory=lambda: [10_000])
    reps: int = 50
    k: int = 3
    seed: int = 0
    workers: int = 0  # 0: auto
    full_scale: bool = False
    # Vicsek
    M: int = 1000
    rho: float = 0.25
    s: float = 0.1
    tau: int = 5000
    eta: List[float] = field(default_factory=lambda: [1.0])
    # perf
    N_I: List[int] = field(default_factory=lambda: [10_000, 100_000, 1_000_000])
    timing_repeats: int = 3
    # complexity
    dims: List[int] = field(default_factory=lambda: [2, 3])
    # stability
    fraction: float = 0.1
    subsets: int = 10
    # periodicity
    mu: List[float] = field(default_factory=lambda: [math.pi, 7 * math.pi / 8])
    von_mises_set: str = "c"

    def validate(self):
        if self.kind not in KINDS:
            raise PlanError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.reps < 1:
            raise PlanError("reps must be >= 1")
        for name in ("metrics", "backends", "N", "eta", "N_I", "dims", "mu"):
            if not getattr(self, name):
                raise PlanError(f"{name} must not be empty")
        if self.kind == "accuracy" and not self.distributions:
            raise PlanError("accuracy plans need at least one distribution")
        if not 0 < self.fraction <= 1:
            raise PlanError("fraction must be in (0, 1]")
        return self

    def as_dict(self) -> dict:
        return asdict(self)


_NUM = re.compile(r"^([-+])?(\d+\.?\d*(?:e[-+]?\d+)?|\.\d+(?:e[-+]?\d+)?)?(pi)?(?:/(\d+\.?\d*))?$")


def parse_number(text: str) -> float:
    """Float with optional ``pi`` factor: ``0.5``, ``2pi``, ``7pi/8``, ``-pi``."""
    t = re.sub(r"[\s*]", "", text.lower())
    m = _NUM.match(t)
    if not m or (m.group(2) is None and m.group(3) is None):
        raise ValueError(f"not a number: {text!r}")
    sign, num, pi, den = m.groups()
    value = float(num) if num else 1.0
    if pi:
        value *= math.pi
    if den:
        value /= float(den)
    return -value if sign == "-" else value


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(conv):
    return lambda text: [conv(p) for p in text.split(",") if p.strip()]


def _choice(options):
    def conv(text):
        value = text.strip().lower()
        if value not in options:
            raise ValueError(f"unknown value {value!r}; expected one of "
                             f"{', '.join(sorted(options))}")
        return value
    return conv


_ENTRY = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


def parse_distributions(text: str):
    out = []
    for entry in text.split(";"):
        if not entry.strip():
            continue
        m = _ENTRY.match(entry)
        if not m:
            raise ValueError(f"bad distribution entry {entry.strip()!r}")
        params = {}
        for kv in (m.group(2) or "").split(","):
            if not kv.strip():
                continue
            key, sep, val = kv.partition("=")
            if not sep:
                raise ValueError(f"bad parameter {kv.strip()!r}")
            key = key.strip()
            params[key] = val.strip() if key == "set" else parse_number(val)
        name = m.group(1).lower()
        if name not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {name!r}")
        out.append((name, params))
    return out


_FIELDS = {
    "kind": _choice(KINDS),
    "output": str.strip,
    "distributions": parse_distributions,
    "metrics": _list(_choice(("mi", "te", "gte"))),
    "backends": _list(_choice(BACKENDS)),
    "N": _list(_int),
    "reps": _int,
    "k": _int,
    "seed": _int,
    "workers": _int,
    "full_scale": _bool,
    "M": _int,
    "rho": parse_number,
    "s": parse_number,
    "tau": _int,
    "eta": _list(parse_number),
    "N_I": _list(_int),
    "timing_repeats": _int,
    "dims": _list(_int),
    "fraction": parse_number,
    "subsets": _int,
    "mu": _list(parse_number),
    "von_mises_set": _choice(("a", "b", "c")),
}


def parse_plan(text: str) -> ExperimentPlan:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep:
            raise PlanError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in _FIELDS:
            raise PlanError(f"unknown key {key!r}", lineno)
        if key in values:
            raise PlanError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = _FIELDS[key](val)
        except ValueError as exc:
            raise PlanError(f"{key}: {exc}", lineno) from None
    if "kind" not in values:
        raise PlanError("plan has no 'kind'")
    return ExperimentPlan(**values).validate()


def bundled_plans() -> List[str]:
    root = resources.files(__package__) / "plans"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".plan"))


def load_plan(source: Union[str, Path]) -> ExperimentPlan:
    """Parse a plan file, or a bundled plan given by bare name."""
    path = Path(source)
    if path.is_file():
        return parse_plan(path.read_text(encoding="utf-8"))
    name = str(source)
    if name in bundled_plans():
        text = (resources.files(__package__) / "plans" / f"{name}.plan").read_text(
            encoding="utf-8")
        return parse_plan(text)
    raise FileNotFoundError(f"no plan file or bundled plan named {name!r}")

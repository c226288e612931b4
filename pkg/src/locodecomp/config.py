"""Run configuration: key = value files plus command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .decompose import SurrogateConfig
from .errors import ConfigError
from .regress import EvalScheme

_SCHEMES = ("in-sample", "kfold")
_SHAPLEY_METHODS = ("auto", "exact", "mc")

# Feature counts above this flip the "auto" Shapley method from exact
# enumeration to Monte Carlo.
AUTO_EXACT_LIMIT = 12


@dataclass
class RunConfig:
    """Validated settings for one analysis run."""

    input: str
    target: str
    seed: int
    ignore: tuple[str, ...] = ()
    group: str | None = None
    class_column: str | None = None
    scheme: str = "in-sample"
    kfold: int = 5
    drop_missing: bool = False
    n_surrogates: int = 100
    alpha: float = 0.05
    shapley_method: str = "auto"
    n_permutations: int = 2000
    workers: int = 1
    outdir: str = "out"

    def __post_init__(self):
        if not self.input:
            raise ConfigError("'input' is required")
        if not self.target:
            raise ConfigError("'target' is required")
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"'scheme' must be one of {_SCHEMES}, got '{self.scheme}'")
        if self.scheme == "kfold" and self.kfold < 2:
            raise ConfigError("'kfold' must be at least 2")
        if self.n_surrogates < 20:
            raise ConfigError("'n_surrogates' must be at least 20")
        if not 0.0 < self.alpha < 0.5:
            raise ConfigError("'alpha' must lie in (0, 0.5)")
        if self.shapley_method not in _SHAPLEY_METHODS:
            raise ConfigError(
                f"'shapley_method' must be one of {_SHAPLEY_METHODS},"
                f" got '{self.shapley_method}'"
            )
        if self.n_permutations < 100:
            raise ConfigError("'n_permutations' must be at least 100")
        if self.workers < 1:
            raise ConfigError("'workers' must be at least 1")
        if self.group and self.group not in self.ignore:
            raise ConfigError("'group' must name a column listed in 'ignore'")
        if self.class_column and self.class_column not in self.ignore:
            raise ConfigError("'class_column' must name a column listed in 'ignore'")

    def eval_scheme(self) -> EvalScheme:
        if self.scheme == "kfold":
            return EvalScheme.kfold(self.kfold, self.seed)
        return EvalScheme.in_sample()

    def surrogate_config(self) -> SurrogateConfig:
        return SurrogateConfig(self.n_surrogates, self.alpha, self.seed)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_value(key: str, text: str):
    text = text.strip()
    if key in ("input", "target", "scheme", "shapley_method", "outdir", "group", "class_column"):
        return text
    if key == "ignore":
        return tuple(part.strip() for part in text.split(",") if part.strip())
    if key == "drop_missing":
        try:
            return _BOOL_WORDS[text.lower()]
        except KeyError:
            raise ConfigError(f"'{key}' must be true or false, got '{text}'") from None
    if key == "alpha":
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"'{key}' must be a number, got '{text}'") from None
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"'{key}' must be an integer, got '{text}'") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse 'key = value' lines; '#' starts a comment, blank lines skipped."""
    known = {f.name for f in fields(RunConfig)}
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got '{stripped}'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        out[key] = _parse_value(key, value)
    return out


def load_run_config(path, **overrides) -> RunConfig:
    """Read a config file and apply overrides (seed, workers, outdir, ...).

    The seed must come from the file or an override; there is no default,
    so every run's randomness is pinned explicitly.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw = parse_config_text(text, source=str(path))
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    if "seed" not in raw:
        raise ConfigError("'seed' is required (set it in the config or pass --seed)")
    for key in ("input", "target"):
        if key not in raw:
            raise ConfigError(f"'{key}' is required")
    try:
        return RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None

"""Run configuration read from an INI-style file.

    [dataset]          path, test_path, generator, n, noise, seed, m, d, standardize
    [kernel]           family, bandwidth, degree, offset, trace_normalize    (defaults for every view)
    [kernel.<view>]    same keys, for one view; [kernel.concat] configures the concatenated view
    [manifold]         kind, k, m, dim_threshold, bandwidth
    [objective]        gamma_a, gamma_i, gamma_theta, gamma_beta, loss, mu, max_inner_iters, max_outer_rounds,
                       tol_inner, tol_outer
    [run]              method, out, seed, workers, fractions, repeats, label_fraction, test_fraction,
                       validation_fraction, tune_fraction, grid_exp, tune_keys, cache_dir

`bandwidth = median` and `m = auto` (also `k = auto`) select the data-driven defaults. Relative paths are resolved
against the directory holding the config file.
"""
import configparser
import io
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import AbstractSet, Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, TypeVar

from mhrlearn.dataset import GENERATORS, GeneratorSpec
from mhrlearn.evaluation import DEFAULT_FRACTIONS, DEFAULT_GRID_EXPONENTS, TUNABLE_KEYS, SweepSettings, default_method
from mhrlearn.kernels import KernelFamily, KernelSpec, KernelSpecError
from mhrlearn.manifold import ManifoldKind, ManifoldSettings
from mhrlearn.solvers import CONCAT_VIEW_NAME, LossKind, ObjectiveConfig

_T = TypeVar("_T")

DEFAULT_GENERATOR = GeneratorSpec(name="two_moons_views", n=200)

_DATASET_KEYS = {"path", "test_path", "generator", "n", "noise", "seed", "m", "d", "standardize"}
_KERNEL_KEYS = {"family", "bandwidth", "degree", "offset", "trace_normalize"}
_MANIFOLD_KEYS = {"kind", "k", "m", "dim_threshold", "bandwidth"}
_OBJECTIVE_KEYS = {f.name for f in fields(ObjectiveConfig)}
_RUN_KEYS = {
    "method",
    "out",
    "seed",
    "workers",
    "fractions",
    "repeats",
    "label_fraction",
    "test_fraction",
    "validation_fraction",
    "tune_fraction",
    "grid_exp",
    "tune_keys",
    "cache_dir",
}
_KERNEL_SECTION_PREFIX = "kernel."


class ConfigError(Exception):
    """Raised when a run configuration has an unknown section or key, or a value that does not parse."""


def parse_exponents(text: str) -> Tuple[int, ...]:
    """`-10..10` (inclusive range) or a comma-separated list of integers."""
    text = text.strip()
    try:
        if ".." in text:
            low, high = (int(part) for part in text.split("..", 1))
            if high < low:
                raise ConfigError(f"empty exponent range {text}")
            return tuple(range(low, high + 1))
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"exponents must look like -10..10 or -2,-1,0, got {text!r}")


def parse_fractions(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"fractions must be a comma-separated list of numbers, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs; every field has a default so an empty file trains on two moons."""

    dataset_path: Optional[Path] = None
    test_path: Optional[Path] = None
    generator: GeneratorSpec = DEFAULT_GENERATOR
    standardize: bool = False
    kernel: KernelSpec = KernelSpec()
    view_kernels: Mapping[str, KernelSpec] = field(default_factory=dict)
    manifold: ManifoldSettings = ManifoldSettings()
    objective: ObjectiveConfig = ObjectiveConfig()
    methods: Tuple[str, ...] = ()
    out: Path = Path("mhr-out")
    seed: int = 0
    workers: int = 1
    fractions: Tuple[float, ...] = DEFAULT_FRACTIONS
    repeats: int = 10
    label_fraction: Optional[float] = None
    test_fraction: float = 0.5
    validation_fraction: float = 0.1
    tune_fraction: float = 0.1
    grid_exp: Tuple[int, ...] = DEFAULT_GRID_EXPONENTS
    tune_keys: Tuple[str, ...] = ("gamma_a", "gamma_i")
    cache_dir: Optional[Path] = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.label_fraction is not None and not 0.0 < self.label_fraction <= 1.0:
            raise ConfigError(f"label_fraction must lie in (0, 1], got {self.label_fraction}")
        unknown = set(self.tune_keys) - set(TUNABLE_KEYS)
        if unknown:
            raise ConfigError(f"tune_keys must be drawn from {TUNABLE_KEYS}, got {sorted(unknown)}")

    @property
    def method_tags(self) -> Tuple[str, ...]:
        """Configured method tags, or the multiview method matching the manifold kind and loss."""
        if self.methods:
            return self.methods
        return (default_method(self.manifold.kind, self.objective.loss),)

    @property
    def concat_spec(self) -> KernelSpec:
        return self.view_kernels.get(CONCAT_VIEW_NAME, self.kernel)

    def kernel_specs(self, view_names: Sequence[str]) -> List[KernelSpec]:
        unknown = set(self.view_kernels) - set(view_names) - {CONCAT_VIEW_NAME}
        if unknown:
            raise ConfigError(f"[kernel.<view>] sections name views the dataset lacks: {sorted(unknown)}")
        return [self.view_kernels.get(name, self.kernel) for name in view_names]

    def sweep_settings(self) -> SweepSettings:
        return SweepSettings(
            fractions=self.fractions,
            repeats=self.repeats,
            base_seed=self.seed,
            test_fraction=self.test_fraction,
            validation_fraction=self.validation_fraction,
            tune_fraction=self.tune_fraction,
            standardize=self.standardize,
            workers=self.workers,
            cache_dir=self.cache_dir,
        )

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Command-line values win over file values; None means the flag was not given."""
        given = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **given) if given else self

    def to_dict(self) -> Dict[str, Any]:
        """Plain-data rendering for run manifests."""

        def _kernel(spec: KernelSpec) -> Dict[str, Any]:
            return {**asdict(spec), "family": spec.family.name.lower()}

        return {
            "dataset": {
                "path": None if self.dataset_path is None else str(self.dataset_path),
                "test_path": None if self.test_path is None else str(self.test_path),
                "generator": None if self.dataset_path is not None else asdict(self.generator),
                "standardize": self.standardize,
            },
            "kernel": _kernel(self.kernel),
            "view_kernels": {name: _kernel(spec) for name, spec in sorted(self.view_kernels.items())},
            "manifold": {**asdict(self.manifold), "kind": self.manifold.kind.name.lower()},
            "objective": {**asdict(self.objective), "loss": self.objective.loss.name.lower()},
            "run": {
                "methods": list(self.method_tags),
                "seed": self.seed,
                "fractions": list(self.fractions),
                "repeats": self.repeats,
                "label_fraction": self.label_fraction,
                "test_fraction": self.test_fraction,
                "validation_fraction": self.validation_fraction,
                "tune_fraction": self.tune_fraction,
                "grid_exp": list(self.grid_exp),
                "tune_keys": list(self.tune_keys),
            },
        }


def _convert(section: str, key: str, raw: str, parse: Callable[[str], _T]) -> _T:
    try:
        return parse(raw)
    except (ValueError, KernelSpecError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw}: {exc}")


def _optional(parse: Callable[[str], _T], *sentinels: str) -> Callable[[str], Optional[_T]]:
    def _parse(raw: str) -> Optional[_T]:
        return None if raw.strip().lower() in sentinels else parse(raw)

    return _parse


def _boolean(raw: str) -> bool:
    value = raw.strip().lower()
    if value not in configparser.ConfigParser.BOOLEAN_STATES:
        raise ValueError(f"not a boolean: {raw}")
    return configparser.ConfigParser.BOOLEAN_STATES[value]


def _check_keys(section: str, options: Mapping[str, str], allowed: AbstractSet[str]) -> None:
    unknown = set(options) - allowed
    if unknown:
        raise ConfigError(f"[{section}] unknown keys {sorted(unknown)}, expected some of {sorted(allowed)}")


def _kernel_spec(section: str, options: Mapping[str, str]) -> KernelSpec:
    _check_keys(section, options, _KERNEL_KEYS)
    values: Dict[str, Any] = {}
    parsers: Dict[str, Callable[[str], Any]] = {
        "family": KernelFamily.from_name,
        "bandwidth": _optional(float, "median", "auto"),
        "degree": int,
        "offset": float,
        "trace_normalize": _boolean,
    }
    for key, raw in options.items():
        values[key] = _convert(section, key, raw, parsers[key])
    try:
        return KernelSpec(**values)
    except KernelSpecError as exc:
        raise ConfigError(f"[{section}] {exc}")


def _path(base: Path) -> Callable[[str], Path]:
    def _parse(raw: str) -> Path:
        path = Path(raw.strip()).expanduser()
        return path if path.is_absolute() else base / path

    return _parse


def parse_run_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc))

    known = {"dataset", "kernel", "manifold", "objective", "run"}
    for section in parser.sections():
        if section not in known and not section.startswith(_KERNEL_SECTION_PREFIX):
            raise ConfigError(f"unknown section [{section}], expected one of {sorted(known)} or [kernel.<view>]")

    def _section(name: str, allowed: AbstractSet[str]) -> Dict[str, str]:
        options = dict(parser[name]) if parser.has_section(name) else {}
        _check_keys(name, options, allowed)
        return options

    values: Dict[str, Any] = {}
    as_path = _path(base_dir)

    dataset = _section("dataset", _DATASET_KEYS)
    if "path" in dataset:
        values["dataset_path"] = _convert("dataset", "path", dataset["path"], as_path)
    if "test_path" in dataset:
        values["test_path"] = _convert("dataset", "test_path", dataset["test_path"], as_path)
    if "standardize" in dataset:
        values["standardize"] = _convert("dataset", "standardize", dataset["standardize"], _boolean)
    generator_fields: Dict[str, Any] = {}
    for key, parse in (("generator", str.strip), ("n", int), ("noise", float), ("seed", int), ("m", int), ("d", int)):
        if key in dataset:
            generator_fields["name" if key == "generator" else key] = _convert("dataset", key, dataset[key], parse)
    if generator_fields.get("name", DEFAULT_GENERATOR.name) not in GENERATORS:
        raise ConfigError(f"[dataset] generator must be one of {sorted(GENERATORS)}, got {generator_fields['name']}")
    try:
        values["generator"] = replace(DEFAULT_GENERATOR, **generator_fields)
    except ValueError as exc:
        raise ConfigError(f"[dataset] {exc}")

    kernel_defaults = _section("kernel", _KERNEL_KEYS)
    values["kernel"] = _kernel_spec("kernel", kernel_defaults)
    view_kernels = {}
    for section in parser.sections():
        if section.startswith(_KERNEL_SECTION_PREFIX):
            view_name = section[len(_KERNEL_SECTION_PREFIX) :]
            overrides = dict(parser[section])
            _check_keys(section, overrides, _KERNEL_KEYS)
            view_kernels[view_name] = _kernel_spec(section, {**kernel_defaults, **overrides})
    values["view_kernels"] = view_kernels

    manifold = _section("manifold", _MANIFOLD_KEYS)
    manifold_parsers: Dict[str, Callable[[str], Any]] = {
        "kind": ManifoldKind.from_name,
        "k": _optional(int, "auto"),
        "m": _optional(int, "auto"),
        "dim_threshold": float,
        "bandwidth": _optional(float, "median", "auto"),
    }
    try:
        values["manifold"] = ManifoldSettings(
            **{key: _convert("manifold", key, raw, manifold_parsers[key]) for key, raw in manifold.items()}
        )
    except ValueError as exc:
        raise ConfigError(f"[manifold] {exc}")

    objective = _section("objective", _OBJECTIVE_KEYS)
    objective_values: Dict[str, Any] = {}
    for key, raw in objective.items():
        if key == "loss":
            objective_values[key] = _convert("objective", key, raw, LossKind.from_name)
        elif key in ("max_inner_iters", "max_outer_rounds"):
            objective_values[key] = _convert("objective", key, raw, int)
        else:
            objective_values[key] = _convert("objective", key, raw, float)
    try:
        values["objective"] = ObjectiveConfig(**objective_values)
    except ValueError as exc:
        raise ConfigError(f"[objective] {exc}")

    run = _section("run", _RUN_KEYS)
    run_parsers: Dict[str, Tuple[str, Callable[[str], Any]]] = {
        "method": ("methods", lambda raw: tuple(tag.strip() for tag in raw.split(",") if tag.strip())),
        "out": ("out", as_path),
        "seed": ("seed", int),
        "workers": ("workers", int),
        "fractions": ("fractions", parse_fractions),
        "repeats": ("repeats", int),
        "label_fraction": ("label_fraction", float),
        "test_fraction": ("test_fraction", float),
        "validation_fraction": ("validation_fraction", float),
        "tune_fraction": ("tune_fraction", float),
        "grid_exp": ("grid_exp", parse_exponents),
        "tune_keys": ("tune_keys", lambda raw: tuple(k.strip() for k in raw.split(",") if k.strip())),
        "cache_dir": ("cache_dir", as_path),
    }
    for key, raw in run.items():
        name, parse = run_parsers[key]
        values[name] = _convert("run", key, raw, parse)

    return RunConfig(**values)


def load_run_config(path: Optional[Path]) -> RunConfig:
    """Read a config file; without one every field keeps its default."""
    if path is None:
        return RunConfig()
    if not path.is_file():
        raise FileNotFoundError(f"not found: {path}")
    return parse_run_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def objective_section(config: ObjectiveConfig) -> str:
    """An `[objective]` section holding every field of `config`, ready to paste into a run config."""
    parser = configparser.ConfigParser(interpolation=None)
    parser["objective"] = {
        f.name: getattr(config, f.name).name.lower() if f.name == "loss" else repr(getattr(config, f.name))
        for f in fields(ObjectiveConfig)
    }
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()

"""Experiment configuration: YAML/JSON file plus command-line overrides."""

import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from ..representations import METHODS

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "PRESETS"]

# dataset presets fill in defaults that the config file may still override
PRESETS = {
    "mining": {"kind": "cox-1d", "samples": 20000},
    "synthetic": {"kind": "regression"},
}

# methods that rely on a finite maximum of every likelihood term
TAYLOR_METHODS = ("surr-taylor", "post-taylor")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    methods: list = field(default_factory=lambda: ["surr-site"])
    dataset: dict = field(default_factory=dict)
    chains: int = 10
    burn: int = 1000
    samples: int = 5000
    latent_updates: int = 10
    seed: int = 0
    prior: dict = field(default_factory=lambda: {"mean": 0.0, "sd": 3.0, "slots": {}})
    fixed: dict = field(default_factory=dict)
    learn_noise: bool = False
    noise_var: float = 0.09
    slice_width: float = 10.0
    max_shrink: int = 100
    redraw_g: str = "sweep"
    order: str = "fixed"
    out: str = "runs"
    jobs: int = 1
    record_time: bool = True

    def validate(self):
        if isinstance(self.methods, str):
            self.methods = [m.strip() for m in self.methods.split(",") if m.strip()]
        if not self.methods:
            raise ConfigError("no method given")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError("unknown method %r (choose from %s)" % (m, ", ".join(METHODS)))
        if not self.dataset:
            raise ConfigError("no dataset given")
        kind = self.dataset_kind
        if kind == "classification":
            bad = [m for m in self.methods if m in TAYLOR_METHODS]
            if bad:
                raise ConfigError("%s do not apply to logistic likelihoods" % ", ".join(bad))
        for name in ("chains", "jobs", "max_shrink"):
            if int(getattr(self, name)) < 1:
                raise ConfigError("%s must be >= 1" % name)
        for name in ("burn", "samples", "latent_updates"):
            if int(getattr(self, name)) < 0:
                raise ConfigError("%s must be >= 0" % name)
        if not float(self.slice_width) > 0:
            raise ConfigError("slice_width must be positive")
        if not float(self.noise_var) > 0:
            raise ConfigError("noise_var must be positive")
        sd = float(self.prior.get("sd", 3.0))
        if not (sd > 0 and sd != float("inf")):
            raise ConfigError("prior sd must be finite and positive")
        for name, pair in self.prior.get("slots", {}).items():
            if len(pair) != 2 or not (0 < float(pair[1]) < float("inf")):
                raise ConfigError("prior for slot %r must be [mean, finite positive sd]" % name)
        if self.redraw_g not in ("sweep", "slot"):
            raise ConfigError("redraw_g must be 'sweep' or 'slot'")
        if self.order not in ("fixed", "random"):
            raise ConfigError("order must be 'fixed' or 'random'")
        return self

    @property
    def dataset_kind(self):
        kind = self.dataset.get("kind")
        if kind is None and self.dataset.get("preset") in PRESETS:
            kind = PRESETS[self.dataset["preset"]]["kind"]
        if kind is None:
            raise ConfigError("dataset needs a 'kind' or a known 'preset'")
        return kind

    def to_dict(self):
        return asdict(self)


def load_config(path=None, overrides=None):
    """Merge (preset defaults) <- (config file) <- (non-None overrides).

    Without an explicit seed, ``LGM_SEED`` from the environment is used.
    """
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except yaml.YAMLError as err:
            raise ConfigError("cannot parse %s: %s" % (path, err)) from None
        if not isinstance(raw, dict):
            raise ConfigError("%s: top level must be a mapping" % path)
    if "method" in raw:
        raw.setdefault("methods", raw.pop("method"))
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "method" in overrides:
        overrides["methods"] = overrides.pop("method")

    merged = {}
    dataset = dict(overrides.get("dataset", raw.get("dataset", {})) or {})
    preset = dataset.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("unknown dataset preset %r" % (preset,))
        for k, v in PRESETS[preset].items():
            if k == "kind":
                dataset.setdefault("kind", v)
            else:
                merged[k] = v
    merged.update(raw)
    merged.update(overrides)
    merged["dataset"] = dataset
    if "seed" not in merged and os.environ.get("LGM_SEED"):
        try:
            merged["seed"] = int(os.environ["LGM_SEED"])
        except ValueError:
            raise ConfigError("LGM_SEED must be an integer") from None

    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    try:
        cfg = ExperimentConfig(**merged)
    except TypeError as err:
        raise ConfigError(str(err)) from None
    return cfg.validate()

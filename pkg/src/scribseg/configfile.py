"""Flat key=value configuration shared by the CLI subcommands.

One key per line, '#' starts a comment, blank lines are skipped. Every
key of LossWeights, the kernel configs, and TrainConfig is reachable, so
a config file plus flag overrides can reproduce any run. Unknown keys
are rejected rather than ignored; silent typos are worse than errors.
"""

from .errors import ConfigError
from .losses import LossWeights, LscKernelConfig, SsimConfig
from .training import TrainConfig


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_tuple(text):
    return tuple(float(part) for part in text.split(",") if part.strip())


# key -> (parser, default, help)
KEY_SPECS = {
    "mu": (float, LossWeights.mu, "affinity loss weight"),
    "beta": (float, LossWeights.beta, "local coherence loss weight"),
    "alpha_ssc": (float, LossWeights.alpha_ssc,
                  "structural share of the scale-consistency loss"),
    "lambda_stage": (_parse_float_tuple, LossWeights.lambda_stage,
                     "comma-separated auxiliary stage weights"),
    "lsc_radius": (int, LscKernelConfig.radius, "coherence window radius"),
    "lsc_sigma_color": (float, LscKernelConfig.sigma_color,
                        "color bandwidth of the coherence kernel"),
    "lsc_sigma_pos": (float, LscKernelConfig.sigma_pos,
                      "position bandwidth of the coherence kernel"),
    "ssim_window": (int, SsimConfig.window, "structural-similarity window"),
    "ssim_sigma": (float, SsimConfig.sigma,
                   "Gaussian sigma of the structural window"),
    "clamp_negative": (_parse_bool, False,
                       "clamp negative similarities when building graphs"),
    "epochs": (int, TrainConfig.epochs, "training epochs"),
    "batch_size": (int, TrainConfig.batch_size, "scenes per SGD step"),
    "lr_min": (float, TrainConfig.lr_min, "schedule floor learning rate"),
    "lr_max": (float, TrainConfig.lr_max, "schedule peak learning rate"),
    "momentum": (float, TrainConfig.momentum, "SGD momentum"),
    "weight_decay": (float, TrainConfig.weight_decay, "L2 weight decay"),
    "warmup_frac": (float, TrainConfig.warmup_frac,
                    "fraction of steps spent warming up"),
    "seed": (int, TrainConfig.seed, "master seed"),
    "input_size": (int, TrainConfig.input_size, "scene side length"),
    "hidden_width": (int, TrainConfig.hidden_width, "head hidden width"),
    "aux_heads": (int, TrainConfig.aux_heads, "auxiliary head count"),
    "use_ssc": (_parse_bool, TrainConfig.use_ssc,
                "enable the scale-consistency term"),
    "flip_augmentation": (_parse_bool, TrainConfig.flip_augmentation,
                          "random horizontal flips during training"),
}


def defaults():
    return {key: spec[1] for key, spec in KEY_SPECS.items()}


def parse_config(path):
    """Read one key=value file into a validated dict."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in KEY_SPECS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            parser = KEY_SPECS[key][0]
            try:
                values[key] = parser(text)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def merged(config_path=None, overrides=None):
    """defaults <- config file <- non-None overrides."""
    values = defaults()
    if config_path is not None:
        values.update(parse_config(config_path))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in KEY_SPECS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = val
    return values


def weights_from(values) -> LossWeights:
    return LossWeights(
        mu=values["mu"], beta=values["beta"],
        alpha_ssc=values["alpha_ssc"],
        lambda_stage=tuple(values["lambda_stage"]))


def lsc_from(values) -> LscKernelConfig:
    return LscKernelConfig(
        radius=values["lsc_radius"],
        sigma_color=values["lsc_sigma_color"],
        sigma_pos=values["lsc_sigma_pos"])


def ssim_from(values) -> SsimConfig:
    return SsimConfig(window=values["ssim_window"],
                      sigma=values["ssim_sigma"])


def train_from(values) -> TrainConfig:
    return TrainConfig(
        epochs=values["epochs"], batch_size=values["batch_size"],
        lr_min=values["lr_min"], lr_max=values["lr_max"],
        momentum=values["momentum"], weight_decay=values["weight_decay"],
        warmup_frac=values["warmup_frac"], seed=values["seed"],
        input_size=values["input_size"], hidden_width=values["hidden_width"],
        aux_heads=values["aux_heads"], use_ssc=values["use_ssc"],
        flip_augmentation=values["flip_augmentation"])

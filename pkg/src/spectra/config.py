"""Scenario configuration: file format, validation, and presets.

Config files are flat ``key = value`` lines with ``#`` comments.  The
same ScenarioConfig drives both algorithms; optional blocks switch on
message loss, a mid-run input disturbance, and a grow-shrink churn
phase.  Presets reproduce the standard experiment grid and are stored
as config text so the file parser is the single source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class ConfigError(ValueError):
    """Invalid config file or invalid field combination."""


@dataclass(frozen=True)
class Disturbance:
    """One-shot input change: at the start of ``round``, a sampled
    ``fraction`` of live nodes multiply their input by 1 + ``increase``.
    Only nodes whose new value stays within the current global value
    range are eligible, so the extremes never move."""

    round: int
    fraction: float
    increase: float


@dataclass(frozen=True)
class ChurnSchedule:
    """Grow-plateau-shrink membership schedule.

    From ``start`` the network gains round(initial n * rate) nodes per
    round until it holds ``peak`` nodes, stays there for ``plateau``
    rounds, then loses the same number per round until back at the
    initial size.  Departures are silent; arrivals attach with the
    scenario's average degree.
    """

    start: int
    rate: float
    peak: int
    plateau: int


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a trial needs besides the trial index."""

    algorithm: str
    n: int
    avg_degree: float
    k: int
    rounds: int
    trials: int
    seed: int
    dist_mean: float
    dist_variance: float
    loss_rate: float = 0.0
    failure_timeout: int = 5
    disturbance: Optional[Disturbance] = None
    churn: Optional[ChurnSchedule] = None
    adam2_range: "Optional[tuple[float, float]]" = None
    # Programmatic extras, not part of the file format: fixed inputs
    # instead of sampled ones, and scoring against global labels.
    values: "Optional[tuple[float, ...]]" = None
    ks_labels: str = "own"


_INT_KEYS = {
    "n", "k", "rounds", "trials", "seed",
    "disturbance_round", "churn_start", "churn_peak", "churn_plateau",
    "failure_timeout",
}
_FLOAT_KEYS = {
    "avg_degree", "loss_rate", "dist_mean", "dist_variance",
    "disturbance_fraction", "disturbance_increase", "churn_rate",
    "adam2_min", "adam2_max",
}
_STR_KEYS = {"algorithm"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

_REQUIRED = (
    "algorithm", "n", "avg_degree", "k", "rounds", "trials", "seed",
    "dist_mean", "dist_variance",
)
_DISTURBANCE_KEYS = (
    "disturbance_round", "disturbance_fraction", "disturbance_increase",
)
_CHURN_KEYS = ("churn_start", "churn_rate", "churn_peak", "churn_plateau")
_ADAM2_KEYS = ("adam2_min", "adam2_max")


def parse_config(text: str) -> ScenarioConfig:
    """Parse config text; raises ConfigError with the offending line."""
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                raw[key] = int(value)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: {key} needs an integer, got {value!r}"
                ) from None
        elif key in _FLOAT_KEYS:
            try:
                raw[key] = float(value)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: {key} needs a number, got {value!r}"
                ) from None
        else:
            raw[key] = value

    missing = [key for key in _REQUIRED if key not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    disturbance = _group(raw, _DISTURBANCE_KEYS, "disturbance")
    churn = _group(raw, _CHURN_KEYS, "churn")
    adam2 = _group(raw, _ADAM2_KEYS, "adam2")

    config = ScenarioConfig(
        algorithm=raw["algorithm"],
        n=raw["n"],
        avg_degree=raw["avg_degree"],
        k=raw["k"],
        rounds=raw["rounds"],
        trials=raw["trials"],
        seed=raw["seed"],
        dist_mean=raw["dist_mean"],
        dist_variance=raw["dist_variance"],
        loss_rate=raw.get("loss_rate", 0.0),
        failure_timeout=raw.get("failure_timeout", 5),
        disturbance=Disturbance(*disturbance) if disturbance else None,
        churn=ChurnSchedule(*churn) if churn else None,
        adam2_range=tuple(adam2) if adam2 else None,
    )
    validate_config(config)
    return config


def _group(raw: dict, keys: tuple, label: str) -> Optional[tuple]:
    present = [key for key in keys if key in raw]
    if not present:
        return None
    if len(present) != len(keys):
        absent = [key for key in keys if key not in raw]
        raise ConfigError(
            f"incomplete {label} block: missing {', '.join(absent)}"
        )
    return tuple(raw[key] for key in keys)


def validate_config(config: ScenarioConfig) -> None:
    """Check field ranges and cross-field consistency."""
    if config.algorithm not in ("spectra", "adam2"):
        raise ConfigError(f"unknown algorithm {config.algorithm!r}")
    if config.n < 2:
        raise ConfigError("n must be at least 2")
    if config.avg_degree < 2:
        raise ConfigError("avg_degree must be at least 2")
    if config.k < 2:
        raise ConfigError("k must be at least 2")
    if config.rounds < 0:
        raise ConfigError("rounds must not be negative")
    if config.trials < 1:
        raise ConfigError("trials must be at least 1")
    if config.seed < 0:
        raise ConfigError("seed must not be negative")
    if not 0.0 <= config.loss_rate <= 1.0:
        raise ConfigError("loss_rate must lie in [0, 1]")
    if config.dist_variance < 0:
        raise ConfigError("dist_variance must not be negative")
    if config.failure_timeout < 0:
        raise ConfigError("failure_timeout must not be negative")
    if config.disturbance is not None:
        d = config.disturbance
        if d.round < 0:
            raise ConfigError("disturbance_round must not be negative")
        if not 0.0 <= d.fraction <= 1.0:
            raise ConfigError("disturbance_fraction must lie in [0, 1]")
    if config.churn is not None:
        c = config.churn
        if c.start < 0:
            raise ConfigError("churn_start must not be negative")
        if not 0.0 < c.rate <= 1.0:
            raise ConfigError("churn_rate must lie in (0, 1]")
        if c.peak < config.n:
            raise ConfigError("churn_peak must not be below n")
        if c.plateau < 0:
            raise ConfigError("churn_plateau must not be negative")
        if round(config.n * c.rate) < 1:
            raise ConfigError("churn_rate too small to change membership")
    if config.adam2_range is not None:
        lo, hi = config.adam2_range
        if not lo < hi:
            raise ConfigError("adam2_min must be below adam2_max")
    if config.values is not None:
        if len(config.values) != config.n:
            raise ConfigError("values list must have exactly n entries")
    if config.ks_labels not in ("own", "global"):
        raise ConfigError(f"unknown ks_labels mode {config.ks_labels!r}")


def config_text(config: ScenarioConfig) -> str:
    """Canonical config echo; parses back to an equal ScenarioConfig."""
    lines = [
        f"algorithm = {config.algorithm}",
        f"n = {config.n}",
        f"avg_degree = {config.avg_degree!r}",
        f"k = {config.k}",
        f"rounds = {config.rounds}",
        f"trials = {config.trials}",
        f"seed = {config.seed}",
        f"dist_mean = {config.dist_mean!r}",
        f"dist_variance = {config.dist_variance!r}",
        f"loss_rate = {config.loss_rate!r}",
        f"failure_timeout = {config.failure_timeout}",
    ]
    if config.disturbance is not None:
        d = config.disturbance
        lines += [
            f"disturbance_round = {d.round}",
            f"disturbance_fraction = {d.fraction!r}",
            f"disturbance_increase = {d.increase!r}",
        ]
    if config.churn is not None:
        c = config.churn
        lines += [
            f"churn_start = {c.start}",
            f"churn_rate = {c.rate!r}",
            f"churn_peak = {c.peak}",
            f"churn_plateau = {c.plateau}",
        ]
    if config.adam2_range is not None:
        lines += [
            f"adam2_min = {config.adam2_range[0]!r}",
            f"adam2_max = {config.adam2_range[1]!r}",
        ]
    return "\n".join(lines) + "\n"


def _preset(algorithm: str, seed: int, rounds: int, extra: str = "",
            n: int = 1000, avg_degree: float = 3.0, trials: int = 30) -> str:
    text = (
        f"algorithm = {algorithm}\n"
        f"n = {n}\n"
        f"avg_degree = {avg_degree!r}\n"
        "k = 100\n"
        f"rounds = {rounds}\n"
        f"trials = {trials}\n"
        f"seed = {seed}\n"
        "dist_mean = 10.0\n"
        "dist_variance = 2.0\n"
    )
    return text + extra


def _loss_preset(algorithm: str, rate: float) -> str:
    # Failure detection stays off: with independent per-message loss a
    # timeout would sever healthy edges and can split the network.
    return _preset(
        algorithm, seed=1002, rounds=300,
        extra=f"loss_rate = {rate!r}\nfailure_timeout = 0\n",
    )


PRESETS: dict = {
    "fig_a_spectra": _preset("spectra", seed=1001, rounds=200),
    "fig_a_adam2": _preset("adam2", seed=1001, rounds=200),
    "fig_b_loss05_spectra": _loss_preset("spectra", 0.05),
    "fig_b_loss10_spectra": _loss_preset("spectra", 0.10),
    "fig_b_loss20_spectra": _loss_preset("spectra", 0.20),
    "fig_b_loss05_adam2": _loss_preset("adam2", 0.05),
    "fig_b_loss10_adam2": _loss_preset("adam2", 0.10),
    "fig_b_loss20_adam2": _loss_preset("adam2", 0.20),
    "fig_c_disturbance": _preset(
        "spectra", seed=1003, rounds=200,
        extra=(
            "disturbance_round = 75\n"
            "disturbance_fraction = 0.2\n"
            "disturbance_increase = 0.1\n"
        ),
    ),
    "fig_d_churn": _preset(
        "spectra", seed=1004, rounds=250, avg_degree=7.0,
        extra=(
            "churn_start = 50\n"
            "churn_rate = 0.01\n"
            "churn_peak = 1250\n"
            "churn_plateau = 50\n"
        ),
    ),
    # Desk-scale variants for quick runs and cheap determinism checks.
    "desk_a_spectra": _preset("spectra", seed=1001, rounds=200, n=200, trials=5),
    "desk_a_adam2": _preset("adam2", seed=1001, rounds=200, n=200, trials=5),
}


def preset_config(name: str) -> ScenarioConfig:
    """Parse one of the named presets."""
    try:
        text = PRESETS[name]
    except KeyError:
        known = ", ".join(PRESETS)
        raise ConfigError(f"unknown preset {name!r}; choose from: {known}") from None
    return parse_config(text)


def preset_names() -> list:
    return list(PRESETS)

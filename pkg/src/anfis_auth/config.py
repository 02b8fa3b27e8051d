"""INI experiment configuration: one section per module plus ``[attack.*]``.

Example::

    [experiment]
    train_start_day = 7
    test_start_day = 21

    [profile]
    seed = 7
    day_count = 28

    [attack.test_uninformed]
    split = test
    mode = Uninformed
    day = 23
    hour = 14.5
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace

from .events import FeatureKind, Pool, SyntheticProfile
from .harness import AttackMode, AttackSpec
from .pipeline import AnfisParams, PipelineConfig
from .ranklist import RankParams
from .scoring import FeatureScorerConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AttackEntry:
    name: str
    split: str
    mode: AttackMode
    day: float
    hour: float
    duration: float = 3.0
    intensity: float = 20.0
    knowledge_k: int = 5
    seed: int = 0

    def spec(self, origin: int) -> AttackSpec:
        start = origin + int(round(self.day * 86_400 + self.hour * 3600))
        return AttackSpec(self.mode, start, self.duration, self.intensity,
                          self.knowledge_k, self.seed)


@dataclass(frozen=True)
class Experiment:
    profile: SyntheticProfile = field(default_factory=SyntheticProfile)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    trace_path: str | None = None
    out_dir: str | None = None
    train_start_day: float = 7.0
    test_start_day: float = 21.0
    attacks: tuple[AttackEntry, ...] = ()

    def origin(self, trace) -> int:
        if not self.trace_path:
            return self.profile.start
        first = trace.events[0].timestamp
        return first - first % 86_400

    def attacks_for(self, split: str, origin: int) -> list[AttackSpec]:
        return [a.spec(origin) for a in self.attacks if a.split == split]


def _convert(cls, section, skip=()):
    """Keyword arguments for ``cls`` from a config section, typed by its defaults."""
    kwargs = {}
    defaults = cls()
    for f in fields(cls):
        if f.name in skip or f.name not in section:
            continue
        raw = section[f.name]
        current = getattr(defaults, f.name)
        try:
            if isinstance(current, bool):
                kwargs[f.name] = section.getboolean(f.name)
            elif isinstance(current, int):
                kwargs[f.name] = int(raw)
            elif isinstance(current, float):
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = raw
        except ValueError as exc:
            raise ConfigError(f"[{section.name}] {f.name}: {exc}") from exc
    unknown = set(section) - {f.name for f in fields(cls)} - set(skip)
    if unknown:
        raise ConfigError(f"[{section.name}] unknown keys: {', '.join(sorted(unknown))}")
    return kwargs


_POOLS = ("contact_pool", "app_pool", "wifi_pool", "browser_pool")
_BG_KEYS = {"rate_" + k.name: k for k in (FeatureKind.IncomingSms, FeatureKind.IncomingCall,
                                            FeatureKind.WifiHistory)}


def _profile(section) -> SyntheticProfile:
    pool_keys = {f"{p}_{x}" for p in _POOLS for x in ("size", "zipf")}
    skip = set(_POOLS) | {"background_rates"} | pool_keys | set(_BG_KEYS)
    kwargs = _convert(SyntheticProfile, section, skip=skip)
    base = SyntheticProfile()
    for p in _POOLS:
        pool = getattr(base, p)
        kwargs[p] = Pool(section.getint(f"{p}_size", pool.size),
                         section.getfloat(f"{p}_zipf", pool.zipf))
    rates = dict(base.background_rates)
    for key, kind in _BG_KEYS.items():
        if key in section:
            rates[kind] = section.getfloat(key)
    kwargs["background_rates"] = rates
    return SyntheticProfile(**kwargs)


def _attack(name: str, section) -> AttackEntry:
    try:
        return AttackEntry(
            name=name,
            split=section.get("split", "test"),
            mode=AttackMode(section.get("mode", "Uninformed")),
            day=section.getfloat("day"),
            hour=section.getfloat("hour", 12.0),
            duration=section.getfloat("duration", 3.0),
            intensity=section.getfloat("intensity", 20.0),
            knowledge_k=section.getint("knowledge_k", 5),
            seed=section.getint("seed", 0),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section.name}] {exc}") from exc


def parse_experiment(text: str) -> Experiment:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case sensitive
    cp.read_string(text)
    exp = Experiment()
    profile = _profile(cp["profile"]) if cp.has_section("profile") else exp.profile

    scorer = FeatureScorerConfig(**_convert(FeatureScorerConfig, cp["scoring"], skip={"checks"})) \
        if cp.has_section("scoring") else FeatureScorerConfig()
    rank = RankParams(**_convert(RankParams, cp["rank"])) if cp.has_section("rank") else RankParams()
    anfis = AnfisParams(**_convert(AnfisParams, cp["anfis"])) if cp.has_section("anfis") else AnfisParams()
    pipe_kwargs = {}
    if cp.has_section("pipeline"):
        pipe_kwargs = _convert(PipelineConfig, cp["pipeline"],
                               skip={"scorer", "rank_params", "anfis", "mode"})
    pipeline = PipelineConfig(scorer=scorer, rank_params=rank, anfis=anfis, **pipe_kwargs)

    exp_kwargs = {}
    if cp.has_section("experiment"):
        sec = cp["experiment"]
        exp_kwargs = _convert(Experiment, sec, skip={"profile", "pipeline", "attacks",
                                                     "trace_path", "out_dir"})
        exp_kwargs["trace_path"] = sec.get("trace_path") or None
        exp_kwargs["out_dir"] = sec.get("out_dir") or None
    attacks = tuple(_attack(s.split(".", 1)[1], cp[s]) for s in cp.sections()
                    if s.startswith("attack."))
    return replace(exp, profile=profile, pipeline=pipeline, attacks=attacks, **exp_kwargs)


def load_experiment(path) -> Experiment:
    with open(path, encoding="utf-8") as fh:
        return parse_experiment(fh.read())

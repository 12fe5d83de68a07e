"""Flat ``key = value`` run configuration.

Every key is optional except ``dataset_path``, ``attributes`` and
``classes``; defaults are the desk-scale search with the parameter values
used in the reference experiments (mutation 10%, weights in [-0.05, 0.05],
50 epochs, BP rate / momentum in [0.05, 0.25], ...).  ``#`` starts a comment.

=================  ===========================================  ==============
key                meaning                                      default
=================  ===========================================  ==============
dataset_name       label used in reports                        file stem
dataset_path       CSV path, relative to the config file        (required)
attributes         attribute columns per row                    (required)
classes            number of class labels                       (required)
examples           expected row count (checked if given)        unchecked
pra_pop            rule population (perfect square)             4
paf_pop            architecture population (perfect square)     9
ppi_pop            initial-weight population (perfect square)   9
bera_gens          outer generations                            2
beafa_gens         architecture generations per outer gen       2
bep_gens           weight generations per architecture gen      2
modes              comma list of ``sync`` / ``async``           sync
async_policy       ``uniform`` or ``sweep``                     uniform
neighborhood       ``news4``, ``moore8`` or ``linear5``         news4
probs              slice / layer-count choice probability       0.5
mutation_rate      mutation rate m in percent                   10
fx_min, fx_max     weight mutation range                        -0.5, 0.5
arqval_min/max     layer-size perturbation range                -2, 5
max_epochs         training epoch cap (<= 50)                   50
patience           early-stopping patience in epochs            5
algorithms         comma list of ``BP`` / ``SCG``               BP,SCG
trained_fitness    weight fitness after training (or untrained) true
workers            threads for synchronous weight generations   1
seed               master seed                                  0
replications       5x2cv replications actually run (1..5)       5
scale_features     min-max scaling on the fitting half          true
output_dir         report directory, relative to config file    report
=================  ===========================================  ==============
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..genome_ops import GenomeError, OperatorConfig
from ..search import ConfigError, GenCounts, SearchConfig
from .data import DatasetSpec

KEYS = {
    "dataset_name", "dataset_path", "attributes", "classes", "examples",
    "pra_pop", "paf_pop", "ppi_pop", "bera_gens", "beafa_gens", "bep_gens",
    "modes", "async_policy", "neighborhood", "probs", "mutation_rate",
    "fx_min", "fx_max", "arqval_min", "arqval_max", "max_epochs", "patience",
    "algorithms", "trained_fitness", "workers", "seed", "replications",
    "scale_features", "output_dir",
}


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec
    search: SearchConfig
    modes: tuple = ("sync",)
    replications: int = 5
    scale_features: bool = True
    output_dir: str = "report"
    raw: dict = field(default_factory=dict)

    def search_for(self, mode: str, seed: int) -> SearchConfig:
        return replace(self.search, mode=mode, seed=seed)

    def snapshot(self) -> dict:
        return dict(self.raw)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _list(text: str) -> tuple:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = dict(parser["run"])
    unknown = sorted(set(raw) - KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for required in ("dataset_path", "attributes", "classes"):
        if required not in raw:
            raise ConfigError(f"missing required key {required!r}")
    base_dir = Path(base_dir)

    def get(key, conv, default):
        if key not in raw:
            return default
        try:
            return conv(raw[key])
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"bad value for {key}: {raw[key]!r} ({exc})") from None

    path = base_dir / raw["dataset_path"]
    dataset = DatasetSpec(
        name=raw.get("dataset_name", path.stem),
        path=str(path),
        attributes=get("attributes", int, 0),
        classes=get("classes", int, 0),
        examples=get("examples", int, None),
    )
    try:
        operators = OperatorConfig(
            probs=get("probs", float, 0.5),
            mutation_rate=get("mutation_rate", float, 10.0),
            fx=(get("fx_min", float, -0.5), get("fx_max", float, 0.5)),
            arqval=(get("arqval_min", int, -2), get("arqval_max", int, 5)),
        )
    except GenomeError as exc:
        raise ConfigError(str(exc)) from None
    modes = get("modes", _list, ("sync",))
    if not modes or any(m not in ("sync", "async") for m in modes):
        raise ConfigError(f"modes must list 'sync' and/or 'async', got {raw.get('modes')!r}")
    search = SearchConfig(
        pra_pop=get("pra_pop", int, 4),
        paf_pop=get("paf_pop", int, 9),
        ppi_pop=get("ppi_pop", int, 9),
        gens=GenCounts(get("bera_gens", int, 2), get("beafa_gens", int, 2), get("bep_gens", int, 2)),
        mode=modes[0],
        async_policy=get("async_policy", str, "uniform"),
        neighborhood=get("neighborhood", str, "news4").lower(),
        operators=operators,
        max_epochs=get("max_epochs", int, 50),
        patience=get("patience", int, 5),
        seed=get("seed", int, 0),
        algorithms=tuple(a.upper() for a in get("algorithms", _list, ("BP", "SCG"))),
        trained_fitness=get("trained_fitness", _bool, True),
        workers=get("workers", int, 1),
    )
    replications = get("replications", int, 5)
    if not 1 <= replications <= 5:
        raise ConfigError("replications must lie in [1, 5]")
    return RunConfig(
        dataset=dataset,
        search=search,
        modes=modes,
        replications=replications,
        scale_features=get("scale_features", _bool, True),
        output_dir=str(base_dir / get("output_dir", str, "report")),
        raw=raw,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent)

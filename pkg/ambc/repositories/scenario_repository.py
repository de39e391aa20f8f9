import io
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from dotenv import dotenv_values
from pydantic import ValidationError as PydanticValidationError

from ambc.config import Config
from ambc.repositories.base import BaseRepository
from ambc.schemas.scenario import ScenarioConfig
from ambc.schemas.sweep import SweepFamily, SweepSpec
from ambc.utils.exceptions import ConfigError, ValidationError
from ambc.utils.validators import Validators

logger = logging.getLogger(__name__)

# Sweep keys of a scenario file -> SweepSpec field
SWEEP_KEYS = {
    'scenario_id': 'scenario_id',
    'sweep_var': 'sweep_var',
    'sweep_values': 'values',
    'realizations': 'realizations',
    'base_seed': 'base_seed',
    'paired_seeds': 'paired_seeds',
    'bench_full_budget': 'bench_full_budget',
    'families': 'families',
}


@dataclass
class ScenarioFile:
    """Raw key/value entries of a scenario file plus where each key came from"""
    name: str
    path: Optional[Path] = None
    entries: Dict[str, str] = field(default_factory=dict)
    lines: Dict[str, int] = field(default_factory=dict)

    def where(self, key: str) -> str:
        line = self.lines.get(key)
        if line is None:
            return f"key {key!r}"
        if line == 0:
            return f"--set {key}"
        return f"{self.path}:{line}: key {key!r}"


class ScenarioRepository(BaseRepository):
    """Scenario files (flat KEY=value) and the presets shipped with the package"""

    def __init__(self, root: Path = Config.PRESETS_DIR):
        super().__init__(root)

    def find_by_name(self, name: str) -> Optional[Path]:
        path = self.path_for(f"{name}.env")
        return path if path.is_file() else None

    def find_all(self) -> List[str]:
        return sorted(path.stem for path in self.root.glob('*.env'))

    def resolve(self, config_path: Optional[Path] = None, preset: Optional[str] = None) -> Optional[Path]:
        if config_path is not None:
            return Path(config_path)
        if preset is not None:
            path = self.find_by_name(preset)
            if path is None:
                raise ConfigError(f"Unknown preset {preset!r}, available: {', '.join(self.find_all())}")
            return path
        return None

    def read(self, path: Optional[Path]) -> ScenarioFile:
        if path is None:
            return ScenarioFile(name='default')
        try:
            text = path.read_text(encoding='utf-8')
        except FileNotFoundError:
            raise ConfigError(f"Config file not found: {path}")
        except OSError as e:
            raise ConfigError(f"Config file {path} could not be read: {e.strerror or e}")

        source = ScenarioFile(name=path.stem, path=path)
        known = self.known_keys()
        for number, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            match = re.match(r'^(?:export\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*=', stripped)
            if match is None:
                raise ConfigError(f"{path}:{number}: expected KEY=value, got {stripped!r}")
            key = match.group(1).lower()
            if key not in known:
                raise ConfigError(f"{path}:{number}: unknown key {match.group(1)!r}")
            source.lines[key] = number

        for key, value in dotenv_values(stream=io.StringIO(text), interpolate=False).items():
            if value is None:
                raise ConfigError(f"{source.where(key.lower())} has no value")
            source.entries[key.lower()] = value.strip()
        logger.debug(f"Read {len(source.entries)} keys from {path}")
        return source

    def apply_overrides(self, source: ScenarioFile, overrides: Iterable[str]) -> ScenarioFile:
        known = self.known_keys()
        for item in overrides:
            if not Validators.validate_override(item):
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, value = (part.strip() for part in item.split('=', 1))
            if key.lower() not in known:
                raise ConfigError(f"--set {key}: unknown key")
            source.entries[key.lower()] = value
            source.lines[key.lower()] = 0
        return source

    def load(self, config_path: Optional[Path] = None, preset: Optional[str] = None,
             overrides: Iterable[str] = ()) -> ScenarioFile:
        source = self.read(self.resolve(config_path, preset))
        return self.apply_overrides(source, overrides)

    def load_scenario(self, config_path: Optional[Path] = None, preset: Optional[str] = None,
                      overrides: Iterable[str] = ()) -> ScenarioConfig:
        return self.build_scenario(self.load(config_path, preset, overrides))

    def load_sweep(self, config_path: Optional[Path] = None, preset: Optional[str] = None,
                   overrides: Iterable[str] = ()) -> SweepSpec:
        return self.build_sweep(self.load(config_path, preset, overrides))

    def build_scenario(self, source: ScenarioFile) -> ScenarioConfig:
        key_map = ScenarioConfig.key_map()
        data = {key_map[key]: value for key, value in source.entries.items() if key in key_map}
        try:
            return ScenarioConfig.model_validate(data)
        except PydanticValidationError as e:
            raise ConfigError(self._describe(e, source, key_map))

    def build_sweep(self, source: ScenarioFile) -> SweepSpec:
        base = self.build_scenario(source)
        entries = source.entries
        if 'sweep_var' not in entries:
            raise ConfigError(f"{source.path or 'scenario'}: SWEEP_VAR is required for a sweep")

        data = {'scenario_id': source.name, 'base': base}
        for key, name in SWEEP_KEYS.items():
            if key not in entries:
                continue
            if key == 'sweep_values':
                data[name] = [item.strip() for item in entries[key].split(',') if item.strip()]
            elif key == 'families':
                data[name] = self.parse_families(entries[key], source)
            else:
                data[name] = entries[key]
        try:
            return SweepSpec.model_validate(data)
        except PydanticValidationError as e:
            raise ValidationError(self._describe(e, source, {value: value for value in SWEEP_KEYS.values()},
                                                 {value: key for key, value in SWEEP_KEYS.items()}))

    def parse_families(self, text: str, source: ScenarioFile) -> List[SweepFamily]:
        """'label: KEY=v; KEY=v | label2: KEY=v' -> curve families"""
        key_map = ScenarioConfig.key_map()
        families = []
        for chunk in filter(None, (part.strip() for part in text.split('|'))):
            label, _, body = chunk.partition(':')
            label = label.strip()
            if not Validators.validate_label(label):
                raise ConfigError(f"{source.where('families')}: bad family label {label!r}")
            overrides = {}
            for item in filter(None, (part.strip() for part in body.split(';'))):
                key, sep, value = item.partition('=')
                if not sep or key.strip().lower() not in key_map:
                    raise ConfigError(f"{source.where('families')}: bad override {item!r} in family {label!r}")
                overrides[key_map[key.strip().lower()]] = value.strip()
            families.append(SweepFamily(label=label, overrides=overrides))
        return families

    @staticmethod
    def known_keys() -> set:
        return set(ScenarioConfig.key_map()) | set(SWEEP_KEYS)

    @staticmethod
    def _describe(error: PydanticValidationError, source: ScenarioFile, key_map: Dict[str, str],
                  file_keys: Optional[Dict[str, str]] = None) -> str:
        first = error.errors()[0]
        loc = str(first['loc'][0]) if first['loc'] else ''
        target = key_map.get(loc.lower(), loc)
        if file_keys is not None:
            key = file_keys.get(target, target)
        else:
            key = next((k for k, name in key_map.items() if name == target and k in source.entries), loc)
        message = first['msg']
        return f"{source.where(key)}: {message}" if key else message

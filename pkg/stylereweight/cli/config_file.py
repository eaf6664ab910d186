from pathlib import Path
from typing import Dict, Union

from stylereweight.errors import ConfigError


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """
    Parses `key = value` lines. Blank lines and lines starting with # are skipped; keys are
    flag names with or without leading dashes, with - and _ interchangeable. A repeated key
    keeps its last value.
    """
    settings = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, separator, value = line.partition("=")
        if not separator or not normalize_key(key):
            raise ConfigError(f"{source}:{number}: expected key=value, got {line!r}.")
        settings[normalize_key(key)] = value.strip()
    return settings


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), source=str(path))

"""Flat key=value run configuration with CLI > file > default precedence."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Union

from .exceptions import RunConfigError

Converter = Callable[[str], Any]

TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}

def parse_bool(text: str) -> bool:

    word = text.strip().lower()

    if word in TRUE_WORDS:

        return True

    if word in FALSE_WORDS:

        return False

    raise RunConfigError(f"Expected a boolean, got {text!r}.")

def read_config_file(path: Union[str, Path]) -> Dict[str, str]:

    """Parse ``key=value`` lines; blank lines and '#' comments are skipped."""

    try:

        lines = Path(path).read_text(encoding="utf-8").splitlines()

    except OSError as exc:

        raise RunConfigError(f"Cannot read config file {path}: {exc}")

    values: Dict[str, str] = {}

    for number, raw in enumerate(lines, start=1):

        line = raw.split("#", 1)[0].strip()

        if not line:

            continue

        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")

        if not sep or not key:

            raise RunConfigError(f"{path}:{number}: expected key=value, got {raw.strip()!r}.")

        if key in values:

            raise RunConfigError(f"{path}:{number}: duplicate key {key!r}.")

        values[key] = value.strip()

    return values

@dataclass
class RunConfig:

    """Resolved options of one command plus where each value came from."""

    command: str
    values: Dict[str, Any] = field(default_factory=dict)
    sources: Dict[str, str] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:

        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:

        return self.values.get(key, default)

    def as_dict(self) -> Dict[str, Any]:

        return dict(self.values)

    @classmethod
    def resolve(
        cls,
        command: str,
        options: Mapping[str, Any],
        defaults: Mapping[str, Any],
        converters: Optional[Mapping[str, Converter]] = None,
        config_path: Optional[Union[str, Path]] = None,
    ) -> "RunConfig":

        """Merge CLI options (None = not given), a config file and defaults.

        Every key of ``defaults`` is a known option; anything else in the file
        is an error. File values go through ``converters`` when one exists.
        """

        converters = converters or {}
        file_values = read_config_file(config_path) if config_path else {}
        unknown = sorted(set(file_values) - set(defaults))

        if unknown:

            raise RunConfigError(f"Unknown key(s) for {command}: {', '.join(unknown)}.")

        config = cls(command=command)

        for key, default in defaults.items():

            if options.get(key) is not None:

                config.values[key], config.sources[key] = options[key], "cli"

            elif key in file_values:

                convert = converters.get(key, str)

                try:

                    config.values[key] = convert(file_values[key])

                except RunConfigError:

                    raise

                except (TypeError, ValueError) as exc:

                    raise RunConfigError(f"Bad value for {key!r} in {config_path}: {exc}")

                config.sources[key] = "file"

            else:

                config.values[key], config.sources[key] = default, "default"

        return config

"""Plain key=value run configuration with CLI override.

Files hold one ``section.key = value`` pair per line ('#' starts a comment;
'=' may carry surrounding whitespace).  A command validates only the
sections it declares: unknown keys inside a declared section are errors,
foreign sections are ignored so one file can drive a whole pipeline.
Every option is also exposed as a command-line flag, which wins over the
file.  Paths from the file resolve relative to the file's directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

REQUIRED = object()


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Option:
    key: str  # full "section.key" name
    type: str  # int | float | str | bool | path
    default: object = REQUIRED
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.key.split(".", 1)[1].replace("_", "-").replace(".", "-")

    @property
    def dest(self) -> str:
        return self.key.replace(".", "__")


def parse_config_file(path):
    pairs = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if not key or "." not in key:
                raise ConfigError(f"{path}:{lineno}: keys must look like section.key")
            pairs[key] = value.strip()
    return pairs, os.path.dirname(os.path.abspath(path))


def _convert(opt: Option, raw: str, base_dir: str | None):
    try:
        if opt.type == "int":
            return int(raw)
        if opt.type == "float":
            return float(raw)
        if opt.type == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if opt.type == "path":
            if base_dir is not None and raw and not os.path.isabs(raw):
                return os.path.normpath(os.path.join(base_dir, raw))
            return raw
        return raw
    except ValueError:
        raise ConfigError(f"config key {opt.key}: cannot parse {raw!r} as {opt.type}") from None


def resolve(schema: list[Option], sections: set[str], file_pairs: dict, base_dir: str | None,
            cli_values: dict) -> dict:
    """Merge defaults < file < CLI; returns full-key -> typed value."""
    by_key = {o.key: o for o in schema}
    for key in file_pairs:
        section = key.split(".", 1)[0]
        if section in sections and key not in by_key:
            raise ConfigError(f"unknown config key {key!r} in section {section!r}")
    out = {}
    for opt in schema:
        if opt.key in file_pairs:
            out[opt.key] = _convert(opt, file_pairs[opt.key], base_dir)
        elif opt.default is not REQUIRED:
            out[opt.key] = opt.default
        if opt.dest in cli_values and cli_values[opt.dest] is not None:
            out[opt.key] = _convert(opt, str(cli_values[opt.dest]), None)
        if opt.key not in out:
            raise ConfigError(f"missing required config key {opt.key!r}")
    return out

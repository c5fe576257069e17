import copy
import logging
import math
import os
from pathlib import Path

import yaml

from correlator.calculus import CALCULI
from correlator.utils.singleton import SingletonMeta

# Some constants
ENV_TIME_UNIT = "CORRELATOR_TIME_UNIT"
DEFAULTS: dict = {
    "engine": {
        "calculus": "possibilistic",
        "bound": math.inf,
        "max_explanations": 20,
        "expand_link_faults": False,
    },
    "output": {
        "format": "json",
    },
    "model": {
        "time_unit": "ticks",
    },
    "logging": {
        "debug": False,
    },
}


class Config(metaclass=SingletonMeta):
    # Some constants
    LOAD_TXT = "^TXT"
    LOAD_DEFAULTS = "^DEFAULTS"

    # Public class attributes
    logger: logging.Logger
    config_file: str = None  # Location of default config file

    # Private class attributes
    _loaded_config_file: str = None  # Location of currently loaded config file
    _config: dict = None  # Loaded configuration

    def __init__(self, config_file: str = None):
        self.logger = logging.getLogger(__name__)

        if config_file is not None:
            self.config_file = config_file

    """Load config from config_file attribute or parameter, defaults when there is no file"""
    def load(self, config_file: str = None):
        # Get desired config file location
        if config_file is None:
            config_file = self.config_file

        if config_file is None or not Path(config_file).is_file():
            if config_file is not None:
                self.logger.info(f"No configuration at {config_file}, using defaults")
            self._config = with_defaults({})
            self._loaded_config_file = self.LOAD_DEFAULTS
            return

        self._config = with_defaults(load_config_file(config_file))
        self._loaded_config_file = config_file

    """Alias for load()"""
    load_file = load

    """Load provided YAML string as configuration"""
    def load_text(self, text: str):
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as e:
            self.logger.error("An error occurred when attempting to parse the configuration string %s", text,
                              exc_info=e)
            raise e

        self._config = with_defaults(loaded)
        self._loaded_config_file = self.LOAD_TXT

    """
    Main configuration getter, autoloads config file if not already loaded
    """
    @property
    def config(self) -> dict:
        if self._config is not None:
            return self._config

        self.load()
        return self._config

    @property
    def loaded_config_file(self) -> str:
        if self._loaded_config_file in (self.LOAD_TXT, self.LOAD_DEFAULTS):
            return self._loaded_config_file
        return str(Path(self._loaded_config_file).resolve())


def load_config_file(config_file: str) -> dict:
    logger = logging.getLogger(__name__)

    with open(config_file, 'r') as stream:
        try:
            config = yaml.safe_load(stream)
        except yaml.YAMLError as exc:
            logger.exception("An error occurred when attempting to parse the configuration file %s", config_file,
                             exc_info=exc)
            raise exc

    return config


def with_defaults(loaded: dict | None) -> dict:
    """Merge a loaded configuration over the defaults and check it"""
    if loaded is None:
        loaded = {}
    if not isinstance(loaded, dict):
        raise ValueError(f"Configuration must be a mapping, got {type(loaded).__name__}")

    conf = copy.deepcopy(DEFAULTS)
    if ENV_TIME_UNIT in os.environ:
        conf["model"]["time_unit"] = os.environ[ENV_TIME_UNIT]
    for section, values in loaded.items():
        if not isinstance(values, dict):
            raise ValueError(f"Configuration section '{section}' must be a mapping")
        conf.setdefault(section, {}).update(values)

    # YAML has no infinity literal that everyone writes the same way
    if isinstance(conf["engine"]["bound"], str):
        conf["engine"]["bound"] = parse_bound(conf["engine"]["bound"])

    _sanity_check_conf(conf)
    return conf


def parse_bound(value: str | float) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"engine.bound must be a number or 'inf', got '{value}'")


def _sanity_check_conf(conf: dict):
    engine = conf["engine"]
    if engine["calculus"] not in CALCULI:
        raise ValueError(f"engine.calculus must be one of {list(CALCULI)}, got '{engine['calculus']}'")
    if not isinstance(engine["bound"], (int, float)) or engine["bound"] < 0:
        raise ValueError(f"engine.bound must be a non-negative number, got {engine['bound']}")
    if not isinstance(engine["max_explanations"], int) or engine["max_explanations"] < 1:
        raise ValueError(f"engine.max_explanations must be a positive integer, got {engine['max_explanations']}")
    if not isinstance(engine["expand_link_faults"], bool):
        raise ValueError("engine.expand_link_faults must be true or false")
    if conf["output"]["format"] not in ("json", "table"):
        raise ValueError(f"output.format must be json or table, got '{conf['output']['format']}'")

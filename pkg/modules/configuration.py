import configparser
import logging
import os

logger = logging.getLogger(__name__)

DEFAULTS = {
    "Precision": {"float_limit": "1029", "exact_max_n": "64"},
    "Dense": {"max_qubits": "12"},
    "Stabilizer": {"max_enumeration_log2": "26", "max_decoder_checks": "20"},
    "Sampler": {"block_size": "1024", "workers": "1"},
    "Estimation": {"bootstrap": "1000", "ci_level": "0.95", "mitigation_floor": "1e-6"},
    "Threshold": {"tolerance": "1e-4", "grid_points": "64", "fidelity_bound": "0.5"},
    "Norm": {"tolerance": "1e-10", "max_iterations": "200"},
    "Debug": {"flag": "False"},
}


class configuration:

    def __init__(self, inifile: str = "./settings.ini"):
        logger.debug("Loading configuration")
        self.inifile = inifile
        self.conf = configparser.ConfigParser()
        self.conf.read_dict(DEFAULTS)

    def readConfig(self):
        if not os.path.exists(self.inifile):
            logger.error("Settings file not found: " + self.inifile)
            raise FileNotFoundError(self.inifile)
        self.conf.read(self.inifile)
        return self

    def saveConfig(self, settings: dict):
        logger.debug("Saving configuration")
        for section, values in settings.items():
            if not self.conf.has_section(section):
                self.conf.add_section(section)
            for key, value in values.items():
                self.conf[section][key] = str(value)
        with open(self.inifile, "w") as configfile:
            self.conf.write(configfile)

    def getInt(self, section: str, key: str) -> int:
        return self.conf.getint(section, key)

    def getFloat(self, section: str, key: str) -> float:
        return self.conf.getfloat(section, key)

    def getBool(self, section: str, key: str) -> bool:
        return self.conf.getboolean(section, key)

    def asDict(self) -> dict:
        return {section: dict(self.conf[section]) for section in self.conf.sections()}


_active = configuration()


def load(inifile: str = None) -> configuration:
    """Make `inifile` the active configuration.

    Without a path the built-in defaults stay active; `./settings.ini` is picked up
    when present.
    """
    global _active
    if inifile is None:
        conf = configuration()
        if os.path.exists(conf.inifile):
            conf.readConfig()
    else:
        conf = configuration(inifile).readConfig()
    _active = conf
    return _active


def active() -> configuration:
    return _active

from frontspeed.cli import Config

from conftest import CONFIG_DIR


def config(name: str) -> Config:
    return Config.load(CONFIG_DIR / f"{name}.json")


def spec_of(name: str, **kw):
    return config(name).spec(**kw)

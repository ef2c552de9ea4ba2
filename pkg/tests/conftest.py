import pytest

from siegelzak.config import settings
from siegelzak.models.geometry import Box, Window
from siegelzak.models.schema import TestFunction
from siegelzak.services.cps import builtin_scheme

settings.LOG_FILE = ""


@pytest.fixture
def gaussian1d():
    return TestFunction(kind="gaussian", dimension=1, center=[0.0], scale=1.0)


@pytest.fixture
def zsqrt2():
    return builtin_scheme("zsqrt2")


@pytest.fixture
def integers():
    return builtin_scheme("integers")


@pytest.fixture
def unit_window():
    return Window.interval(-1.0, 1.0)


@pytest.fixture
def region20():
    return Box(lo=[-20.0], hi=[20.0])


@pytest.fixture
def write_config(tmp_path):
    """Writes a TOML body to a temp file and returns its path."""

    def _write(body: str, name: str = "experiment.toml") -> str:
        path = tmp_path / name
        path.write_text(body, encoding="utf-8")
        return str(path)

    return _write

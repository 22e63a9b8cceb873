import pytest
from pydantic import ValidationError

from isobem.utils.settings import IsobemSettings


def test_defaults(monkeypatch):
    monkeypatch.delenv("ISOBEM_WORKERS", raising=False)
    settings = IsobemSettings()
    assert settings.workers == 4
    assert settings.chunk_size == 128


def test_env_prefix(monkeypatch):
    monkeypatch.setenv("ISOBEM_WORKERS", "2")
    monkeypatch.setenv("ISOBEM_LOG_LEVEL", "DEBUG")
    settings = IsobemSettings()
    assert settings.workers == 2
    assert settings.log_level == "DEBUG"


def test_invalid_workers(monkeypatch):
    monkeypatch.setenv("ISOBEM_WORKERS", "0")
    with pytest.raises(ValidationError):
        IsobemSettings()

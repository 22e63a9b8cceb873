from loguru import logger as loguru_logger

from isobem.utils.logging_utils import configure_logger, get_logger, is_logger_configured


# Unit test for the logger configuration check
def test_logger_configuration(tmp_path):
    configure_logger("WARNING", tmp_path / "isobem.log", loguru_logger)
    assert is_logger_configured(), "Logger should be configured after calling configure_logger."
    assert is_logger_configured(path=tmp_path / "isobem.log"), "File sink should be installed."


def test_reconfigure_replaces_sinks():
    configure_logger("INFO")
    configure_logger("DEBUG")
    assert is_logger_configured()
    assert not is_logger_configured(path="/nonexistent/isobem.log")


def test_get_logger_binds_name(tmp_path):
    records = []
    sink = loguru_logger.add(records.append, format="{extra[name]}|{message}")
    try:
        get_logger("isobem.test").info("hello")
    finally:
        loguru_logger.remove(sink)
    assert records and records[-1].strip() == "isobem.test|hello"

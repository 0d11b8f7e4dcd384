import io
import json
import logging
import math

from src.oppcost.utils import create_logger, dump_json, format_number


def test_console_follows_the_current_stderr(monkeypatch):
    first = io.StringIO()
    monkeypatch.setattr("sys.stderr", first)
    create_logger(name="oppcost-test").info("one")

    second = io.StringIO()
    monkeypatch.setattr("sys.stderr", second)
    logger = create_logger(name="oppcost-test")
    logger.info("two")

    assert "one" in first.getvalue()
    assert "two" in second.getvalue()
    assert "two" not in first.getvalue()
    assert sum(type(h) is logging.StreamHandler for h in logger.handlers) == 1


def test_log_file_is_written(tmp_path):
    logger = create_logger(str(tmp_path / "logs"), name="oppcost-file-test")
    logger.info("to the file")
    for handler in logger.handlers:
        handler.flush()
    assert "to the file" in (tmp_path / "logs" / "oppcost.log").read_text()


def test_format_number():
    assert format_number(5.0) == "5"
    assert format_number(None) == "-"
    assert format_number(-math.inf) == "-inf"
    assert format_number(0.1234567) == "0.123457"


def test_dump_json_encodes_infinity_as_text():
    assert json.loads(dump_json({"gap": math.inf}))["gap"] == "inf"

"""Tests for :mod:`liabilitychain.logging_config`."""

from __future__ import annotations

import logging
from io import StringIO
from typing import Iterator

import pytest

from liabilitychain.logging_config import RunContext, configure_logging


@pytest.fixture(autouse=True)
def restore_root_logger() -> Iterator[None]:
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def test_configure_logging_stamps_command_and_seed() -> None:
    """Given a solve run with seed 7 When a solver logs Then the line names the command and the seed."""

    stream = StringIO()

    context = configure_logging(logging.DEBUG, stream=logging.StreamHandler(stream), command="solve", seed=7)
    logging.getLogger("solvers").debug("sweep")

    assert context == RunContext(command="solve", seed=7)
    assert "| DEBUG | solvers | solve seed=7 | sweep" in stream.getvalue()


def test_records_without_a_run_use_placeholders() -> None:
    """Given no command or seed When a message is logged Then dashes stand in for both."""

    stream = StringIO()

    configure_logging("info", stream=logging.StreamHandler(stream))
    logging.getLogger("verify").info("summary")

    assert "| INFO | verify | - seed=- | summary" in stream.getvalue()


def test_explicit_record_fields_win_over_the_run_context() -> None:
    """Given a record carrying its own seed When logged Then that seed is printed."""

    stream = StringIO()

    configure_logging("info", stream=logging.StreamHandler(stream), command="simulate", seed=1)
    logging.getLogger("simulation").info("instance", extra={"seed": 42})

    assert "simulate seed=42 | instance" in stream.getvalue()


def test_configure_logging_replaces_previous_handlers() -> None:
    """Given two configuration calls When a message is logged Then it is written once, at the named level."""

    first, second = StringIO(), StringIO()
    configure_logging("warning", stream=logging.StreamHandler(first))
    configure_logging("warning", stream=logging.StreamHandler(second))

    logging.getLogger("demo").warning("once")
    logging.getLogger("demo").info("hidden")

    assert first.getvalue() == ""
    assert second.getvalue().count("once") == 1
    assert "hidden" not in second.getvalue()


def test_unknown_level_name_falls_back_to_info() -> None:
    """Given an unknown level name When configured Then the root logger runs at INFO."""

    configure_logging("chatty", stream=logging.StreamHandler(StringIO()))

    assert logging.getLogger().level == logging.INFO

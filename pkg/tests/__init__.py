"""Census disaggregation tests."""

from __future__ import annotations

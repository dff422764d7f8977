"""Saarthi: agentic formal-verification orchestration with human-in-the-loop control."""

__version__ = "0.1.0"

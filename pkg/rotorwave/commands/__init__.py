"""Concrete ``rotorwave`` subcommands."""

"""Top-level package for rotorwave."""

__author__ = """Rotorwave developers"""
__email__ = 'rotorwave@users.noreply.github.com'
__version__ = '0.1.0'

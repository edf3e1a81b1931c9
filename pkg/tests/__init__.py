"""Unit test package for rotorwave."""

"""Photon-subtracted twin beams in a Mach-Zehnder interferometer."""

__version__ = '0.1'

"""Enclosure-method toolkit: Vekua transforms, Herglotz probes, far-field simulation and indicator scans."""

__version__ = "0.1.0"

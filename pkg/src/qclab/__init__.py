"""qclab: quasiconformal maps, dyadic packings and sharp distortion experiments."""

__version__ = "0.1.0"

"""Compile-free patch presence testing over decompiled pseudocode."""

__version__ = "0.1.0"

"""Core package for cvqkd: sweep configuration and the parallel sweep engine."""

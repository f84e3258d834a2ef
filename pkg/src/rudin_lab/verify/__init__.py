"""Verification runs: kernel bound, weighted operator estimate, symmetry checks, acceptance battery."""

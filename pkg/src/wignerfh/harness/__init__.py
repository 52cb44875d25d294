"""Experiment configuration, Monte Carlo runner, output files and CLI."""

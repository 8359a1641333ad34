"""Experiment harness: configs, model registry, runner and CLI."""

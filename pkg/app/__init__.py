"""Run configuration, pipeline stages and the command-line entry point."""

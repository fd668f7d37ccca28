"""Configuration, experiment drivers, CSV output and the command-line interface."""

"""circfuzz: fuzzing arithmetic circuits and a regex-to-circuit compiler."""

__version__ = "0.1.0"

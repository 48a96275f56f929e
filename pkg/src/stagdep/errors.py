"""Shared exception types."""


class DataError(Exception):
    """Malformed or inconsistent input data (files, annotations, counts).

    Raised for problems a user can fix by correcting their input; the CLI
    maps it to exit code 1. Programming errors and violated call
    preconditions raise ValueError instead.
    """

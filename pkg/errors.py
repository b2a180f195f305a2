#!/usr/bin/env python3
# -*- coding: utf-8
"""
Exception types shared by the strikebench modules.
The CLI maps every StrikebenchError to exit code 1.
"""

from typing import Optional


class StrikebenchError(Exception):
    """Base class for validation and configuration failures"""


class ParseError(StrikebenchError):
    def __init__(self, message: str, path: Optional[str] = None, line_number: Optional[int] = None):
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = str(path)
            if line_number is not None:
                location += ":" + str(line_number)
            location += ": "
        super().__init__(location + message)


class DatasetValidationError(StrikebenchError):
    pass


class ConfigError(StrikebenchError):
    pass


class IndexQueryError(StrikebenchError):
    pass


class PredictionFormatError(StrikebenchError):
    pass


class MismatchedQueriesError(StrikebenchError):
    pass

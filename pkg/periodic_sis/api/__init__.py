"""Initialization of api"""

from ._commands import *

"""Initialization of cli"""

from ._periodic_sis import periodic_sis
from ._commands import *

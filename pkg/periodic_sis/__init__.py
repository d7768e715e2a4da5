"""Initialize PeriodicSIS"""

from . import lib
from . import api
from . import cli

"""library intialization"""

from ._errors import *
from ._spectral import *
from ._model import *
from ._stability import *
from ._control import *
from ._filetools import *
from ._experiments import *
from ._click import *

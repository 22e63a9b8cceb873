from .errors import *
from .logging_utils import get_logger, configure_logger, is_logger_configured
from .main import *
from .read_write import *
from .run_utils import *
from .settings import IsobemSettings, get_settings
from .unsorted import load_global_env

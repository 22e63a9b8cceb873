from .logging_utils import *

from enum import Enum
from pathlib import Path
from typing import Type, Union

Pathlike = Union[str, Path]


# region Enum utils
def cast_enum(value, desired_type: Type[Enum]) -> Enum:
    """
    >>> from isobem.adaptivity import RefinementMode
    >>> cast_enum("uniform", RefinementMode)
    <RefinementMode.UNIFORM: 'uniform'>
    """
    if isinstance(value, desired_type):
        return value
    elif isinstance(value, Enum):
        value = value.value

    return desired_type(value)


# endregion Enum utils

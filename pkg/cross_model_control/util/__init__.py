from .custom_types import CmcError as CmcError, ConfigError as ConfigError, DataError as DataError
from .enum_action import EnumAction as EnumAction

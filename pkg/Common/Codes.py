# -*- coding: utf-8 -*-
"""
Модуль кодов выхода

"""

from enum import IntEnum

#----------------------------------------------------------------
class ExitCode(IntEnum): 
    Ok = 0
    ExecutionError = 1
    UsageError = 2
    ConfigError = 3
    AsyncStartError = 4

# -*- coding: utf-8 -*-
"""
Модуль журналирования

Каждый запуск пишет в свой файл <LogFolder>/<время старта>.log через
именованный журнал satok; обработчик предыдущего запуска в том же
процессе снимается.
"""
import os
import sys
import json
import logging
import traceback

from Common.Codes import ExitCode

LOGGER_NAME = 'satok'
LOG_FORMAT = '%(asctime)s___%(levelname)s___%(message)s'

#------------------------------------------------------------------------------
class LogInterface():
    def __init__(self,appStartDateTime:str,logFolder:str='Logs'):
        os.makedirs(logFolder,exist_ok=True)
        self.__logPath:str = os.path.join(logFolder,f'{appStartDateTime}.log')
        self.__logger:logging.Logger = logging.getLogger(LOGGER_NAME)
        self.__logger.setLevel(logging.INFO)
        self.__logger.propagate = False
        for handler in list(self.__logger.handlers):
            self.__logger.removeHandler(handler)
            handler.close()
        self.__handler = logging.FileHandler(self.__logPath,mode='a',encoding='utf-8')
        self.__handler.setFormatter(logging.Formatter(LOG_FORMAT))
        self.__logger.addHandler(self.__handler)

    @property
    def LogPath(self) -> str:
        return self.__logPath

    def Error(self,sourceName:str,message:str):
        self.__logger.error(f'{sourceName}: {message}')

    def Warn(self,sourceName:str,message:str):
        self.__logger.warning(f'{sourceName}: {message}')

    def Info(self,sourceName:str,message:str):
        self.__logger.info(f'{sourceName}: {message}')

    def Close(self):
        self.__logger.removeHandler(self.__handler)
        self.__handler.close()

    @staticmethod
    def DeathRattle(exc_type,exc_value,exc_traceback):
        """Необработанное исключение: трасса в журнал, одна строка JSON в stderr"""
        logging.getLogger(LOGGER_NAME).error('UNCAUGHT EXCEPTION',
                                             exc_info=(exc_type,exc_value,exc_traceback))
        description = {'error':exc_type.__name__,
                       'exit_code':ExitCode.ExecutionError.value,
                       'message':str(exc_value),
                       'traceback':''.join(traceback.format_tb(exc_traceback))}
        print(json.dumps(description,sort_keys=True,ensure_ascii=False),file=sys.stderr)

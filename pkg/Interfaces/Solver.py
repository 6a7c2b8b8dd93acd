# -*- coding: utf-8 -*-
"""
Модуль запуска логики обработки данных

Каждой подкоманде соответствует модуль Modules/<Имя>/Parser.py,
который загружается динамически и получает словарь параметров.
"""
import os
import importlib.util as util

from typing import Any,Awaitable,Dict,NoReturn,Optional,Type

from Common.Config import Config
from Common.Errors import PluginLoadError
from Interfaces.OutputInterface import CsvHistoryWriter,JsonReportWriter,_AbstractOutputWriter

PROJECT_ROOT:str = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

COMMAND_MODULES:Dict[str,str] = {
    'analyze':'Analyze',
    'make-corpus':'MakeCorpus',
    'train-sembo':'TrainBottleneck',
    'train-tokenizer':'TrainTokenizer',
    'encode':'Encode',
    'reconstruct':'Reconstruct',
    'evaluate':'Evaluate',
}

# Куда пишет интерфейс вывода: аргумент командной строки или производное имя
COMMAND_WRITERS:Dict[str,Type[_AbstractOutputWriter]] = {
    'analyze':JsonReportWriter,
    'evaluate':JsonReportWriter,
    'train-sembo':CsvHistoryWriter,
    'train-tokenizer':CsvHistoryWriter,
}

#----------------------------------------------------------------
class Solver():
    def __init__(self,settings:dict,appStartDateTime:str,interfaces:dict,command:str,
                 arguments:Dict[str,Any],config:Config):
        # Настройки
        self._settings:dict = settings

        # Метод обновления интерфейса приложения
        self._redrawUIMethod:Awaitable = self.RedrawUI

        # Логирование
        self._log:Any = interfaces.get('LOGGER')

        # Каталог с делами
        self._caseName:str = appStartDateTime
        self._caseFolder:str = self._settings.get('CaseFolder')

        self._command:str = command
        self._arguments:Dict[str,Any] = arguments

        # Параметры для передачи в модули
        self._moduleParameters:dict = {
            'LOG':self._log,
            'CASEFOLDER':self._caseFolder,
            'CASENAME':self._caseName,
            'UIREDRAW':self._redrawUIMethod,
            'CONFIG':config,
            'ARGUMENTS':arguments,
        }

    async def RedrawUI(self,message:str,percent:int) -> NoReturn:
        print(message,percent)

    def _OutputPath(self) -> str:
        if self._command in ('train-sembo','train-tokenizer'):
            history = self._arguments.get('history')
            return history or f'{self._arguments["out"]}.history.csv'
        out = self._arguments.get('out')
        return out or os.path.join(self._caseFolder,self._caseName,f'{self._command}.json')

    def _OutputWriter(self,moduleName:str) -> Optional[_AbstractOutputWriter]:
        writerClass = COMMAND_WRITERS.get(self._command)
        if writerClass is None:
            return None
        return writerClass({'CASENAME':self._caseName,
                            'CASEFOLDER':self._caseFolder,
                            'MODULENAME':moduleName,
                            'OUTPUTPATH':self._OutputPath()})

    async def _ProcessTask(self,modulePath:str,moduleName:str) -> Dict[str,Any]:
        # Загрузить модуль
        location = os.path.join(modulePath,'Parser.py')
        spec = util.spec_from_file_location(name=f'Modules.{moduleName}.Parser',location=location)
        if spec is None or not os.path.isfile(location):
            raise PluginLoadError(moduleName,f'нет файла {location}')
        try:
            module = util.module_from_spec(spec)
            spec.loader.exec_module(module)
        except ImportError as ie:
            message = f'Импорт внутри динамического модуля завершился ошибкой: {ie}!'
            self._log.Error(f'Solver.ProcessTask: {location}',message)
            raise PluginLoadError(moduleName,str(ie)) from None

        moduleInstance = module.Parser(self._moduleParameters)
        return await moduleInstance.Start()

    async def Start(self) -> Dict[str,Any]:
        moduleName = COMMAND_MODULES[self._command]
        modulePath = os.path.join(PROJECT_ROOT,'Modules',moduleName)

        # Параметры модуля
        self._moduleParameters.update({'MODULENAME':moduleName})
        self._moduleParameters.update({'OUTPUTWRITER':self._OutputWriter(moduleName)})

        self._log.Info('Solver',f'Запуск модуля {moduleName}')
        moduleResult = await self._ProcessTask(modulePath,moduleName)
        await self._redrawUIMethod(f'Завершена работа модуля: {moduleName}',100)
        return moduleResult

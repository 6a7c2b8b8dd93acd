# -*- coding: utf-8 -*-
"""
Модуль основного интерфейса

Разбор командной строки, загрузка конфигурации и передача подкоманды
загрузчику модулей. Ошибки предметной области печатаются в stderr
одной строкой JSON, код выхода берется из исключения.
"""
import json
import sys
import argparse
from datetime import datetime
from typing import Any,AnyStr,Dict,List,NoReturn,Optional

from Common.Codes import ExitCode
from Common.Errors import SatokError,UsageError
from Interfaces.LogInterface import LogInterface
from Interfaces.SettingsInterface import SettingsInterface
from Interfaces.Solver import Solver

#----------------------------------------------------------------
def BuildArgumentParser() -> argparse.ArgumentParser:
    cliParamsParser = argparse.ArgumentParser(prog='Run.py',description='Лаборатория семантико-акустического токенизатора')
    commands = cliParamsParser.add_subparsers(dest='command',metavar='command')
    commands.required = True

    def Command(name:str,helpText:str) -> argparse.ArgumentParser:
        parser = commands.add_parser(name,help=helpText)
        parser.add_argument('--config',type=str,default=None,help='JSON-файл конфигурации запуска')
        parser.add_argument('--permissive',action='store_true',help='Неизвестные ключи конфигурации - предупреждения')
        return parser

    analyze = Command('analyze','Спектральный анализ признаков корпуса')
    analyze.add_argument('--in',dest='input',required=True,help='Каталог корпуса с manifest.json')
    analyze.add_argument('--out',required=True,help='JSON-отчет')

    corpus = Command('make-corpus','Генерация синтетического корпуса')
    corpus.add_argument('--out',required=True,help='Каталог корпуса')
    corpus.add_argument('--hours',type=float,default=None,help='Длительность корпуса, часы')
    corpus.add_argument('--seed',type=int,default=None,help='Зерно генерации')

    sembo = Command('train-sembo','Обучение семантического узкого горла')
    sembo.add_argument('--in',dest='input',required=True,help='Каталог корпуса')
    sembo.add_argument('--out',required=True,help='Контрольная точка')
    sembo.add_argument('--history',default=None,help='CSV истории потерь')

    tokenizer = Command('train-tokenizer','Обучение токенизатора')
    tokenizer.add_argument('--in',dest='input',required=True,help='Каталог корпуса')
    tokenizer.add_argument('--sembo',default=None,help='Контрольная точка узкого горла')
    tokenizer.add_argument('--out',required=True,help='Контрольная точка')
    tokenizer.add_argument('--resume',default=None,help='Продолжить с контрольной точки')
    tokenizer.add_argument('--history',default=None,help='CSV истории потерь')

    encode = Command('encode','Кодирование WAV в файл латентов')
    encode.add_argument('--model',required=True,help='Контрольная точка токенизатора')
    encode.add_argument('--in',dest='input',required=True,help='WAV-файл')
    encode.add_argument('--out',required=True,help='Файл латентов')
    encode.add_argument('--kind',choices=('uni','mu'),default='uni',help='Объединенный латент или среднее')

    reconstruct = Command('reconstruct','Кодирование и декодирование WAV')
    reconstruct.add_argument('--model',required=True,help='Контрольная точка токенизатора')
    reconstruct.add_argument('--in',dest='input',required=True,help='WAV-файл')
    reconstruct.add_argument('--out',required=True,help='Восстановленный WAV')

    evaluate = Command('evaluate','Оценка токенизатора')
    evaluate.add_argument('--model',required=True,help='Контрольная точка токенизатора')
    evaluate.add_argument('--suite',action='append',choices=('recon','probe','rtf'),default=None,
                          help='Набор проверок, можно повторять')
    evaluate.add_argument('--out',required=True,help='JSON-отчет')
    evaluate.add_argument('--corpus',default=None,help='Каталог корпуса для recon и rtf')
    evaluate.add_argument('--baseline',default=None,help='Контрольная точка модели сравнения для зонда')
    return cliParamsParser

#----------------------------------------------------------------
class Interface():
    def __init__(self,settingsPath:Optional[str]=None):
        # Время старта ПО для лога и создания каталога хранения результатов
        self.__appStartDateTime:str = str(datetime.now()).split('.')[0].replace(':','_')

        # Интерфейс инициализации настроек
        self.__settingsInterface:SettingsInterface = SettingsInterface(settingsPath)

        # Интерфейс журналирования сообщений ПО
        self.__log:LogInterface = LogInterface(self.__appStartDateTime,
                                               self.__settingsInterface.GetSettingValueByName('LogFolder'))
        self.__settingsInterface.ReportProblems(self.__log)

        # Сформировать словарь интерфейсов приложения
        self.interfaces:dict = {'LOGGER':self.__log}

        self._solver:Optional[Solver] = None

    @property
    def GetAppStartDateTime(self) -> AnyStr:
        return self.__appStartDateTime

    @property
    def GetSettings(self) -> Dict:
        return self.__settingsInterface.GetSettings()

    def __ParseArguments(self,argv:Optional[List[str]]) -> argparse.Namespace:
        try:
            return BuildArgumentParser().parse_args(argv)
        except SystemExit as e:
            if e.code in (0,None):
                raise
            raise UsageError('Неверные аргументы командной строки') from None

    def __Fail(self,error:SatokError,exitStatus) -> NoReturn:
        self.__log.Error('Interface',error.message)
        print(json.dumps(error.Describe(),sort_keys=True,ensure_ascii=False,default=str),file=sys.stderr)
        exitStatus.status = int(error.exitCode)

    async def Run(self,exitStatus,argv:Optional[List[str]]=None) -> NoReturn:
        try:
            await self.__Run(exitStatus,argv)
        finally:
            self.__log.Close()

    async def __Run(self,exitStatus,argv:Optional[List[str]]) -> NoReturn:
        try:
            parameters = self.__ParseArguments(argv)
        except SystemExit:
            exitStatus.status = ExitCode.Ok.value
            return
        except UsageError as e:
            # Текст использования уже напечатан argparse
            self.__log.Error('Interface',e.message)
            exitStatus.status = ExitCode.UsageError.value
            return

        arguments = {key:value for key,value in vars(parameters).items() if key not in ('config','permissive','command')}
        try:
            config = self.__settingsInterface.LoadRunConfig(parameters.config,not parameters.permissive,self.__log)

            # Инцициализация модуля-загрузчика логики обработки данных
            self._solver = Solver(self.GetSettings,
                                  self.__appStartDateTime,
                                  self.interfaces,
                                  parameters.command,
                                  arguments,
                                  config)
            result = await self._solver.Start()
        except SatokError as e:
            self.__Fail(e,exitStatus)
            return

        print(json.dumps({'command':parameters.command,'result':result},sort_keys=True,ensure_ascii=False,default=str))
        exitStatus.status = ExitCode.Ok.value

# -*- coding: utf-8 -*-
"""
Модуль интерфейса обработки настроек

Settings.json хранит настройки приложения (каталоги журналов и
результатов); относительные пути отсчитываются от корня проекта.
"""
import json
import os

from typing import Any,Dict,List,NoReturn,Optional

from Common.Config import Config,config_echo,parse_config

PROJECT_ROOT:str = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_SETTINGS:Dict[str,str] = {'LogFolder':'Logs','CaseFolder':'Cases'}

#------------------------------------------------------------------------------
class SettingsInterface():
    def __init__(self,settingsPath:Optional[str]=None):
        self.__settingsFileName:str = settingsPath or os.path.join(PROJECT_ROOT,'Settings.json')
        self.__settings:dict = dict(DEFAULT_SETTINGS)
        self.__problems:List[str] = []

        # Инициализировать настройки
        self.__ReadSettings()

    def __ReadSettings(self) -> NoReturn:
        try:
            with open(self.__settingsFileName,'rb') as f:
                self.__settings.update(json.load(f))
        except FileNotFoundError:
            self.__problems.append(f'Файл настроек не найден: {self.__settingsFileName}')
        except json.decoder.JSONDecodeError as e:
            self.__problems.append(f'Файл настроек содержит ошибки: {e}')

        base = os.path.dirname(os.path.abspath(self.__settingsFileName))
        for key in DEFAULT_SETTINGS:
            value = str(self.__settings.get(key) or DEFAULT_SETTINGS[key])
            self.__settings[key] = value if os.path.isabs(value) else os.path.join(base,value)

    def ReportProblems(self,logInterface) -> NoReturn:
        # Журнал создается после чтения настроек, поэтому ошибки передаются отложенно
        for message in self.__problems:
            logInterface.Error('SettingsInterface',message)
        self.__problems.clear()

    def GetSettings(self) -> Dict:
        return self.__settings

    def GetSettingValueByName(self,parameterName:str) -> Any:
        return self.__settings.get(parameterName)

    @staticmethod
    def LoadRunConfig(path:Optional[str],strict:bool,logInterface) -> Config:
        """Разбор конфигурации запуска и эхо в stdout и журнал"""
        config = parse_config(path,strict=strict,log=logInterface)
        echo = config_echo(config)
        print(echo)
        logInterface.Info('SettingsInterface',f'Конфигурация: {echo}')
        return config

# -*- coding: utf-8 -*-
"""
Модуль генерации синтетического корпуса
"""
from typing import Dict

from Common.Corpus import make_corpus

class Parser():
    def __init__(self,parameters:dict):
        self.__parameters:dict = parameters

    async def Start(self) -> Dict:
        config = self.__parameters.get('CONFIG')
        arguments = self.__parameters.get('ARGUMENTS')
        hours = arguments.get('hours')
        seed = arguments.get('seed')
        hours = config.corpus.hours if hours is None else hours
        seed = config.seed if seed is None else seed

        await self.__parameters.get('UIREDRAW')(f'Генерация корпуса {hours} ч',0)
        manifest = make_corpus(seed,hours,arguments['out'],config,self.__parameters.get('LOG'))
        return {'files':len(manifest['files']),'total_seconds':manifest['total_seconds'],'out':arguments['out']}

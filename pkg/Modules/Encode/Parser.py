# -*- coding: utf-8 -*-
"""
Модуль кодирования WAV в последовательность латентов

Результат - контейнер вида latent с массивом latent (T, d) и эхом
конфигурации модели.
"""
import os
from typing import Dict

from Common.Config import config_to_dict
from Common.Dsp import load_audio
from Common.Routines import ArrayContainer
from Common.Tokenizer import encode_audio
from Common.TokenizerTraining import load_tokenizer

LATENT_KIND:str = 'latent'

class Parser():
    def __init__(self,parameters:dict):
        self.__parameters:dict = parameters

    async def Start(self) -> Dict:
        arguments = self.__parameters.get('ARGUMENTS')
        kind = arguments.get('kind') or 'uni'

        model,stored = load_tokenizer(arguments['model'])
        audio = load_audio(arguments['input'],stored.sample_rate)
        latent = encode_audio(model,audio,kind)
        ArrayContainer.Save(arguments['out'],LATENT_KIND,{'latent':latent.values},config_to_dict(stored),0,
                            {'kind':kind,'frame_rate':latent.frame_rate,
                             'source':os.path.basename(arguments['input']),'frames':len(latent.values)})
        await self.__parameters.get('UIREDRAW')(f'Кадров латента: {len(latent.values)}',100)
        return {'out':arguments['out'],'frames':len(latent.values),'dim':int(latent.values.shape[1]),
                'frame_rate':latent.frame_rate}

# -*- coding: utf-8 -*-
"""
Модуль восстановления WAV через токенизатор
"""
from typing import Dict

from Common.Dsp import load_audio,save_wav
from Common.Tokenizer import reconstruct
from Common.TokenizerTraining import load_tokenizer

class Parser():
    def __init__(self,parameters:dict):
        self.__parameters:dict = parameters

    async def Start(self) -> Dict:
        arguments = self.__parameters.get('ARGUMENTS')
        # Контрольная точка проверяется до чтения входа
        model,stored = load_tokenizer(arguments['model'])
        audio = load_audio(arguments['input'],stored.sample_rate)
        restored = reconstruct(model,audio)
        save_wav(arguments['out'],restored)
        return {'out':arguments['out'],'samples':len(restored),'sample_rate':restored.sample_rate}

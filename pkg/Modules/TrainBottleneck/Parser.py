# -*- coding: utf-8 -*-
"""
Модуль обучения семантического узкого горла на признаках
замороженного семантического кодировщика
"""
from typing import Dict

from Common.Bottleneck import save_bottleneck,train_sembo
from Common.Config import config_to_dict
from Common.Corpus import read_corpus,semantic_features
from Common.Routines import run_with_progress

HISTORY_FIELDS:Dict[str,tuple] = {
    'step':('Шаг','INTEGER','номер шага оптимизатора'),
    'loss_recon':('L_recon','REAL','потеря восстановления'),
    'loss_tr':('L_tr','REAL','потеря временных отношений'),
    'total':('Итого','REAL','взвешенная сумма'),
    'lr':('Шаг обучения','REAL','lr на этом шаге'),
}

class Parser():
    def __init__(self,parameters:dict):
        self.__parameters:dict = parameters

    async def Start(self) -> Dict:
        config = self.__parameters.get('CONFIG')
        arguments = self.__parameters.get('ARGUMENTS')
        log = self.__parameters.get('LOG')
        outputWriter = self.__parameters.get('OUTPUTWRITER')

        items = read_corpus(arguments['input'],config.sample_rate)
        corpus = [features for _,features in semantic_features(items,config)]
        model,history,state = await run_with_progress(
            self.__parameters.get('UIREDRAW'),'Узкое горло',
            lambda progress:train_sembo(corpus,config.bottleneck,config.semantic_encoder.d_high,config.seed,
                                        log,progress))

        echo = config_to_dict(config)
        save_bottleneck(arguments['out'],model,state,echo,history)

        outputWriter.SetFields({name:list(description) for name,description in HISTORY_FIELDS.items()},
                               {name:description[1] for name,description in HISTORY_FIELDS.items()})
        for record in history:
            outputWriter.WriteRecord(record)
        outputWriter.SetInfo({'config':echo,'seed':config.seed,'checkpoint':arguments['out']})
        outputWriter.WriteMeta()
        await outputWriter.CloseOutput()

        final = history[-1] if history else {}
        return {'checkpoint':arguments['out'],'steps':len(history),
                'loss_recon':final.get('loss_recon'),'loss_tr':final.get('loss_tr')}

# -*- coding: utf-8 -*-
"""
Модуль обучения токенизатора

Узкое горло берется из --sembo или обучается здесь же на том же корпусе.
При непустой сетке tokenizer.kl_sweep обучается по одному варианту на
каждый вес KL; контрольные точки получают суффикс варианта.
"""
import os
from typing import Any,Dict,List,Optional

from Common.Bottleneck import load_bottleneck,train_sembo
from Common.Config import config_to_dict
from Common.Corpus import read_corpus,semantic_features
from Common.Routines import run_with_progress
from Common.TokenizerTraining import HISTORY_FIELDS,sweep_configs,train_tokenizer

class Parser():
    def __init__(self,parameters:dict):
        self.__parameters:dict = parameters

    def __Bottleneck(self,config:Any,items:list) -> Optional[Any]:
        if config.tokenizer.semantic_source != 'bottleneck':
            return None
        arguments = self.__parameters.get('ARGUMENTS')
        log = self.__parameters.get('LOG')
        if arguments.get('sembo'):
            model,_ = load_bottleneck(arguments['sembo'],config_to_dict(config))
            return model
        log.Warn('TrainTokenizer','Контрольная точка узкого горла не задана, обучение на текущем корпусе')
        corpus = [features for _,features in semantic_features(items,config)]
        model,_,_ = train_sembo(corpus,config.bottleneck,config.semantic_encoder.d_high,config.seed,log)
        model.SetRequiresGrad(False)
        return model

    @staticmethod
    def VariantPath(path:str,suffix:str) -> str:
        if not suffix:
            return path
        root,extension = os.path.splitext(path)
        return f'{root}_{suffix}{extension}'

    async def Start(self) -> Dict:
        config = self.__parameters.get('CONFIG')
        arguments = self.__parameters.get('ARGUMENTS')
        log = self.__parameters.get('LOG')
        outputWriter = self.__parameters.get('OUTPUTWRITER')

        items = read_corpus(arguments['input'],config.sample_rate)
        sembo = self.__Bottleneck(config,items)
        waves = [item.audio for item in items]

        fields = ('variant',) + HISTORY_FIELDS
        outputWriter.SetFields({name:[name,'TEXT' if name == 'variant' else 'REAL'] for name in fields},
                               {name:'TEXT' if name == 'variant' else 'REAL' for name in fields})
        checkpoints:List[Dict[str,Any]] = []
        for suffix,variant in sweep_configs(config):
            checkpoint = self.VariantPath(arguments['out'],suffix)
            resume = self.VariantPath(arguments['resume'],suffix) if arguments.get('resume') else None
            title = f'Токенизатор {suffix}'.rstrip()
            _,history = await run_with_progress(
                self.__parameters.get('UIREDRAW'),title,
                lambda progress:train_tokenizer(waves,variant,sembo,log,progress,checkpoint,resume))
            for record in history:
                outputWriter.WriteRecord(dict(record,variant=suffix))
            final = history[-1] if history else {}
            checkpoints.append({'variant':suffix,'checkpoint':checkpoint,'steps':len(history),
                                'kl_weight':variant.tokenizer.weights.kl,'mel':final.get('mel')})

        outputWriter.SetInfo({'config':config_to_dict(config),'seed':config.seed,'checkpoints':checkpoints})
        outputWriter.WriteMeta()
        await outputWriter.CloseOutput()
        return {'checkpoints':checkpoints,'history':outputWriter.OutputPath}

# -*- coding: utf-8 -*-
"""
Модуль спектрального анализа признаков корпуса

Отчет: эффективный ранг и k_alpha исходных признаков, слияния каналов
и PCA-проекции по каждому семейству и по всему корпусу.
"""
from collections import defaultdict
from typing import Dict

from Common.Config import config_to_dict
from Common.Corpus import mel_features,read_corpus,semantic_features
from Common.SpectralAnalysis import feature_report

class Parser():
    def __init__(self,parameters:dict):
        self.__parameters:dict = parameters

    async def Start(self) -> Dict:
        config = self.__parameters.get('CONFIG')
        arguments = self.__parameters.get('ARGUMENTS')
        log = self.__parameters.get('LOG')
        outputWriter = self.__parameters.get('OUTPUTWRITER')
        analysis = config.analysis

        items = read_corpus(arguments['input'],config.sample_rate)
        await self.__parameters.get('UIREDRAW')(f'Прочитано файлов: {len(items)}',20)

        extract = semantic_features if analysis.features == 'semantic' else mel_features
        families = defaultdict(list)
        for family,features in extract(items,config):
            families[family].append(features)
        await self.__parameters.get('UIREDRAW')('Признаки вычислены',60)

        report = feature_report(dict(families),analysis.alphas,analysis.merge_group,analysis.pca_retained,
                                analysis.pca_frame_cap,config.seed,log)
        report['features'] = analysis.features

        outputWriter.SetInfo({'config':config_to_dict(config),'seed':config.seed,'corpus':arguments['input']})
        outputWriter.WriteRecord(report)
        outputWriter.WriteMeta()
        await outputWriter.CloseOutput()
        log.Info('Analyze',f'Эффективный ранг {report["effective_rank"]:.3f} при размерности {report["dim"]}')
        return {'report':outputWriter.OutputPath,'dim':report['dim'],'effective_rank':report['effective_rank']}

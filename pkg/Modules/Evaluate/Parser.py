# -*- coding: utf-8 -*-
"""
Модуль оценки токенизатора

Наборы проверок:
    recon - расстояния mel и STFT между входом и восстановлением
    probe - линейный зонд на латентах mu синтетической задачи классов
    rtf   - коэффициент реального времени реконструкции

Файлы обрабатываются последовательно в порядке корпуса.
"""
import asyncio
from typing import Any,Dict,List

from Common.Config import config_to_dict
from Common.Corpus import read_corpus
from Common.Dsp import AudioBuffer
from Common.Evalkit import (MetricReport,linear_probe,make_probe_dataset,measure_rtf,reconstruction_metrics,
                            shuffled_label_probe)
from Common.Synth import CORPUS_FAMILIES,generate_clip
from Common.Tokenizer import encode_audio,reconstruct
from Common.TokenizerTraining import load_tokenizer

class Parser():
    def __init__(self,parameters:dict):
        self.__parameters:dict = parameters

    def __Items(self,config:Any,sampleRate:int) -> List[tuple]:
        """Корпус оценки: --corpus или отложенные синтетические клипы"""
        arguments = self.__parameters.get('ARGUMENTS')
        evaluation = config.eval
        if arguments.get('corpus'):
            items = read_corpus(arguments['corpus'],sampleRate,evaluation.recon_items)
            return [(item.name,item.audio) for item in items]
        items = []
        for index in range(evaluation.recon_items):
            family = CORPUS_FAMILIES[index % len(CORPUS_FAMILIES)]
            samples = generate_clip(family,evaluation.seed,index,evaluation.recon_seconds,sampleRate)
            items.append((f'{family}_{index:05d}',AudioBuffer(samples,sampleRate)))
        return items

    async def Start(self) -> Dict:
        config = self.__parameters.get('CONFIG')
        arguments = self.__parameters.get('ARGUMENTS')
        log = self.__parameters.get('LOG')
        outputWriter = self.__parameters.get('OUTPUTWRITER')
        redraw = self.__parameters.get('UIREDRAW')
        evaluation = config.eval
        suites = list(dict.fromkeys(arguments.get('suite') or evaluation.suites))

        model,stored = load_tokenizer(arguments['model'])
        report = MetricReport(seed=evaluation.seed,config=config_to_dict(stored))
        report.values['suites'] = suites

        items = self.__Items(config,stored.sample_rate) if {'recon','rtf'} & set(suites) else []
        if 'recon' in suites:
            for position,(name,audio) in enumerate(items,1):
                report.AddFile(name,reconstruction_metrics(audio,reconstruct(model,audio)))
                asyncio.create_task(redraw(f'Восстановление {name}',int(100 * position / len(items))))
                await asyncio.sleep(0)
            log.Info('Evaluate',f'Восстановление: {report.Aggregate()}')

        if 'probe' in suites:
            dataset = make_probe_dataset(evaluation.seed,evaluation.probe_classes,evaluation.items_per_class,
                                         sample_rate=stored.sample_rate)
            features = [encode_audio(model,audio,'mu') for audio,_ in dataset.items]
            probe = {'accuracy':linear_probe(features,dataset,evaluation.probe_steps,evaluation.probe_lr,
                                             evaluation.seed),
                     'shuffled_accuracy':shuffled_label_probe(features,dataset,evaluation.probe_steps,
                                                              evaluation.probe_lr,evaluation.seed),
                     'chance':1.0 / dataset.classes,
                     'classes':dataset.classes,
                     'train_items':len(dataset.train),
                     'test_items':len(dataset.test)}
            if arguments.get('baseline'):
                baseline,_ = load_tokenizer(arguments['baseline'])
                baselineFeatures = [encode_audio(baseline,audio,'mu') for audio,_ in dataset.items]
                probe['baseline_accuracy'] = linear_probe(baselineFeatures,dataset,evaluation.probe_steps,
                                                          evaluation.probe_lr,evaluation.seed)
            report.values['probe'] = probe
            log.Info('Evaluate',f'Зонд: точность {probe["accuracy"]:.3f}, случайные метки '
                                f'{probe["shuffled_accuracy"]:.3f}, уровень угадывания {probe["chance"]:.3f}')

        if 'rtf' in suites:
            audios = [audio for _,audio in items]
            report.values['rtf'] = measure_rtf(lambda audio: reconstruct(model,audio),audios,
                                               warmup=evaluation.rtf_warmup)
            log.Info('Evaluate',f'RTF {report.values["rtf"]:.4f}')

        document = report.ToDict()
        outputWriter.SetInfo({'model':arguments['model'],'seed':evaluation.seed})
        outputWriter.WriteRecord(document)
        outputWriter.WriteMeta()
        await outputWriter.CloseOutput()
        return {'report':outputWriter.OutputPath,'aggregate':document['aggregate'],
                'probe':report.values.get('probe'),'rtf':report.values.get('rtf')}

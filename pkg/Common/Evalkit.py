# -*- coding: utf-8 -*-
"""
Модуль оценки: расстояния восстановления, коэффициент реального
времени и линейный зонд на синтетической задаче классификации

"""

import time
from dataclasses import dataclass,field
from typing import Any,Callable,Dict,List,Optional,Sequence,Tuple,Union

import numpy as np

from Common.Dsp import AudioBuffer,FeatureSequence,fit_length,mel_spectrogram,stft
from Common.Errors import ConfigValidationError,DegenerateSplitError,EmptyCorpusError
from Common.Grad import Precision,Tensor,log_softmax
from Common.Layers import Linear
from Common.Optim import AdamW,CosineSchedule,OptimizerState
from Common.Synth import PROBE_GENERATORS

REPORT_VERSION:int = 1
REFERENCE_WINDOW:int = 1024
REFERENCE_HOP:int = 256
REFERENCE_MEL_BINS:int = 80
MAGNITUDE_FLOOR:float = 1e-5
TRAIN_FRACTION:float = 0.8

AudioLike = Union[AudioBuffer,np.ndarray]

#----------------------------------------------------------------
#-------------------------РАССТОЯНИЯ-----------------------------
#----------------------------------------------------------------
def _Pair(x:AudioLike,x_hat:AudioLike,sample_rate:int) -> Tuple[AudioBuffer,AudioBuffer]:
    left = x.samples if isinstance(x,AudioBuffer) else np.asarray(x,dtype=np.float64)
    right = x_hat.samples if isinstance(x_hat,AudioBuffer) else np.asarray(x_hat,dtype=np.float64)
    length = max(left.size,right.size)
    return AudioBuffer(fit_length(left,length),sample_rate),AudioBuffer(fit_length(right,length),sample_rate)

def mel_distance(x:AudioLike,x_hat:AudioLike,sample_rate:int=16000) -> float:
    """Среднее |log-mel(x) - log-mel(x_hat)|, окно 1024, шаг 256, 80 полос"""
    left,right = _Pair(x,x_hat,sample_rate)
    a = mel_spectrogram(left,REFERENCE_WINDOW,REFERENCE_HOP,REFERENCE_MEL_BINS).values
    b = mel_spectrogram(right,REFERENCE_WINDOW,REFERENCE_HOP,REFERENCE_MEL_BINS).values
    return float(np.mean(np.abs(a - b)))

def stft_distance(x:AudioLike,x_hat:AudioLike,sample_rate:int=16000) -> float:
    """Среднее |log(|X| + 1e-5) - log(|X_hat| + 1e-5)|"""
    left,right = _Pair(x,x_hat,sample_rate)
    a = np.log(np.abs(stft(left,REFERENCE_WINDOW,REFERENCE_HOP).bins) + MAGNITUDE_FLOOR)
    b = np.log(np.abs(stft(right,REFERENCE_WINDOW,REFERENCE_HOP).bins) + MAGNITUDE_FLOOR)
    return float(np.mean(np.abs(a - b)))

def measure_rtf(process:Callable[[AudioBuffer],Any],corpus:Sequence[AudioBuffer],
                clock:Callable[[],float]=time.perf_counter,warmup:int=1) -> float:
    """
    Время обработки / длительность, среднее по файлам

    Первые warmup прогонов на первом файле не измеряются.
    """
    if not corpus:
        raise EmptyCorpusError('rtf')
    for _ in range(warmup):
        process(corpus[0])
    ratios = []
    for audio in corpus:
        started = clock()
        process(audio)
        ratios.append((clock() - started) / audio.duration)
    return float(np.mean(ratios))

#----------------------------------------------------------------
#-------------------------ЛИНЕЙНЫЙ ЗОНД--------------------------
#----------------------------------------------------------------
@dataclass
class ProbeDataset():
    items:List[Tuple[AudioBuffer,int]]
    classes:int
    train:List[int]
    test:List[int]

    @property
    def labels(self) -> np.ndarray:
        return np.array([label for _,label in self.items],dtype=np.int64)

def make_probe_dataset(seed:int,classes:int=4,items_per_class:int=20,seconds:float=1.0,
                       sample_rate:int=16000) -> ProbeDataset:
    """Класс c порождается семейством PROBE_GENERATORS[c]; разбиение 80/20 внутри каждого класса"""
    if not 2 <= classes <= len(PROBE_GENERATORS):
        raise ConfigValidationError([f'eval.probe_classes: {classes} вне диапазона [2, {len(PROBE_GENERATORS)}]'])
    items:List[Tuple[AudioBuffer,int]] = []
    for label in range(classes):
        for index in range(items_per_class):
            rng = np.random.default_rng([seed,label,index])
            items.append((AudioBuffer(PROBE_GENERATORS[label](rng,seconds,sample_rate),sample_rate),label))

    splitRng = np.random.default_rng([seed,len(PROBE_GENERATORS)])
    trainCount = int(round(TRAIN_FRACTION * items_per_class))
    train,test = [],[]
    for label in range(classes):
        order = label * items_per_class + splitRng.permutation(items_per_class)
        train.extend(int(i) for i in order[:trainCount])
        test.extend(int(i) for i in order[trainCount:])
    return ProbeDataset(items=items,classes=classes,train=sorted(train),test=sorted(test))

def pooled_features(features:Sequence[Union[FeatureSequence,np.ndarray]]) -> np.ndarray:
    """Среднее по времени для каждого элемента: (N, D)"""
    rows = []
    for item in features:
        values = np.asarray(item.values if isinstance(item,FeatureSequence) else item,dtype=np.float64)
        rows.append(values.mean(axis=0) if values.ndim == 2 else values)
    return np.stack(rows)

def linear_probe(features:Sequence[Union[FeatureSequence,np.ndarray]],dataset:ProbeDataset,steps:int=2000,
                 lr:float=1e-2,seed:int=0,labels:Optional[np.ndarray]=None) -> float:
    """
    Многоклассовая логистическая регрессия на обучающей части, точность на тестовой

    Признаки стандартизуются по обучающей части; AdamW с постоянным шагом
    и без затухания весов.
    """
    pooled = pooled_features(features)
    labels = dataset.labels if labels is None else np.asarray(labels,dtype=np.int64)
    train,test = np.array(dataset.train),np.array(dataset.test)
    if np.unique(labels[train]).size < 2:
        raise DegenerateSplitError('train')
    if test.size == 0:
        raise DegenerateSplitError('test')

    mean = pooled[train].mean(axis=0)
    std = pooled[train].std(axis=0)
    std[std < 1e-12] = 1.0
    standardized = (pooled - mean) / std

    with Precision(np.float64):
        layer = Linear(standardized.shape[1],dataset.classes,np.random.default_rng(seed))
        schedule = CosineSchedule(base_lr=lr,min_lr=lr,warmup_steps=0,max_steps=max(steps,1))
        optimizer = AdamW(list(layer.NamedParameters()),OptimizerState(schedule=schedule,beta1=0.9,beta2=0.999,
                                                                       weight_decay=0.0))
        inputs = Tensor(standardized[train])
        targets = np.eye(dataset.classes)[labels[train]]
        for _ in range(steps):
            optimizer.ZeroGrad()
            loss = -(log_softmax(layer(inputs)) * targets).Sum(axis=-1).Mean()
            loss.Backward()
            optimizer.Step()
        logits = layer(Tensor(standardized[test])).values
    return float(np.mean(np.argmax(logits,axis=-1) == labels[test]))

def shuffled_label_probe(features:Sequence[Union[FeatureSequence,np.ndarray]],dataset:ProbeDataset,
                         steps:int=2000,lr:float=1e-2,seed:int=0) -> float:
    """Контроль: тот же зонд на перемешанных метках должен давать уровень случайного угадывания"""
    labels = dataset.labels.copy()
    np.random.default_rng([seed,1]).shuffle(labels)
    return linear_probe(features,dataset,steps,lr,seed,labels=labels)

#----------------------------------------------------------------
#----------------------------ОТЧЕТ-------------------------------
#----------------------------------------------------------------
@dataclass
class MetricReport():
    seed:int
    config:Dict[str,Any]
    files:List[str] = field(default_factory=list)
    per_file:Dict[str,List[float]] = field(default_factory=dict)
    values:Dict[str,Any] = field(default_factory=dict)

    def AddFile(self,name:str,metrics:Dict[str,float]) -> None:
        self.files.append(name)
        for metric,value in metrics.items():
            self.per_file.setdefault(metric,[]).append(float(value))

    def Aggregate(self) -> Dict[str,float]:
        return {metric:float(np.mean(values)) for metric,values in sorted(self.per_file.items())}

    def ToDict(self) -> Dict[str,Any]:
        return {'format_version':REPORT_VERSION,
                'seed':self.seed,
                'config':self.config,
                'files':list(self.files),
                'per_file':{metric:list(values) for metric,values in sorted(self.per_file.items())},
                'aggregate':self.Aggregate(),
                'values':dict(self.values)}

def reconstruction_metrics(original:AudioBuffer,restored:AudioBuffer) -> Dict[str,float]:
    return {'mel_distance':mel_distance(original,restored,original.sample_rate),
            'stft_distance':stft_distance(original,restored,original.sample_rate)}

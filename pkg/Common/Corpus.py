# -*- coding: utf-8 -*-
"""
Модуль синтетического корпуса

Каталог корпуса содержит WAV-файлы и manifest.json:
    {format_version, seed, sample_rate, clip_seconds, total_seconds,
     files: [{name, family, seconds, sha256}]}
"""

import math
import os
from dataclasses import dataclass
from typing import Any,Dict,List,Optional,Tuple

import numpy as np

from Common.Dsp import AudioBuffer,FeatureSequence,load_audio,mel_spectrogram,save_wav
from Common.Errors import EmptyCorpusError
from Common.Routines import FileContentReader,NullLog
from Common.SemanticEncoder import FrozenSemanticEncoder,semantic_encode
from Common.Synth import CORPUS_FAMILIES,generate_clip

MANIFEST_NAME:str = 'manifest.json'
MANIFEST_VERSION:int = 1

@dataclass
class CorpusItem():
    name:str
    family:str
    audio:AudioBuffer

#----------------------------------------------------------------
def family_counts(total:int,proportions:Dict[str,float]) -> Dict[str,int]:
    """Разбиение total файлов по долям методом наибольшего остатка"""
    families = [name for name in CORPUS_FAMILIES if name in proportions]
    weight = sum(proportions[name] for name in families)
    quotas = {name:total * proportions[name] / weight for name in families}
    counts = {name:int(math.floor(quotas[name])) for name in families}
    leftover = total - sum(counts.values())
    order = sorted(families,key=lambda name:(-(quotas[name] - counts[name]),families.index(name)))
    for name in order[:leftover]:
        counts[name] += 1
    return counts

def clip_lengths(hours:float,clip_seconds:float,sample_rate:int) -> List[int]:
    """Длины клипов в отсчетах: целые клипы и один укороченный остаток"""
    totalSamples = int(round(hours * 3600.0 * sample_rate))
    clipSamples = int(round(clip_seconds * sample_rate))
    lengths = [clipSamples] * (totalSamples // clipSamples)
    if totalSamples % clipSamples:
        lengths.append(totalSamples % clipSamples)
    return lengths

def make_corpus(seed:int,hours:float,out_dir:str,config:Any,log:Any=None) -> Dict[str,Any]:
    """Детерминированная генерация WAV-файлов корпуса и манифеста"""
    log = log or NullLog()
    sampleRate = config.sample_rate
    lengths = clip_lengths(hours,config.corpus.clip_seconds,sampleRate)
    counts = family_counts(len(lengths),config.corpus.proportions)
    families = [name for name in CORPUS_FAMILIES for _ in range(counts.get(name,0))]

    os.makedirs(out_dir,exist_ok=True)
    files = []
    for index,(family,length) in enumerate(zip(families,lengths)):
        name = f'{family}_{index:05d}.wav'
        path = os.path.join(out_dir,name)
        samples = generate_clip(family,seed,index,length / sampleRate,sampleRate)
        save_wav(path,AudioBuffer(samples[:length],sampleRate))
        files.append({'name':name,'family':family,'seconds':length / sampleRate,
                      'sha256':FileContentReader.Sha256(path)})
    manifest = {'format_version':MANIFEST_VERSION,'seed':seed,'sample_rate':sampleRate,
                'clip_seconds':config.corpus.clip_seconds,'files':files,
                'total_seconds':sum(lengths) / sampleRate}
    FileContentReader.WriteJson(os.path.join(out_dir,MANIFEST_NAME),manifest)
    log.Info('Corpus',f'Сгенерировано файлов: {len(files)}, {manifest["total_seconds"]:.1f} с: {out_dir}')
    return manifest

#----------------------------------------------------------------
def read_manifest(corpus_dir:str) -> Dict[str,Any]:
    """Манифест корпуса; без manifest.json берутся все WAV каталога"""
    path = os.path.join(corpus_dir,MANIFEST_NAME)
    if FileContentReader.IsExists(path):
        return FileContentReader.ReadJson(path)
    names = [name for name in FileContentReader.ListDir(corpus_dir) if name.lower().endswith('.wav')]
    return {'format_version':MANIFEST_VERSION,
            'files':[{'name':name,'family':name.split('_')[0] if '_' in name else 'unknown'} for name in names]}

def read_corpus(corpus_dir:str,sample_rate:int,limit:Optional[int]=None) -> List[CorpusItem]:
    entries = read_manifest(corpus_dir).get('files',[])
    if limit is not None:
        entries = entries[:limit]
    items = [CorpusItem(entry['name'],entry.get('family','unknown'),
                        load_audio(os.path.join(corpus_dir,entry['name']),sample_rate))
             for entry in entries]
    if not items:
        raise EmptyCorpusError(corpus_dir)
    return items

def semantic_encoder(config:Any) -> FrozenSemanticEncoder:
    encoderConfig = config.semantic_encoder
    return FrozenSemanticEncoder(encoderConfig.seed,config.mel_bins,encoderConfig.d_high,encoderConfig.hidden,
                                 config.mel_rate)

def mel_features(items:List[CorpusItem],config:Any) -> List[Tuple[str,FeatureSequence]]:
    features = []
    for item in items:
        mel = mel_spectrogram(item.audio,config.window_size,config.hop,config.mel_bins)
        features.append((item.family,FeatureSequence(mel.values,mel.frame_rate)))
    return features

def semantic_features(items:List[CorpusItem],config:Any) -> List[Tuple[str,FeatureSequence]]:
    """Признаки замороженного семантического кодировщика для каждого файла"""
    encoder = semantic_encoder(config)
    features = []
    for item in items:
        mel = mel_spectrogram(item.audio,config.window_size,config.hop,config.mel_bins)
        features.append((item.family,semantic_encode(encoder,mel)))
    return features

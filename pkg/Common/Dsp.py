# -*- coding: utf-8 -*-
"""
Модуль цифровой обработки звука

Чтение и запись WAV, передискретизация, STFT/ISTFT, мел-банк фильтров
и лог-мел спектрограмма. Кадрирование центрированное с отражением:
число кадров = floor(num_samples / hop) + 1.

Те же преобразования в дифференцируемом виде (над Common.Grad.Tensor)
используются функциями потерь и дискриминатором токенизатора.
"""

import functools
import os
import warnings
from dataclasses import dataclass,field
from math import gcd
from typing import Optional,Tuple

import librosa
import numpy as np
import scipy.io.wavfile
import scipy.signal

from Common.Errors import (AudioFileMissingError,EmptyAudioError,InvalidAudioError,
                           NonColaError,StftConfigError,UnsupportedCodecError)
from Common.Grad import Tensor,gather,irfft,overlap_add,rfft

CANONICAL_SAMPLE_RATE:int = 16000
LOG_FLOOR:float = 1e-5
# Полуширина ядра resample_poly в отсчетах max(up, down)
RESAMPLE_HALF_WIDTH:int = 10
RESAMPLE_WINDOW:Tuple[str,float] = ('kaiser',5.0)

#----------------------------------------------------------------
#--------------------------ТИПЫ ДАННЫХ---------------------------
#----------------------------------------------------------------
@dataclass(eq=False)
class AudioBuffer():
    samples:np.ndarray
    sample_rate:int

    def __post_init__(self):
        self.samples = np.asarray(self.samples,dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidAudioError(f'ожидался одномерный массив, форма {self.samples.shape}')
        if self.sample_rate <= 0:
            raise InvalidAudioError(f'частота дискретизации {self.sample_rate}')
        if not np.all(np.isfinite(self.samples)):
            raise InvalidAudioError('отсчеты содержат NaN или Inf')

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return self.samples.size

@dataclass(eq=False)
class StftFrames():
    bins:np.ndarray
    window_size:int
    hop:int
    window:np.ndarray
    num_samples:int
    sample_rate:int
    cola:bool = field(init=False)

    def __post_init__(self):
        if self.bins.shape[-1] != self.window_size // 2 + 1:
            raise StftConfigError(self.window_size,self.hop,'число частотных отсчетов')
        self.cola = is_cola(self.window_size,self.hop)

@dataclass(eq=False)
class MelFrames():
    values:np.ndarray
    frame_rate:float
    mel_bins:int

    @property
    def frames(self) -> int:
        return self.values.shape[0]

@dataclass(eq=False)
class FeatureSequence():
    """Матрица T x D признаков с частотой кадров"""
    values:np.ndarray
    frame_rate:float

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

#----------------------------------------------------------------
#--------------------------ВВОД-ВЫВОД----------------------------
#----------------------------------------------------------------
def load_wav(path:str) -> AudioBuffer:
    """Чтение PCM WAV (16/32 бит целые или float); каналы усредняются"""
    if not os.path.isfile(path):
        raise AudioFileMissingError(path)
    try:
        rate,data = scipy.io.wavfile.read(path)
    except ValueError as e:
        raise UnsupportedCodecError(path,str(e)) from None

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32,np.float64):
        samples = np.clip(data.astype(np.float64),-1.0,1.0)
    else:
        raise UnsupportedCodecError(path,f'тип отсчетов {data.dtype}')

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise EmptyAudioError(path)
    return AudioBuffer(samples,int(rate))

def save_wav(path:str,audio:AudioBuffer) -> None:
    """Запись моно PCM 16 бит little-endian"""
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder,exist_ok=True)
    pcm = np.clip(np.rint(audio.samples * 32768.0),-32768,32767).astype('<i2')
    scipy.io.wavfile.write(path,audio.sample_rate,pcm)

def resample_filter(up:int,down:int) -> np.ndarray:
    """ФНЧ для resample_poly: 2 * RESAMPLE_HALF_WIDTH * max(up, down) + 1 отводов, срез на 1/max(up, down)"""
    rate = max(up,down)
    return scipy.signal.firwin(2 * RESAMPLE_HALF_WIDTH * rate + 1,1.0 / rate,window=RESAMPLE_WINDOW)

def resample(audio:AudioBuffer,target_rate:int) -> AudioBuffer:
    """Полифазная передискретизация с окном Кайзера"""
    if target_rate <= 0:
        raise InvalidAudioError(f'целевая частота {target_rate}')
    if target_rate == audio.sample_rate:
        return audio
    divisor = gcd(int(target_rate),int(audio.sample_rate))
    up = int(target_rate) // divisor
    down = int(audio.sample_rate) // divisor
    samples = scipy.signal.resample_poly(audio.samples,up,down,window=resample_filter(up,down))
    return AudioBuffer(samples,int(target_rate))

def load_audio(path:str,sample_rate:int=CANONICAL_SAMPLE_RATE) -> AudioBuffer:
    """Чтение с приведением к рабочей частоте дискретизации"""
    return resample(load_wav(path),sample_rate)

def fit_length(samples:np.ndarray,length:int) -> np.ndarray:
    if samples.shape[-1] >= length:
        return samples[...,:length]
    width = [(0,0)] * (samples.ndim - 1) + [(0,length - samples.shape[-1])]
    return np.pad(samples,width)

#----------------------------------------------------------------
#----------------------КЭШИРУЕМЫЕ ТАБЛИЦЫ------------------------
#----------------------------------------------------------------
def _Frozen(array:np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array

@functools.lru_cache(maxsize=32)
def hann_window(window_size:int) -> np.ndarray:
    # периодическое окно Ханна
    return _Frozen(scipy.signal.get_window('hann',window_size))

@functools.lru_cache(maxsize=32)
def is_cola(window_size:int,hop:int) -> bool:
    return bool(scipy.signal.check_COLA(hann_window(window_size),window_size,window_size - hop))

@functools.lru_cache(maxsize=64)
def frame_indices(num_samples:int,window_size:int,hop:int) -> np.ndarray:
    """Индексы отсчетов для каждого кадра с центровкой и отражением краев"""
    pad = window_size // 2
    mode = 'reflect' if num_samples > 1 else 'edge'
    padded = np.pad(np.arange(num_samples),pad,mode=mode)
    frames = num_samples // hop + 1
    starts = np.arange(frames)[:,None] * hop
    return _Frozen(padded[starts + np.arange(window_size)[None,:]])

@functools.lru_cache(maxsize=32)
def mel_filterbank(sample_rate:int,window_size:int,mel_bins:int) -> np.ndarray:
    """Треугольные фильтры по шкале HTK от 0 Гц до Найквиста"""
    with warnings.catch_warnings():
        # пустые фильтры на низких частотах при большом числе полос допустимы
        warnings.simplefilter('ignore',UserWarning)
        bank = librosa.filters.mel(sr=sample_rate,n_fft=window_size,n_mels=mel_bins,
                                   fmin=0.0,fmax=sample_rate / 2.0,htk=True,norm=None)
    return _Frozen(bank.astype(np.float64))

def mel_center_frequencies(sample_rate:int,mel_bins:int) -> np.ndarray:
    return librosa.mel_frequencies(n_mels=mel_bins + 2,fmin=0.0,fmax=sample_rate / 2.0,htk=True)[1:-1]

@functools.lru_cache(maxsize=32)
def synthesis_envelope(frames:int,window_size:int,hop:int) -> np.ndarray:
    squared = hann_window(window_size) ** 2
    envelope = np.zeros((frames - 1) * hop + window_size)
    for f in range(frames):
        envelope[f * hop:f * hop + window_size] += squared
    return _Frozen(envelope)

def _CheckStft(window_size:int,hop:int) -> None:
    if window_size <= 0 or window_size & (window_size - 1):
        raise StftConfigError(window_size,hop,'длина окна не степень двойки')
    if hop <= 0 or hop > window_size:
        raise StftConfigError(window_size,hop,'шаг больше длины окна')

#----------------------------------------------------------------
#------------------------ПРЕОБРАЗОВАНИЯ--------------------------
#----------------------------------------------------------------
def stft(audio:AudioBuffer,window_size:int,hop:int) -> StftFrames:
    _CheckStft(window_size,hop)
    if len(audio) == 0:
        raise EmptyAudioError('stft')
    window = hann_window(window_size)
    frames = audio.samples[frame_indices(len(audio),window_size,hop)] * window
    bins = np.fft.rfft(frames,axis=-1)
    return StftFrames(bins,window_size,hop,window,len(audio),audio.sample_rate)

def istft(frames:StftFrames) -> AudioBuffer:
    """Взвешенное перекрытие со сложением; нормировка на сумму квадратов окна"""
    if not frames.cola:
        raise NonColaError(frames.window_size,frames.hop)
    count = frames.bins.shape[0]
    pieces = np.fft.irfft(frames.bins,n=frames.window_size,axis=-1) * frames.window
    signal = np.zeros((count - 1) * frames.hop + frames.window_size)
    for f in range(count):
        signal[f * frames.hop:f * frames.hop + frames.window_size] += pieces[f]
    envelope = synthesis_envelope(count,frames.window_size,frames.hop)
    signal = np.divide(signal,envelope,out=np.zeros_like(signal),where=envelope > 1e-11)
    pad = frames.window_size // 2
    return AudioBuffer(signal[pad:pad + frames.num_samples],frames.sample_rate)

def power_spectrogram(audio:AudioBuffer,window_size:int,hop:int) -> np.ndarray:
    bins = stft(audio,window_size,hop).bins
    return bins.real ** 2 + bins.imag ** 2

def mel_spectrogram(audio:AudioBuffer,window_size:int,hop:int,mel_bins:int) -> MelFrames:
    """log(mel_filterbank . |STFT|^2 + LOG_FLOOR), кадры x полосы"""
    if mel_bins < 1:
        raise StftConfigError(window_size,hop,'число мел-полос меньше 1')
    bank = mel_filterbank(audio.sample_rate,window_size,mel_bins)
    values = np.log(power_spectrogram(audio,window_size,hop) @ bank.T + LOG_FLOOR)
    return MelFrames(values,audio.sample_rate / hop,mel_bins)

#----------------------------------------------------------------
#---------------------ДИФФЕРЕНЦИРУЕМЫЕ ВЕРСИИ--------------------
#----------------------------------------------------------------
def power_spectrogram_tensor(x:Tensor,window_size:int,hop:int) -> Tensor:
    """(..., N) -> (..., кадры, window_size/2+1)"""
    _CheckStft(window_size,hop)
    frames = gather(x,frame_indices(x.shape[-1],window_size,hop)) * hann_window(window_size)
    spectrum = rfft(frames)
    return (spectrum * spectrum).Sum(axis=-1)

def log_mel_tensor(x:Tensor,window_size:int,hop:int,mel_bins:int,sample_rate:int) -> Tensor:
    bank = mel_filterbank(sample_rate,window_size,mel_bins)
    return (power_spectrogram_tensor(x,window_size,hop) @ bank.T + LOG_FLOOR).Log()

def istft_head(spectrum:Tensor,window_size:int,hop:int) -> Tensor:
    """
    Обратное STFT с выравниванием 'same': (B, F, K, 2) -> (B, F*hop)

    Каждый кадр домножается на окно синтеза, после сложения сигнал
    делится на огибающую суммы квадратов окна.
    """
    count = spectrum.shape[-3]
    frames = irfft(spectrum,window_size) * hann_window(window_size)
    signal = overlap_add(frames,hop)
    envelope = np.maximum(synthesis_envelope(count,window_size,hop),1e-11)
    signal = signal / envelope
    trim = (window_size - hop) // 2
    return signal[:,trim:trim + count * hop]

def pad_frames(values:np.ndarray,multiple:int) -> np.ndarray:
    """Дополняет ось кадров (-2) кадрами тишины log(LOG_FLOOR) до кратной длины"""
    remainder = values.shape[-2] % multiple
    if remainder == 0:
        return values
    width = [(0,0)] * values.ndim
    width[-2] = (0,multiple - remainder)
    return np.pad(values,width,constant_values=np.log(LOG_FLOOR))

# -*- coding: utf-8 -*-
"""
Модуль синтеза тестового звука

Три семейства корпуса (речеподобное, музыкальное, шумовые события),
четыре семейства зондирующей задачи и признаки ограниченного ранга.
Каждый сигнал полностью определяется генератором случайных чисел.
"""

from typing import Callable,Dict,List,Tuple

import numpy as np
import scipy.signal

CORPUS_FAMILIES:Tuple[str,...] = ('speech','music','audio')

#----------------------------------------------------------------
def _Normalize(signal:np.ndarray,peak:float) -> np.ndarray:
    top = np.max(np.abs(signal)) if signal.size else 0.0
    if top <= 0:
        return signal
    return signal * (peak / top)

def _Resonator(signal:np.ndarray,frequency:float,bandwidth:float,sampleRate:int) -> np.ndarray:
    # двухполюсный резонатор формантного синтеза
    radius = np.exp(-np.pi * bandwidth / sampleRate)
    a = [1.0,-2.0 * radius * np.cos(2.0 * np.pi * frequency / sampleRate),radius * radius]
    return scipy.signal.lfilter([1.0 - radius],a,signal)

def _Bandpass(signal:np.ndarray,low:float,high:float,sampleRate:int,order:int=4) -> np.ndarray:
    high = min(high,0.45 * sampleRate)
    sos = scipy.signal.butter(order,[low,high],btype='bandpass',fs=sampleRate,output='sos')
    return scipy.signal.sosfilt(sos,signal)

#----------------------------------------------------------------
#---------------------------КОРПУС-------------------------------
#----------------------------------------------------------------
def speech_like(rng:np.random.Generator,seconds:float,sampleRate:int) -> np.ndarray:
    """Слоги: импульсная последовательность через каскад формант"""
    total = int(round(seconds * sampleRate))
    out = np.zeros(total)
    position = int(rng.uniform(0.02,0.1) * sampleRate)
    while position < total:
        length = int(rng.uniform(0.15,0.35) * sampleRate)
        startPitch = rng.uniform(100.0,220.0)
        pitch = np.linspace(startPitch,startPitch * rng.uniform(0.8,1.2),length)
        phase = np.cumsum(pitch / sampleRate)
        excitation = np.diff(np.floor(phase),prepend=0.0)
        excitation += 0.02 * rng.standard_normal(length)

        syllable = excitation
        for low,high,bandwidth in ((300.0,900.0,80.0),(900.0,2200.0,120.0),(2200.0,3200.0,160.0)):
            syllable = _Resonator(syllable,rng.uniform(low,high),bandwidth,sampleRate)
        syllable *= scipy.signal.get_window('hann',length,fftbins=False)

        end = min(total,position + length)
        out[position:end] += syllable[:end - position]
        position += length + int(rng.uniform(0.04,0.15) * sampleRate)
    return _Normalize(out,rng.uniform(0.3,0.7))

def music_like(rng:np.random.Generator,seconds:float,sampleRate:int) -> np.ndarray:
    """Последовательность аккордов из гармонических тонов с затуханием"""
    total = int(round(seconds * sampleRate))
    out = np.zeros(total)
    chords = 4
    chordLength = max(1,total // chords)
    root = rng.integers(48,61)
    for c in range(chords):
        start = c * chordLength
        length = total - start if c == chords - 1 else chordLength
        t = np.arange(length) / sampleRate
        third = 4 if rng.random() < 0.5 else 3
        base = root + rng.choice([0,5,7,-3])
        envelope = np.minimum(1.0,t / 0.01) * np.exp(-rng.uniform(2.0,6.0) * t)
        for interval in (0,third,7):
            frequency = 440.0 * 2.0 ** ((base + interval - 69) / 12.0)
            phase = rng.uniform(0.0,2.0 * np.pi)
            for harmonic in range(1,6):
                if frequency * harmonic < 0.45 * sampleRate:
                    out[start:start + length] += np.sin(2.0 * np.pi * frequency * harmonic * t + phase) / harmonic * envelope
    return _Normalize(out,rng.uniform(0.3,0.7))

def audio_like(rng:np.random.Generator,seconds:float,sampleRate:int) -> np.ndarray:
    """Полосовые шумовые события поверх тихого фона"""
    total = int(round(seconds * sampleRate))
    out = 0.01 * _Bandpass(rng.standard_normal(total),50.0,1000.0,sampleRate,order=2)
    events = 1 + rng.poisson(2.0 * seconds)
    for _ in range(events):
        length = int(rng.uniform(0.05,0.6) * sampleRate)
        start = int(rng.integers(0,max(1,total - length // 2)))
        low = rng.uniform(100.0,4000.0)
        band = _Bandpass(rng.standard_normal(length),low,low * rng.uniform(1.5,4.0),sampleRate)
        t = np.arange(length) / sampleRate
        band *= np.minimum(1.0,t / 0.005) * np.exp(-rng.uniform(3.0,20.0) * t)
        end = min(total,start + length)
        out[start:end] += band[:end - start] * rng.uniform(0.3,1.0)
    return _Normalize(out,rng.uniform(0.3,0.7))

CORPUS_GENERATORS:Dict[str,Callable[[np.random.Generator,float,int],np.ndarray]] = {
    'speech':speech_like,
    'music':music_like,
    'audio':audio_like,
}

def generate_clip(family:str,seed:int,index:int,seconds:float,sampleRate:int) -> np.ndarray:
    rng = np.random.default_rng([seed,index])
    return CORPUS_GENERATORS[family](rng,seconds,sampleRate)

#----------------------------------------------------------------
#------------------------ЗОНДИРУЮЩАЯ ЗАДАЧА----------------------
#----------------------------------------------------------------
def probe_tone(rng:np.random.Generator,seconds:float,sampleRate:int) -> np.ndarray:
    t = np.arange(int(round(seconds * sampleRate))) / sampleRate
    return 0.5 * np.sin(2.0 * np.pi * rng.uniform(200.0,400.0) * t + rng.uniform(0.0,2.0 * np.pi))

def probe_chord(rng:np.random.Generator,seconds:float,sampleRate:int) -> np.ndarray:
    t = np.arange(int(round(seconds * sampleRate))) / sampleRate
    base = rng.uniform(500.0,1000.0)
    return 0.3 * (np.sin(2.0 * np.pi * base * t + rng.uniform(0.0,2.0 * np.pi))
                  + np.sin(2.0 * np.pi * 1.5 * base * t + rng.uniform(0.0,2.0 * np.pi)))

def probe_band_noise(rng:np.random.Generator,seconds:float,sampleRate:int) -> np.ndarray:
    centre = rng.uniform(2000.0,3000.0)
    noise = _Bandpass(rng.standard_normal(int(round(seconds * sampleRate))),centre - 200.0,centre + 200.0,sampleRate)
    return _Normalize(noise,0.5)

def probe_am_tone(rng:np.random.Generator,seconds:float,sampleRate:int) -> np.ndarray:
    t = np.arange(int(round(seconds * sampleRate))) / sampleRate
    carrier = rng.uniform(4000.0,6000.0)
    modulation = 1.0 + 0.5 * np.sin(2.0 * np.pi * rng.uniform(4.0,8.0) * t)
    return 0.3 * modulation * np.sin(2.0 * np.pi * carrier * t + rng.uniform(0.0,2.0 * np.pi))

PROBE_GENERATORS:List[Callable[[np.random.Generator,float,int],np.ndarray]] = [
    probe_tone,
    probe_chord,
    probe_band_noise,
    probe_am_tone,
]

#----------------------------------------------------------------
def rank_limited_features(seed:int,count:int,frames:int,dim:int,rank:int) -> np.ndarray:
    """Последовательности (count, frames, dim) в подпространстве ранга rank"""
    rng = np.random.default_rng(seed)
    basis = rng.standard_normal((rank,dim))
    coefficients = rng.standard_normal((count,frames,rank))
    return coefficients @ basis

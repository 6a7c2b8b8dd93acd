# -*- coding: utf-8 -*-
"""
Модуль замороженного семантического кодировщика

Фиксированное случайное отображение affine-tanh-affine над нормированными
лог-мел кадрами с усреднением по 4 кадрам до частоты латентов.
Параметры определяются только зерном и не обучаются.
"""

import numpy as np

from Common.Dsp import FeatureSequence,MelFrames,pad_frames
from Common.Errors import DimensionMismatchError,RateMismatchError

POOLING:int = 4
MEL_SHIFT:float = 5.0
MEL_SCALE:float = 5.0

#----------------------------------------------------------------
class FrozenSemanticEncoder():
    def __init__(self,seed:int,mel_bins:int,d_high:int,hidden:int,mel_rate:float):
        rng = np.random.default_rng(seed)
        self.__first:np.ndarray = rng.standard_normal((mel_bins,hidden)) / np.sqrt(mel_bins)
        self.__firstBias:np.ndarray = rng.uniform(-0.5,0.5,hidden)
        self.__second:np.ndarray = rng.standard_normal((hidden,d_high)) / np.sqrt(hidden)
        self.__secondBias:np.ndarray = 0.1 * rng.standard_normal(d_high)
        for array in (self.__first,self.__firstBias,self.__second,self.__secondBias):
            array.setflags(write=False)

        self.seed:int = seed
        self.mel_bins:int = mel_bins
        self.d_high:int = d_high
        self.mel_rate:float = mel_rate

    @property
    def frame_rate(self) -> float:
        return self.mel_rate / POOLING

    def EncodeValues(self,melValues:np.ndarray) -> np.ndarray:
        """(..., F, mel_bins) -> (..., ceil(F/4), d_high)"""
        if melValues.shape[-1] != self.mel_bins:
            raise DimensionMismatchError(self.mel_bins,melValues.shape[-1])
        padded = pad_frames(np.asarray(melValues,dtype=np.float64),POOLING)
        hidden = np.tanh(((padded + MEL_SHIFT) / MEL_SCALE) @ self.__first + self.__firstBias)
        frames = hidden @ self.__second + self.__secondBias
        shape = frames.shape[:-2] + (frames.shape[-2] // POOLING,POOLING,self.d_high)
        return frames.reshape(shape).mean(axis=-2)

    def Encode(self,mel:MelFrames) -> FeatureSequence:
        if abs(mel.frame_rate - self.mel_rate) > 1e-9:
            raise RateMismatchError(self.mel_rate,mel.frame_rate)
        return FeatureSequence(self.EncodeValues(mel.values),self.frame_rate)

def semantic_encode(encoder:FrozenSemanticEncoder,mel:MelFrames) -> FeatureSequence:
    return encoder.Encode(mel)

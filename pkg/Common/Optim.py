# -*- coding: utf-8 -*-
"""
Модуль оптимизации: AdamW с развязанным затуханием весов и
косинусное расписание шага обучения с линейным разогревом

"""

import math
from dataclasses import dataclass,field
from typing import Dict,List,Optional,Sequence,Tuple

import numpy as np

from Common.Errors import MissingGradientError
from Common.Layers import Parameter

#----------------------------------------------------------------
@dataclass(frozen=True)
class CosineSchedule():
    base_lr:float
    min_lr:float
    warmup_steps:int
    max_steps:int

    def LearningRate(self,step:int) -> float:
        if step < self.warmup_steps:
            return self.base_lr * step / self.warmup_steps
        if step == self.warmup_steps:
            return self.base_lr
        if step >= self.max_steps:
            return self.min_lr
        progress = (step - self.warmup_steps) / (self.max_steps - self.warmup_steps)
        return self.min_lr + 0.5 * (self.base_lr - self.min_lr) * (1.0 + math.cos(math.pi * progress))

#----------------------------------------------------------------
@dataclass
class OptimizerState():
    schedule:CosineSchedule
    beta1:float = 0.8
    beta2:float = 0.99
    eps:float = 1e-8
    weight_decay:float = 0.01
    step_count:int = 0
    first_moment:Dict[str,np.ndarray] = field(default_factory=dict)
    second_moment:Dict[str,np.ndarray] = field(default_factory=dict)

    def NamedArrays(self,prefix:str) -> Dict[str,np.ndarray]:
        arrays = {f'{prefix}.m.{name}':value for name,value in self.first_moment.items()}
        arrays.update({f'{prefix}.v.{name}':value for name,value in self.second_moment.items()})
        return arrays

    def LoadArrays(self,arrays:Dict[str,np.ndarray],prefix:str,stepCount:int) -> None:
        self.step_count = stepCount
        for key,value in arrays.items():
            if key.startswith(f'{prefix}.m.'):
                self.first_moment[key[len(prefix) + 3:]] = np.array(value)
            elif key.startswith(f'{prefix}.v.'):
                self.second_moment[key[len(prefix) + 3:]] = np.array(value)

#----------------------------------------------------------------
def adamw_step(params:Sequence[Tuple[str,Parameter]],state:OptimizerState) -> float:
    """
    Один шаг AdamW над именованными параметрами (обновление на месте)

    Шаг обучения берется из расписания для номера шага после инкремента,
    поэтому первое обновление использует lr(1). Возвращает примененный lr.
    """
    for name,param in params:
        if param.grad is None:
            raise MissingGradientError(name)

    state.step_count += 1
    t = state.step_count
    lr = state.schedule.LearningRate(t)
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t

    for name,param in params:
        grad = param.grad
        first = state.first_moment.get(name)
        second = state.second_moment.get(name)
        if first is None:
            first = np.zeros_like(param.values)
            second = np.zeros_like(param.values)

        if state.weight_decay:
            param.values = param.values * (1.0 - lr * state.weight_decay)
        first = state.beta1 * first + (1.0 - state.beta1) * grad
        second = state.beta2 * second + (1.0 - state.beta2) * grad * grad
        update = (first / correction1) / (np.sqrt(second / correction2) + state.eps)
        param.values = (param.values - lr * update).astype(param.values.dtype)

        state.first_moment[name] = first.astype(param.values.dtype)
        state.second_moment[name] = second.astype(param.values.dtype)
    return lr

#----------------------------------------------------------------
class AdamW():
    """Обертка: набор параметров модели и его состояние оптимизатора"""
    def __init__(self,namedParams:List[Tuple[str,Parameter]],state:OptimizerState):
        self.__params:List[Tuple[str,Parameter]] = list(namedParams)
        self.state:OptimizerState = state

    def ZeroGrad(self) -> None:
        for _,param in self.__params:
            param.grad = None

    def Step(self) -> float:
        return adamw_step(self.__params,self.state)

    @property
    def Names(self) -> List[str]:
        return [name for name,_ in self.__params]

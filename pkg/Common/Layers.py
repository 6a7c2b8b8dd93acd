# -*- coding: utf-8 -*-
"""
Модуль слоев нейросетевых моделей поверх Common.Grad

"""

from typing import Dict,Iterator,List,Tuple

import numpy as np

from Common.Errors import CheckpointFormatError,DimensionMismatchError
from Common.Grad import Tensor,conv2d,depthwise_conv1d,gelu,layer_norm

#----------------------------------------------------------------
class Parameter(Tensor):
    def __init__(self,values):
        super().__init__(values,requires_grad=True)

#----------------------------------------------------------------
class Module():
    """Базовый класс: параметры собираются обходом атрибутов"""
    def NamedParameters(self,prefix:str='') -> Iterator[Tuple[str,Parameter]]:
        for name,value in vars(self).items():
            fullName = f'{prefix}{name}'
            if isinstance(value,Parameter):
                yield fullName,value
            elif isinstance(value,Module):
                yield from value.NamedParameters(f'{fullName}.')
            elif isinstance(value,(list,tuple)):
                for i,item in enumerate(value):
                    if isinstance(item,Module):
                        yield from item.NamedParameters(f'{fullName}.{i}.')

    def Parameters(self) -> List[Parameter]:
        return [param for _,param in self.NamedParameters()]

    def NamedArrays(self,prefix:str='') -> Dict[str,np.ndarray]:
        return {name:param.values for name,param in self.NamedParameters(prefix)}

    def LoadArrays(self,arrays:Dict[str,np.ndarray],prefix:str='',source:str='') -> None:
        for name,param in self.NamedParameters(prefix):
            if name not in arrays:
                raise CheckpointFormatError(source,f'нет массива {name}')
            values = arrays[name]
            if tuple(values.shape) != param.shape:
                raise CheckpointFormatError(source,f'форма {name}: {list(values.shape)} вместо {list(param.shape)}')
            param.values = np.array(values,dtype=param.values.dtype)

    def ZeroGrad(self) -> None:
        for param in self.Parameters():
            param.grad = None

    def SetRequiresGrad(self,flag:bool) -> None:
        for param in self.Parameters():
            param.requires_grad = flag

    def ParameterCount(self) -> int:
        return int(sum(param.values.size for param in self.Parameters()))

#----------------------------------------------------------------
def _Uniform(rng:np.random.Generator,bound:float,shape:Tuple[int,...]) -> np.ndarray:
    return rng.uniform(-bound,bound,size=shape)

class Linear(Module):
    """Аффинное отображение по последней оси, веса (in, out)"""
    def __init__(self,inFeatures:int,outFeatures:int,rng:np.random.Generator):
        bound = 1.0 / np.sqrt(inFeatures)
        self.weight:Parameter = Parameter(_Uniform(rng,bound,(inFeatures,outFeatures)))
        self.bias:Parameter = Parameter(_Uniform(rng,bound,(outFeatures,)))
        self.inFeatures:int = inFeatures
        self.outFeatures:int = outFeatures

    def __call__(self,x:Tensor) -> Tensor:
        if x.shape[-1] != self.inFeatures:
            raise DimensionMismatchError(self.inFeatures,x.shape[-1])
        if x.ndim == 1:
            return (x.Reshape(1,-1) @ self.weight).Reshape(-1) + self.bias
        return x @ self.weight + self.bias

class Mlp2(Module):
    """Два аффинных слоя с GELU между ними"""
    def __init__(self,inFeatures:int,hidden:int,outFeatures:int,rng:np.random.Generator):
        self.first:Linear = Linear(inFeatures,hidden,rng)
        self.second:Linear = Linear(hidden,outFeatures,rng)

    def __call__(self,x:Tensor) -> Tensor:
        return self.second(gelu(self.first(x)))

class Conv2dLayer(Module):
    def __init__(self,inChannels:int,outChannels:int,kernel:Tuple[int,int],stride:Tuple[int,int],
                 rng:np.random.Generator,padding:Tuple[int,int]=(0,0)):
        bound = 1.0 / np.sqrt(inChannels * kernel[0] * kernel[1])
        self.weight:Parameter = Parameter(_Uniform(rng,bound,(outChannels,inChannels) + tuple(kernel)))
        self.bias:Parameter = Parameter(_Uniform(rng,bound,(outChannels,1,1)))
        self.stride:Tuple[int,int] = tuple(stride)
        self.padding:Tuple[int,int] = tuple(padding)

    def __call__(self,x:Tensor) -> Tensor:
        return conv2d(x,self.weight,self.stride,self.padding) + self.bias

class DepthwiseConv1dLayer(Module):
    def __init__(self,channels:int,kernel:int,rng:np.random.Generator):
        bound = 1.0 / np.sqrt(kernel)
        self.weight:Parameter = Parameter(_Uniform(rng,bound,(kernel,channels)))
        self.bias:Parameter = Parameter(_Uniform(rng,bound,(channels,)))

    def __call__(self,x:Tensor) -> Tensor:
        return depthwise_conv1d(x,self.weight) + self.bias

class LayerNorm(Module):
    def __init__(self,features:int):
        self.gamma:Parameter = Parameter(np.ones(features))
        self.beta:Parameter = Parameter(np.zeros(features))

    def __call__(self,x:Tensor) -> Tensor:
        return layer_norm(x,self.gamma,self.beta)

# -*- coding: utf-8 -*-
"""
Модуль обратного автоматического дифференцирования

Тензор хранит массив numpy и ссылку на узел ленты (Function), который его
породил. Обратный проход обходит ленту в обратном топологическом порядке;
градиенты получают только листовые тензоры с requires_grad.

Таблица правил форм:
    Add/Sub/Mul/Div      - трансляция numpy (broadcasting)
    MatMul               - (...,m,k) @ (...,k,n) -> (...,m,n)
    Sum/Mean/Norm        - свертка по оси (axis), keepdims по запросу
    Reshape/Transpose    - число элементов сохраняется
    Gather               - (...,N) по индексам формы S -> (...,*S)
    Rfft                 - (...,N) -> (...,N/2+1,2), последняя ось = (Re,Im)
    Irfft                - (...,K,2) -> (...,2(K-1))
    OverlapAdd           - (...,F,W) -> (...,(F-1)*hop+W), W кратно hop
    Conv2d               - (B,Cin,H,W) * (Cout,Cin,kh,kw) -> (B,Cout,Ho,Wo)
    DepthwiseConv1d      - (B,T,C) * (k,C) -> (B,T,C), k нечетное
"""

import contextlib
from typing import Any,Callable,Dict,Iterator,List,Optional,Sequence,Tuple,Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from Common.Errors import NonScalarLossError,ShapeError,TapeExhaustedError

_defaultDtype:type = np.float32

GELU_COEFFICIENT:float = float(np.sqrt(2.0 / np.pi))
FRAME_NORM_EPS:float = 1e-8

#----------------------------------------------------------------
@contextlib.contextmanager
def Precision(dtype:type) -> Iterator[type]:
    """Временно меняет разрядность создаваемых тензоров (float32 по умолчанию)"""
    global _defaultDtype
    previous = _defaultDtype
    _defaultDtype = np.dtype(dtype).type
    try:
        yield _defaultDtype
    finally:
        _defaultDtype = previous

def default_dtype() -> type:
    return _defaultDtype

#----------------------------------------------------------------
class Tensor():
    def __init__(self,values:Any,requires_grad:bool=False,ctx:Optional['Function']=None):
        self.values:np.ndarray = np.asarray(values,dtype=_defaultDtype)
        self.requires_grad:bool = requires_grad
        self.grad:Optional[np.ndarray] = None
        self.ctx:Optional[Function] = ctx

    def __repr__(self) -> str:
        return f'Tensor(shape={self.shape}, requires_grad={self.requires_grad})'

    @property
    def shape(self) -> Tuple[int,...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def T(self) -> 'Tensor':
        return self.Transpose()

    def Item(self) -> float:
        return float(self.values)

    def IsLeaf(self) -> bool:
        return self.ctx is None

    # Арифметика
    def __neg__(self): return Neg.Apply(self)
    def __add__(self,other): return Add.Apply(self,other)
    def __radd__(self,other): return Add.Apply(other,self)
    def __sub__(self,other): return Sub.Apply(self,other)
    def __rsub__(self,other): return Sub.Apply(other,self)
    def __mul__(self,other): return Mul.Apply(self,other)
    def __rmul__(self,other): return Mul.Apply(other,self)
    def __truediv__(self,other): return Div.Apply(self,other)
    def __rtruediv__(self,other): return Div.Apply(other,self)
    def __matmul__(self,other): return MatMul.Apply(self,other)
    def __pow__(self,exponent:float): return PowScalar.Apply(self,exponent=float(exponent))
    def __getitem__(self,index): return GetItem.Apply(self,index=index)

    def Sum(self,axis=None,keepdims:bool=False) -> 'Tensor':
        return Sum.Apply(self,axis=axis,keepdims=keepdims)

    def Mean(self,axis=None,keepdims:bool=False) -> 'Tensor':
        return Mean.Apply(self,axis=axis,keepdims=keepdims)

    def Reshape(self,*shape) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0],(tuple,list)):
            shape = tuple(shape[0])
        return Reshape.Apply(self,shape=shape)

    def Transpose(self,*axes) -> 'Tensor':
        if len(axes) == 1 and isinstance(axes[0],(tuple,list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(range(self.ndim - 2)) + (self.ndim - 1,self.ndim - 2)
        return Transpose.Apply(self,axes=axes)

    def Exp(self) -> 'Tensor': return Exp.Apply(self)
    def Log(self) -> 'Tensor': return Log.Apply(self)
    def Abs(self) -> 'Tensor': return Abs.Apply(self)
    def Sqrt(self) -> 'Tensor': return Sqrt.Apply(self)
    def Tanh(self) -> 'Tensor': return Tanh.Apply(self)

    def Backward(self) -> None:
        """Заполняет .grad всех листьев с requires_grad"""
        if self.values.ndim != 0:
            raise NonScalarLossError(self.values.shape)
        if self.ctx is not None and self.ctx.exhausted:
            raise TapeExhaustedError()
        if not self.requires_grad:
            return

        order = _TopologicalOrder(self)
        pending:Dict[int,np.ndarray] = {id(self):np.ones_like(self.values)}
        for node in reversed(order):
            grad = pending.pop(id(node),None)
            if grad is None:
                continue
            if node.ctx is None:
                node.grad = grad if node.grad is None else node.grad + grad
                continue
            if node.ctx.exhausted:
                raise TapeExhaustedError()
            parentGrads = node.ctx.Backward(grad)
            node.ctx.Release()
            for parent,parentGrad in zip(node.ctx.parents,parentGrads):
                if parentGrad is None or not parent.requires_grad:
                    continue
                parentGrad = np.asarray(parentGrad,dtype=parent.values.dtype)
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + parentGrad
                else:
                    pending[key] = parentGrad

#----------------------------------------------------------------
def _TopologicalOrder(root:Tensor) -> List[Tensor]:
    # Итеративный обход в глубину: родители раньше потомков
    order:List[Tensor] = []
    visited:set = set()
    stack:List[Tuple[Tensor,bool]] = [(root,False)]
    while stack:
        node,expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node,True))
        if node.ctx is not None:
            for parent in node.ctx.parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent,False))
    return order

def _AsTensor(value:Any) -> Tensor:
    if isinstance(value,Tensor):
        return value
    return Tensor(value)

def _Unbroadcast(grad:np.ndarray,shape:Tuple[int,...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis,size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis,keepdims=True)
    return grad

def _BroadcastShape(name:str,left:np.ndarray,right:np.ndarray) -> None:
    try:
        np.broadcast_shapes(left.shape,right.shape)
    except ValueError:
        raise ShapeError(name,left.shape,right.shape) from None

#----------------------------------------------------------------
class Function():
    """Узел ленты: прямое вычисление и правило обратного прохода"""
    def __init__(self,*parents:Tensor):
        self.parents:Tuple[Tensor,...] = parents
        self.exhausted:bool = False

    @classmethod
    def Apply(cls,*inputs:Any,**options:Any) -> Tensor:
        tensors = tuple(_AsTensor(item) for item in inputs)
        ctx = cls(*tensors)
        output = ctx.Forward(*[t.values for t in tensors],**options)
        if any(t.requires_grad for t in tensors):
            return Tensor(output,requires_grad=True,ctx=ctx)
        return Tensor(output)

    def Release(self) -> None:
        self.exhausted = True
        self.saved = None

    def Forward(self,*arrays:np.ndarray,**options:Any) -> np.ndarray:
        raise NotImplementedError

    def Backward(self,grad:np.ndarray) -> Sequence[Optional[np.ndarray]]:
        raise NotImplementedError

#----------------------------------------------------------------
#------------------------ПОЭЛЕМЕНТНЫЕ----------------------------
#----------------------------------------------------------------
class Add(Function):
    def Forward(self,a,b):
        _BroadcastShape('Add',a,b)
        self.saved = (a.shape,b.shape)
        return a + b

    def Backward(self,grad):
        aShape,bShape = self.saved
        return _Unbroadcast(grad,aShape),_Unbroadcast(grad,bShape)

class Sub(Function):
    def Forward(self,a,b):
        _BroadcastShape('Sub',a,b)
        self.saved = (a.shape,b.shape)
        return a - b

    def Backward(self,grad):
        aShape,bShape = self.saved
        return _Unbroadcast(grad,aShape),_Unbroadcast(-grad,bShape)

class Mul(Function):
    def Forward(self,a,b):
        _BroadcastShape('Mul',a,b)
        self.saved = (a,b)
        return a * b

    def Backward(self,grad):
        a,b = self.saved
        return _Unbroadcast(grad * b,a.shape),_Unbroadcast(grad * a,b.shape)

class Div(Function):
    def Forward(self,a,b):
        _BroadcastShape('Div',a,b)
        self.saved = (a,b)
        return a / b

    def Backward(self,grad):
        a,b = self.saved
        return _Unbroadcast(grad / b,a.shape),_Unbroadcast(-grad * a / (b * b),b.shape)

class Neg(Function):
    def Forward(self,a):
        return -a

    def Backward(self,grad):
        return (-grad,)

class PowScalar(Function):
    def Forward(self,a,exponent:float):
        self.saved = (a,exponent)
        return a ** exponent

    def Backward(self,grad):
        a,exponent = self.saved
        return (grad * exponent * a ** (exponent - 1.0),)

class Exp(Function):
    def Forward(self,a):
        out = np.exp(a)
        self.saved = out
        return out

    def Backward(self,grad):
        return (grad * self.saved,)

class Log(Function):
    def Forward(self,a):
        self.saved = a
        return np.log(a)

    def Backward(self,grad):
        return (grad / self.saved,)

class Abs(Function):
    def Forward(self,a):
        self.saved = np.sign(a)
        return np.abs(a)

    def Backward(self,grad):
        return (grad * self.saved,)

class Sqrt(Function):
    def Forward(self,a):
        out = np.sqrt(a)
        self.saved = out
        return out

    def Backward(self,grad):
        return (grad / (2.0 * self.saved),)

class Tanh(Function):
    def Forward(self,a):
        out = np.tanh(a)
        self.saved = out
        return out

    def Backward(self,grad):
        return (grad * (1.0 - self.saved * self.saved),)

class Sin(Function):
    def Forward(self,a):
        self.saved = a
        return np.sin(a)

    def Backward(self,grad):
        return (grad * np.cos(self.saved),)

class Cos(Function):
    def Forward(self,a):
        self.saved = a
        return np.cos(a)

    def Backward(self,grad):
        return (-grad * np.sin(self.saved),)

class Gelu(Function):
    # Аппроксимация через tanh
    def Forward(self,a):
        inner = GELU_COEFFICIENT * (a + 0.044715 * a ** 3)
        t = np.tanh(inner)
        self.saved = (a,t)
        return 0.5 * a * (1.0 + t)

    def Backward(self,grad):
        a,t = self.saved
        dInner = GELU_COEFFICIENT * (1.0 + 3.0 * 0.044715 * a * a)
        return (grad * (0.5 * (1.0 + t) + 0.5 * a * (1.0 - t * t) * dInner),)

class LeakyRelu(Function):
    def Forward(self,a,slope:float=0.1):
        self.saved = np.where(a > 0,1.0,slope).astype(a.dtype)
        return a * self.saved

    def Backward(self,grad):
        return (grad * self.saved,)

class Relu(Function):
    def Forward(self,a):
        self.saved = a > 0
        return np.where(self.saved,a,0).astype(a.dtype)

    def Backward(self,grad):
        return (grad * self.saved,)

class Clip(Function):
    def Forward(self,a,low:Optional[float]=None,high:Optional[float]=None):
        mask = np.ones(a.shape,dtype=bool)
        if low is not None:
            mask &= a > low
        if high is not None:
            mask &= a < high
        self.saved = mask
        return np.clip(a,low,high)

    def Backward(self,grad):
        return (grad * self.saved,)

#----------------------------------------------------------------
#-----------------------------ФОРМЫ------------------------------
#----------------------------------------------------------------
class MatMul(Function):
    def Forward(self,a,b):
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise ShapeError('MatMul',a.shape,b.shape)
        try:
            np.broadcast_shapes(a.shape[:-2],b.shape[:-2])
        except ValueError:
            raise ShapeError('MatMul',a.shape,b.shape) from None
        self.saved = (a,b)
        return a @ b

    def Backward(self,grad):
        a,b = self.saved
        gradA = grad @ np.swapaxes(b,-1,-2)
        gradB = np.swapaxes(a,-1,-2) @ grad
        return _Unbroadcast(gradA,a.shape),_Unbroadcast(gradB,b.shape)

def _ExpandReduced(grad:np.ndarray,shape:Tuple[int,...],axis,keepdims:bool) -> np.ndarray:
    if axis is not None and not keepdims:
        axes = (axis,) if isinstance(axis,int) else tuple(axis)
        axes = tuple(ax % len(shape) for ax in axes)
        grad = np.expand_dims(grad,axes)
    return np.broadcast_to(grad,shape)

class Sum(Function):
    def Forward(self,a,axis=None,keepdims:bool=False):
        self.saved = (a.shape,axis,keepdims)
        return np.sum(a,axis=axis,keepdims=keepdims)

    def Backward(self,grad):
        shape,axis,keepdims = self.saved
        return (np.array(_ExpandReduced(grad,shape,axis,keepdims)),)

class Mean(Function):
    def Forward(self,a,axis=None,keepdims:bool=False):
        out = np.mean(a,axis=axis,keepdims=keepdims)
        self.saved = (a.shape,axis,keepdims,a.size // max(np.size(out),1))
        return out

    def Backward(self,grad):
        shape,axis,keepdims,count = self.saved
        return (np.array(_ExpandReduced(grad,shape,axis,keepdims)) / count,)

class Norm(Function):
    # L2-норма по оси; в нуле градиент полагается нулевым
    def Forward(self,a,axis=-1,keepdims:bool=False):
        norm = np.sqrt(np.sum(a * a,axis=axis,keepdims=True))
        self.saved = (a,norm,axis,keepdims)
        return norm if keepdims else np.squeeze(norm,axis=axis)

    def Backward(self,grad):
        a,norm,axis,keepdims = self.saved
        if not keepdims:
            grad = np.expand_dims(grad,axis)
        safe = np.where(norm > 0,norm,1.0)
        return (np.where(norm > 0,grad * a / safe,0.0),)

class Reshape(Function):
    def Forward(self,a,shape):
        try:
            out = a.reshape(shape)
        except ValueError:
            raise ShapeError('Reshape',a.shape,shape) from None
        self.saved = a.shape
        return out

    def Backward(self,grad):
        return (grad.reshape(self.saved),)

class Transpose(Function):
    def Forward(self,a,axes):
        if sorted(axes) != list(range(a.ndim)):
            raise ShapeError('Transpose',a.shape,axes)
        self.saved = axes
        return np.transpose(a,axes)

    def Backward(self,grad):
        return (np.transpose(grad,np.argsort(self.saved)),)

class GetItem(Function):
    def Forward(self,a,index):
        self.saved = (a.shape,a.dtype,index)
        return a[index]

    def Backward(self,grad):
        shape,dtype,index = self.saved
        out = np.zeros(shape,dtype=dtype)
        np.add.at(out,index,grad)
        return (out,)

class Gather(Function):
    """Выборка по последней оси: x[..., indices]"""
    def Forward(self,a,indices:np.ndarray):
        if indices.size and (indices.min() < 0 or indices.max() >= a.shape[-1]):
            raise ShapeError('Gather',a.shape,indices.shape)
        self.saved = (a.shape,a.dtype,indices)
        return a[...,indices]

    def Backward(self,grad):
        shape,dtype,indices = self.saved
        length = shape[-1]
        lead = int(np.prod(shape[:-1],dtype=np.int64))
        flatGrad = grad.reshape(lead,-1)
        offsets = (np.arange(lead)[:,None] * length + indices.reshape(1,-1)).ravel()
        out = np.bincount(offsets,weights=flatGrad.ravel().astype(np.float64),minlength=lead * length)
        return (out.reshape(shape).astype(dtype),)

class Stack(Function):
    def Forward(self,*arrays,axis:int=0):
        shapes = {arr.shape for arr in arrays}
        if len(shapes) != 1:
            raise ShapeError('Stack',*[arr.shape for arr in arrays])
        self.saved = axis
        return np.stack(arrays,axis=axis)

    def Backward(self,grad):
        axis = self.saved
        return tuple(np.take(grad,i,axis=axis) for i in range(grad.shape[axis]))

def stack(tensors:Sequence[Tensor],axis:int=0) -> Tensor:
    return Stack.Apply(*tensors,axis=axis)

class Repeat(Function):
    """Повтор каждого элемента вдоль оси (ближайший сосед)"""
    def Forward(self,a,repeats:int,axis:int):
        axis = axis % a.ndim
        self.saved = (repeats,axis)
        return np.repeat(a,repeats,axis=axis)

    def Backward(self,grad):
        repeats,axis = self.saved
        shape = grad.shape[:axis] + (grad.shape[axis] // repeats,repeats) + grad.shape[axis + 1:]
        return (grad.reshape(shape).sum(axis=axis + 1),)

class PadLast(Function):
    """Дополнение нулями по последней оси"""
    def Forward(self,a,before:int,after:int):
        self.saved = (before,a.shape[-1])
        width = [(0,0)] * (a.ndim - 1) + [(before,after)]
        return np.pad(a,width)

    def Backward(self,grad):
        before,length = self.saved
        return (grad[...,before:before + length],)

#----------------------------------------------------------------
#--------------------------ПРЕОБРАЗОВАНИЯ------------------------
#----------------------------------------------------------------
class Rfft(Function):
    def Forward(self,a):
        spectrum = np.fft.rfft(a,axis=-1)
        self.saved = a.shape[-1]
        return np.stack([spectrum.real,spectrum.imag],axis=-1)

    def Backward(self,grad):
        n = self.saved
        half = grad[...,0] + 1j * grad[...,1]
        full = np.zeros(grad.shape[:-2] + (n,),dtype=np.complex128)
        full[...,:half.shape[-1]] = half
        return (np.real(np.fft.ifft(full,axis=-1)) * n,)

class Irfft(Function):
    def Forward(self,a,n:int):
        bins = a.shape[-2]
        if a.shape[-1] != 2 or n != 2 * (bins - 1):
            raise ShapeError('Irfft',a.shape,(n,))
        self.saved = n
        return np.fft.irfft(a[...,0] + 1j * a[...,1],n=n,axis=-1)

    def Backward(self,grad):
        n = self.saved
        spectrum = np.fft.rfft(grad,axis=-1)
        weights = np.full(spectrum.shape[-1],2.0)
        weights[0] = 1.0
        weights[-1] = 1.0
        real = weights * spectrum.real / n
        imag = weights * spectrum.imag / n
        imag[...,0] = 0.0
        imag[...,-1] = 0.0
        return (np.stack([real,imag],axis=-1),)

class OverlapAdd(Function):
    def Forward(self,a,hop:int):
        frames,width = a.shape[-2],a.shape[-1]
        if width % hop != 0:
            raise ShapeError('OverlapAdd',a.shape,(hop,))
        ratio = width // hop
        lead = a.shape[:-2]
        blocks = a.reshape(lead + (frames,ratio,hop))
        out = np.zeros(lead + ((frames + ratio - 1) * hop,),dtype=a.dtype)
        for j in range(ratio):
            out[...,j * hop:j * hop + frames * hop] += blocks[...,:,j,:].reshape(lead + (frames * hop,))
        self.saved = (frames,ratio,hop)
        return out

    def Backward(self,grad):
        frames,ratio,hop = self.saved
        lead = grad.shape[:-1]
        out = np.empty(lead + (frames,ratio,hop),dtype=grad.dtype)
        for j in range(ratio):
            out[...,:,j,:] = grad[...,j * hop:j * hop + frames * hop].reshape(lead + (frames,hop))
        return (out.reshape(lead + (frames,ratio * hop)),)

class Conv2d(Function):
    def Forward(self,x,weight,stride:Tuple[int,int]=(1,1),padding:Tuple[int,int]=(0,0)):
        if x.ndim != 4 or weight.ndim != 4 or x.shape[1] != weight.shape[1]:
            raise ShapeError('Conv2d',x.shape,weight.shape)
        ph,pw = padding
        xp = np.pad(x,((0,0),(0,0),(ph,ph),(pw,pw))) if (ph or pw) else x
        kh,kw = weight.shape[2:]
        sh,sw = stride
        if xp.shape[2] < kh or xp.shape[3] < kw:
            raise ShapeError('Conv2d',x.shape,weight.shape)
        windows = sliding_window_view(xp,(kh,kw),axis=(2,3))[:,:,::sh,::sw]
        out = np.tensordot(windows,weight,axes=([1,4,5],[1,2,3]))
        self.saved = (xp.shape,x.shape,windows,weight,stride,padding)
        return np.ascontiguousarray(out.transpose(0,3,1,2))

    def Backward(self,grad):
        paddedShape,shape,windows,weight,stride,padding = self.saved
        kh,kw = weight.shape[2:]
        sh,sw = stride
        ho,wo = grad.shape[2:]
        gradWeight = np.tensordot(grad,windows,axes=([0,2,3],[0,2,3]))
        gradWindows = np.tensordot(grad,weight,axes=([1],[0]))
        gradPadded = np.zeros(paddedShape,dtype=grad.dtype)
        for i in range(kh):
            for j in range(kw):
                gradPadded[:,:,i:i + sh * ho:sh,j:j + sw * wo:sw] += gradWindows[:,:,:,:,i,j].transpose(0,3,1,2)
        ph,pw = padding
        gradX = gradPadded[:,:,ph:ph + shape[2],pw:pw + shape[3]]
        return gradX,gradWeight

class DepthwiseConv1d(Function):
    """Поканальная свертка по времени с сохранением длины"""
    def Forward(self,x,weight):
        kernel = weight.shape[0]
        if x.ndim != 3 or weight.ndim != 2 or weight.shape[1] != x.shape[2] or kernel % 2 == 0:
            raise ShapeError('DepthwiseConv1d',x.shape,weight.shape)
        pad = kernel // 2
        xp = np.pad(x,((0,0),(pad,pad),(0,0)))
        windows = sliding_window_view(xp,kernel,axis=1)
        self.saved = (x.shape,windows,weight)
        return np.einsum('btck,kc->btc',windows,weight)

    def Backward(self,grad):
        shape,windows,weight = self.saved
        kernel = weight.shape[0]
        pad = kernel // 2
        length = shape[1]
        gradWeight = np.einsum('btc,btck->kc',grad,windows)
        gradPadded = np.zeros((shape[0],length + 2 * pad,shape[2]),dtype=grad.dtype)
        for j in range(kernel):
            gradPadded[:,j:j + length,:] += grad * weight[j]
        return gradPadded[:,pad:pad + length,:],gradWeight

#----------------------------------------------------------------
#---------------------------КОМПОЗИЦИИ---------------------------
#----------------------------------------------------------------
def stop_gradient(x:Tensor) -> Tensor:
    """sg(x): то же значение, градиент не проходит"""
    return Tensor(np.array(_AsTensor(x).values,copy=True))

def gelu(x:Tensor) -> Tensor:
    return Gelu.Apply(x)

def leaky_relu(x:Tensor,slope:float=0.1) -> Tensor:
    return LeakyRelu.Apply(x,slope=slope)

def relu(x:Tensor) -> Tensor:
    return Relu.Apply(x)

def clip(x:Tensor,low:Optional[float]=None,high:Optional[float]=None) -> Tensor:
    return Clip.Apply(x,low=low,high=high)

def sin(x:Tensor) -> Tensor:
    return Sin.Apply(x)

def cos(x:Tensor) -> Tensor:
    return Cos.Apply(x)

def l2_norm(x:Tensor,axis:int=-1,keepdims:bool=False) -> Tensor:
    return Norm.Apply(x,axis=axis,keepdims=keepdims)

def frame_normalize(x:Tensor,eps:float=FRAME_NORM_EPS) -> Tensor:
    """Покадровая нормировка x / sqrt(|x|^2 + eps^2)"""
    x = _AsTensor(x)
    return x / ((x * x).Sum(axis=-1,keepdims=True) + eps * eps).Sqrt()

def layer_norm(x:Tensor,gamma:Tensor,beta:Tensor,eps:float=1e-5) -> Tensor:
    mean = x.Mean(axis=-1,keepdims=True)
    centered = x - mean
    variance = (centered * centered).Mean(axis=-1,keepdims=True)
    return centered / (variance + eps).Sqrt() * gamma + beta

def log_softmax(logits:Tensor,axis:int=-1) -> Tensor:
    shift = stop_gradient(Tensor(np.max(logits.values,axis=axis,keepdims=True)))
    shifted = logits - shift
    return shifted - shifted.Exp().Sum(axis=axis,keepdims=True).Log()

def gather(x:Tensor,indices:np.ndarray) -> Tensor:
    return Gather.Apply(x,indices=np.asarray(indices,dtype=np.int64))

def repeat(x:Tensor,repeats:int,axis:int) -> Tensor:
    return Repeat.Apply(x,repeats=repeats,axis=axis)

def pad_last(x:Tensor,before:int,after:int) -> Tensor:
    return PadLast.Apply(x,before=before,after=after)

def rfft(x:Tensor) -> Tensor:
    return Rfft.Apply(x)

def irfft(x:Tensor,n:int) -> Tensor:
    return Irfft.Apply(x,n=n)

def overlap_add(frames:Tensor,hop:int) -> Tensor:
    return OverlapAdd.Apply(frames,hop=hop)

def conv2d(x:Tensor,weight:Tensor,stride=(1,1),padding=(0,0)) -> Tensor:
    return Conv2d.Apply(x,weight,stride=tuple(stride),padding=tuple(padding))

def depthwise_conv1d(x:Tensor,weight:Tensor) -> Tensor:
    return DepthwiseConv1d.Apply(x,weight)

#----------------------------------------------------------------
def grad_check(f:Callable[[Tensor],Tensor],point:Union[Tensor,np.ndarray],h:Optional[float]=None) -> float:
    """
    Сравнение аналитического градиента с центральной разностью

    Вычисления ведутся в float64. Шаг по умолчанию h = 1e-5 * (1 + |x|).
    Возвращает max |a - fd| / (|a| + |fd| + 1e-12) по координатам.
    """
    base = np.array(point.values if isinstance(point,Tensor) else point,dtype=np.float64)
    with Precision(np.float64):
        variable = Tensor(base.copy(),requires_grad=True)
        loss = f(variable)
        loss.Backward()
        analytic = variable.grad if variable.grad is not None else np.zeros_like(base)

        numeric = np.zeros_like(base)
        flatBase = base.ravel()
        flatNumeric = numeric.ravel()
        for i in range(flatBase.size):
            step = h if h is not None else 1e-5 * (1.0 + abs(flatBase[i]))
            shifted = flatBase.copy()
            shifted[i] = flatBase[i] + step
            upper = f(Tensor(shifted.reshape(base.shape))).Item()
            shifted[i] = flatBase[i] - step
            lower = f(Tensor(shifted.reshape(base.shape))).Item()
            flatNumeric[i] = (upper - lower) / (2.0 * step)

    errors = np.abs(analytic - numeric) / (np.abs(analytic) + np.abs(numeric) + 1e-12)
    return float(np.max(errors)) if errors.size else 0.0

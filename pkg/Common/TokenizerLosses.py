# -*- coding: utf-8 -*-
"""
Модуль потерь токенизатора

Целевая функция генератора:
    L = l_mel*L_mel + l_sem*(L_H + L_L) + l_kl*L_KL + l_fm*L_fm + l_adv*L_adv
Дискриминатор обучается шарнирной потерей на sg(x_hat).
"""

from typing import Dict,List,Optional,Sequence,Tuple,Union

import numpy as np

from Common.Bottleneck import mean_scaled_frobenius
from Common.Dsp import AudioBuffer,log_mel_tensor
from Common.Errors import NonFiniteLossError,ShapeError
from Common.Grad import Tensor,pad_last,relu,stop_gradient
from Common.Tokenizer import ForwardResult,TokenizerModel,discriminate,forward

MEL_SCALES:Tuple[Tuple[int,int],...] = tuple((32 * 2 ** i,5 * 2 ** i) for i in range(7))
FEATURE_EPS:float = 1e-8

#----------------------------------------------------------------
def _AsSignal(x:Union[Tensor,AudioBuffer,np.ndarray]) -> Tensor:
    if isinstance(x,AudioBuffer):
        x = x.samples
    x = x if isinstance(x,Tensor) else Tensor(x)
    return x.Reshape(1,-1) if x.ndim == 1 else x

def _EqualLength(x:Tensor,y:Tensor) -> Tuple[Tensor,Tensor]:
    length = max(x.shape[-1],y.shape[-1])
    if x.shape[-1] < length:
        x = pad_last(x,0,length - x.shape[-1])
    if y.shape[-1] < length:
        y = pad_last(y,0,length - y.shape[-1])
    return x,y

#----------------------------------------------------------------
def loss_semantic(z_a_high:Tensor,z_a_low:Tensor,z_s_high:Tensor,z_s_low:Tensor) -> Tuple[Tensor,Tensor]:
    """(L_H, L_L): семантические цели берутся через stop-gradient"""
    for acoustic,semantic in ((z_a_high,z_s_high),(z_a_low,z_s_low)):
        if tuple(acoustic.shape) != tuple(semantic.shape):
            raise ShapeError('loss_semantic',acoustic.shape,semantic.shape)
    high = mean_scaled_frobenius(z_a_high - stop_gradient(z_s_high))
    low = mean_scaled_frobenius(z_a_low - stop_gradient(z_s_low))
    return high,low

def loss_mel_multiscale(x:Union[Tensor,AudioBuffer,np.ndarray],x_hat:Union[Tensor,AudioBuffer,np.ndarray],
                        sample_rate:int=16000,scales:Sequence[Tuple[int,int]]=MEL_SCALES) -> Tensor:
    """Среднее по масштабам L1 между лог-мел спектрами, шаг = окно / 4"""
    x,x_hat = _EqualLength(_AsSignal(x),_AsSignal(x_hat))
    total = None
    for window,bins in scales:
        hop = window // 4
        distance = (log_mel_tensor(x,window,hop,bins,sample_rate)
                    - log_mel_tensor(x_hat,window,hop,bins,sample_rate)).Abs().Mean()
        total = distance if total is None else total + distance
    return total / len(scales)

def loss_adversarial(real_logits:Sequence[Tensor],fake_logits:Sequence[Tensor]) -> Tuple[Tensor,Tensor]:
    """Шарнирные потери (d_loss, g_loss), усредненные по разрешениям"""
    if len(real_logits) != len(fake_logits):
        raise ShapeError('loss_adversarial',(len(real_logits),),(len(fake_logits),))
    dLoss,gLoss = None,None
    for real,fake in zip(real_logits,fake_logits):
        d = relu(1.0 - real).Mean() + relu(fake + 1.0).Mean()
        g = -fake.Mean()
        dLoss = d if dLoss is None else dLoss + d
        gLoss = g if gLoss is None else gLoss + g
    return dLoss / len(real_logits),gLoss / len(fake_logits)

def loss_feature_matching(real_feats:Sequence[Sequence[Tensor]],fake_feats:Sequence[Sequence[Tensor]]) -> Tensor:
    """
    Среднее по всем слоям всех разрешений:
        mean|r - f| / (mean|r| + 1e-8), реальные признаки через stop-gradient
    """
    if len(real_feats) != len(fake_feats):
        raise ShapeError('loss_feature_matching',(len(real_feats),),(len(fake_feats),))
    terms:List[Tensor] = []
    for realLayers,fakeLayers in zip(real_feats,fake_feats):
        if len(realLayers) != len(fakeLayers):
            raise ShapeError('loss_feature_matching',(len(realLayers),),(len(fakeLayers),))
        for real,fake in zip(realLayers,fakeLayers):
            if tuple(real.shape) != tuple(fake.shape):
                raise ShapeError('loss_feature_matching',real.shape,fake.shape)
            real = stop_gradient(real)
            scale = float(np.mean(np.abs(real.values))) + FEATURE_EPS
            terms.append((real - fake).Abs().Mean() / scale)
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total / len(terms)

#----------------------------------------------------------------
def _CheckFinite(terms:Dict[str,Tensor],step:int) -> None:
    for name,value in terms.items():
        if not np.all(np.isfinite(value.values)):
            raise NonFiniteLossError(name,step)

def discriminator_loss(model:TokenizerModel,x:Tensor,x_hat:Tensor,step:int=-1) -> Tensor:
    realLogits,_ = discriminate(model,x)
    fakeLogits,_ = discriminate(model,stop_gradient(x_hat))
    dLoss,_ = loss_adversarial(realLogits,fakeLogits)
    _CheckFinite({'disc':dLoss},step)
    return dLoss

def generator_loss(model:TokenizerModel,x:Tensor,result:ForwardResult,step:int=-1) -> Tuple[Tensor,Dict[str,float]]:
    """
    Взвешенная сумма слагаемых генератора и их расшифровка

    Градиенты, попавшие в параметры дискриминатора, вызывающая сторона
    отбрасывает (при обучении дискриминатор заморожен).
    """
    weights = model.weights
    mel = loss_mel_multiscale(x,result.x_hat,model.sample_rate)
    high,low = loss_semantic(result.z_a_high,result.z_a_low,result.z_s_high,result.z_s_low)
    realLogits,realFeats = discriminate(model,x)
    fakeLogits,fakeFeats = discriminate(model,result.x_hat)
    _,adversarial = loss_adversarial([stop_gradient(r) for r in realLogits],fakeLogits)
    matching = loss_feature_matching(realFeats,fakeFeats)
    terms = {'mel':mel,'sem_high':high,'sem_low':low,'kl':result.kl,'fm':matching,'adv':adversarial}
    _CheckFinite(terms,step)

    semantic = high * float(model.use_high) + low * float(model.use_low)
    weighted = {'mel':mel * weights.mel,
                'sem':semantic * weights.sem,
                'kl':result.kl * weights.kl,
                'fm':matching * weights.fm,
                'adv':adversarial * weights.adv}
    total = weighted['mel'] + weighted['sem'] + weighted['kl'] + weighted['fm'] + weighted['adv']
    _CheckFinite({'generator':total},step)

    breakdown = {name:value.Item() for name,value in terms.items()}
    breakdown.update({f'weighted_{name}':value.Item() for name,value in weighted.items()})
    breakdown['generator'] = total.Item()
    return total,breakdown

def total_objective(model:TokenizerModel,batch:np.ndarray,rng:Optional[np.random.Generator]=None,
                    deterministic:Optional[bool]=None) -> Tuple[Tensor,Tensor,Dict[str,float]]:
    """(потеря генератора, потеря дискриминатора, расшифровка слагаемых)"""
    result = forward(model,batch,rng,deterministic)
    x = Tensor(np.asarray(batch,dtype=np.float64).reshape(result.x_hat.shape))
    dLoss = discriminator_loss(model,x,result.x_hat)
    total,breakdown = generator_loss(model,x,result)
    breakdown['disc'] = dLoss.Item()
    return total,dLoss,breakdown

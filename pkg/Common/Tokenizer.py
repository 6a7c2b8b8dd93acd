# -*- coding: utf-8 -*-
"""
Модуль токенизатора: акустический кодировщик, объединенный латент,
KL-горло, декодер с головой ISTFT и многорезолюционный дискриминатор

Раскладка тензоров (B, T, C): пакет, кадры, каналы. Латенты идут с
частотой мел-кадров / 4, декодер работает на удвоенной частоте.
"""

from dataclasses import dataclass
from typing import Any,List,Optional,Tuple,Union

import numpy as np

from Common.Bottleneck import SemanticBottleneck,compress
from Common.Dsp import (LOG_FLOOR,AudioBuffer,FeatureSequence,MelFrames,fit_length,istft_head,
                        log_mel_tensor,pad_frames,power_spectrogram_tensor)
from Common.Errors import (ConfigValidationError,DimensionMismatchError,RateMismatchError,
                           ShapeError)
from Common.Grad import (Tensor,clip,cos,gelu,leaky_relu,pad_last,repeat,sin,stack,
                         stop_gradient)
from Common.Layers import Conv2dLayer,DepthwiseConv1dLayer,LayerNorm,Linear,Module,Parameter
from Common.SemanticEncoder import MEL_SCALE,MEL_SHIFT,POOLING,FrozenSemanticEncoder
from Common.SpectralAnalysis import channel_merge

LOGVAR_LIMIT:float = 14.0
MAX_LOG_MAGNITUDE:float = float(np.log(100.0))
DISCRIMINATOR_WINDOWS:Tuple[int,...] = (256,512,1024)
DISCRIMINATOR_STRIDES:Tuple[Tuple[int,int],...] = ((2,1),(2,2),(2,2),(1,1))
LEAKY_SLOPE:float = 0.1

#----------------------------------------------------------------
#----------------------------КОДИРОВЩИК--------------------------
#----------------------------------------------------------------
class AcousticEncoder(Module):
    """
    Неперекрывающееся патч-вложение лог-мел спектра

    Первая свертка (8 полос x 2 кадра), вторая схлопывает оставшиеся
    полосы и еще раз делит время на 2: (B, F, M) -> (B, F/4, D_high).
    """
    def __init__(self,mel_bins:int,channels:int,d_high:int,rng:np.random.Generator):
        if mel_bins % 8:
            raise ConfigValidationError([f'mel_bins: {mel_bins} должно быть кратно 8'])
        self.patch:Conv2dLayer = Conv2dLayer(1,channels,(8,2),(8,2),rng)
        self.collapse:Conv2dLayer = Conv2dLayer(channels,d_high,(mel_bins // 8,2),(mel_bins // 8,2),rng)
        self.mel_bins:int = mel_bins
        self.d_high:int = d_high

    def __call__(self,melValues:np.ndarray) -> Tensor:
        padded = pad_frames(np.asarray(melValues,dtype=np.float64),POOLING)
        batch,frames,bins = padded.shape
        if bins != self.mel_bins:
            raise DimensionMismatchError(self.mel_bins,bins)
        image = Tensor((padded + MEL_SHIFT) / MEL_SCALE).Transpose(0,2,1).Reshape(batch,1,bins,frames)
        hidden = gelu(self.patch(image))
        features = self.collapse(hidden)
        return features.Reshape(batch,self.d_high,frames // POOLING).Transpose(0,2,1)

#----------------------------------------------------------------
#-----------------------------ДЕКОДЕР----------------------------
#----------------------------------------------------------------
class DecoderBlock(Module):
    def __init__(self,channels:int,rng:np.random.Generator):
        self.depthwise:DepthwiseConv1dLayer = DepthwiseConv1dLayer(channels,7,rng)
        self.norm:LayerNorm = LayerNorm(channels)
        self.expand:Linear = Linear(channels,2 * channels,rng)
        self.project:Linear = Linear(2 * channels,channels,rng)

    def __call__(self,x:Tensor) -> Tensor:
        return x + self.project(gelu(self.expand(self.norm(self.depthwise(x)))))

class Decoder(Module):
    """Повышение частоты x2, стек блоков, голова амплитуды и фазы, ISTFT"""
    def __init__(self,d:int,channels:int,blocks:int,n_fft:int,hop:int,rng:np.random.Generator):
        self.embed:Linear = Linear(d,channels,rng)
        self.upsample:DepthwiseConv1dLayer = DepthwiseConv1dLayer(channels,3,rng)
        self.blocks:List[DecoderBlock] = [DecoderBlock(channels,rng) for _ in range(blocks)]
        self.norm:LayerNorm = LayerNorm(channels)
        self.bins:int = n_fft // 2 + 1
        self.head:Linear = Linear(channels,2 * self.bins,rng)
        self.n_fft:int = n_fft
        self.hop:int = hop
        self.d:int = d

    def __call__(self,z:Tensor) -> Tensor:
        """(B, T, d) -> (B, 2*T*hop)"""
        if z.shape[-1] != self.d:
            raise DimensionMismatchError(self.d,z.shape[-1])
        batch,frames = z.shape[0],z.shape[1]
        if frames == 0:
            return Tensor(np.zeros((batch,0)))
        x = self.upsample(repeat(self.embed(z),2,axis=1))
        for block in self.blocks:
            x = block(x)
        out = self.head(self.norm(x))
        magnitude = clip(out[...,:self.bins],high=MAX_LOG_MAGNITUDE).Exp()
        phase = out[...,self.bins:]
        spectrum = stack([magnitude * cos(phase),magnitude * sin(phase)],axis=-1)
        return istft_head(spectrum,self.n_fft,self.hop)

#----------------------------------------------------------------
#--------------------------ДИСКРИМИНАТОР-------------------------
#----------------------------------------------------------------
class ResolutionDiscriminator(Module):
    def __init__(self,window_size:int,channels:int,rng:np.random.Generator):
        self.convs:List[Conv2dLayer] = []
        inChannels = 1
        for stride in DISCRIMINATOR_STRIDES:
            self.convs.append(Conv2dLayer(inChannels,channels,(3,3),stride,rng,padding=(1,1)))
            inChannels = channels
        self.logit:Conv2dLayer = Conv2dLayer(channels,1,(3,3),(1,1),rng,padding=(1,1))
        self.window_size:int = window_size
        self.hop:int = window_size // 4

    def __call__(self,x:Tensor) -> Tuple[Tensor,List[Tensor]]:
        spectrogram = (power_spectrogram_tensor(x,self.window_size,self.hop) + LOG_FLOOR).Log()
        batch,frames,bins = spectrogram.shape
        h = spectrogram.Reshape(batch,1,frames,bins)
        features:List[Tensor] = []
        for conv in self.convs:
            h = leaky_relu(conv(h),LEAKY_SLOPE)
            features.append(h)
        return self.logit(h),features

class MultiResolutionDiscriminator(Module):
    def __init__(self,channels:int,rng:np.random.Generator,windows:Tuple[int,...]=DISCRIMINATOR_WINDOWS):
        self.resolutions:List[ResolutionDiscriminator] = [ResolutionDiscriminator(w,channels,rng) for w in windows]

    def __call__(self,x:Tensor) -> Tuple[List[Tensor],List[List[Tensor]]]:
        logits,features = [],[]
        for resolution in self.resolutions:
            logit,maps = resolution(x)
            logits.append(logit)
            features.append(maps)
        return logits,features

#----------------------------------------------------------------
#------------------------------МОДЕЛЬ----------------------------
#----------------------------------------------------------------
@dataclass
class LatentDistribution():
    mu:Tensor
    logvar:Tensor

@dataclass
class ForwardResult():
    mel:np.ndarray
    z_a_high:Tensor
    z_a_low:Tensor
    z_s_high:Tensor
    z_s_low:Tensor
    z_uni:Tensor
    distribution:LatentDistribution
    z:Tensor
    kl:Tensor
    x_hat:Tensor

class TokenizerModel(Module):
    def __init__(self,config:Any,sembo:Optional[SemanticBottleneck],seed:int):
        tokenizer = config.tokenizer
        encoderConfig = config.semantic_encoder
        if tokenizer.semantic_source == 'bottleneck':
            if sembo is None:
                raise ConfigValidationError(['tokenizer.semantic_source: требуется обученное узкое горло'])
            if (sembo.d_high,sembo.d_low) != (encoderConfig.d_high,tokenizer.d):
                raise DimensionMismatchError(tokenizer.d,sembo.d_low)
            sembo.SetRequiresGrad(False)
        rng = np.random.default_rng([seed,2])

        self.semantic_encoder:FrozenSemanticEncoder = FrozenSemanticEncoder(encoderConfig.seed,config.mel_bins,
                                                                            encoderConfig.d_high,encoderConfig.hidden,
                                                                            config.mel_rate)
        self.sembo:Optional[SemanticBottleneck] = sembo if tokenizer.semantic_source == 'bottleneck' else None
        self.acoustic_encoder:AcousticEncoder = AcousticEncoder(config.mel_bins,tokenizer.encoder_channels,
                                                                encoderConfig.d_high,rng)
        self.fc:Linear = Linear(encoderConfig.d_high,tokenizer.d,rng)
        self.kl_mu:Linear = Linear(tokenizer.d,tokenizer.d,rng)
        self.kl_logvar:Linear = Linear(tokenizer.d,tokenizer.d,rng)
        self.decoder:Decoder = Decoder(tokenizer.d,tokenizer.channels,tokenizer.decoder_blocks,
                                       8 * config.hop,2 * config.hop,rng)
        self.discriminator:MultiResolutionDiscriminator = MultiResolutionDiscriminator(tokenizer.disc_channels,rng)

        self.weights = tokenizer.weights
        self.kl_mode:str = tokenizer.kl_mode
        self.semantic_source:str = tokenizer.semantic_source
        self.use_high:bool = tokenizer.use_high
        self.use_low:bool = tokenizer.use_low
        self.sample_rate:int = config.sample_rate
        self.hop:int = config.hop
        self.window_size:int = config.window_size
        self.mel_bins:int = config.mel_bins
        self.d:int = tokenizer.d

    @property
    def latent_rate(self) -> float:
        return self.sample_rate / self.hop / POOLING

    def GeneratorParameters(self) -> List[Tuple[str,Parameter]]:
        named = []
        for name in ('acoustic_encoder','fc','kl_mu','kl_logvar','decoder'):
            named.extend(getattr(self,name).NamedParameters(f'{name}.'))
        return named

    def DiscriminatorParameters(self) -> List[Tuple[str,Parameter]]:
        return list(self.discriminator.NamedParameters('discriminator.'))

def build_tokenizer(config:Any,sembo:Optional[SemanticBottleneck]=None,seed:Optional[int]=None) -> TokenizerModel:
    return TokenizerModel(config,sembo,config.seed if seed is None else seed)

#----------------------------------------------------------------
#---------------------------ОПЕРАЦИИ-----------------------------
#----------------------------------------------------------------
def _Batched(values:np.ndarray) -> np.ndarray:
    values = np.asarray(values,dtype=np.float64)
    return values.reshape(1,-1) if values.ndim == 1 else values

def mel_batch(model:TokenizerModel,samples:np.ndarray) -> np.ndarray:
    """Лог-мел входа кодировщиков: (B, N) -> (B, F, mel_bins)"""
    signal = Tensor(_Batched(samples))
    return log_mel_tensor(signal,model.window_size,model.hop,model.mel_bins,model.sample_rate).values

def _MelValues(mel:Union[MelFrames,np.ndarray],expectedRate:float) -> np.ndarray:
    if isinstance(mel,MelFrames):
        if abs(mel.frame_rate - expectedRate) > 1e-9:
            raise RateMismatchError(expectedRate,mel.frame_rate)
        mel = mel.values
    values = np.asarray(mel,dtype=np.float64)
    return values.reshape((1,) + values.shape) if values.ndim == 2 else values

def acoustic_encode(model:TokenizerModel,mel:Union[MelFrames,np.ndarray]) -> Tuple[Tensor,Tensor]:
    """(z_a_high, z_a_low): патч-вложение и его сжатие fc"""
    values = _MelValues(mel,model.sample_rate / model.hop)
    z_a_high = model.acoustic_encoder(values)
    return z_a_high,model.fc(z_a_high)

def semantic_targets(model:TokenizerModel,mel:Union[MelFrames,np.ndarray]) -> Tuple[Tensor,Tensor]:
    """Замороженные семантические признаки обоих уровней, без градиента"""
    values = _MelValues(mel,model.sample_rate / model.hop)
    z_s_high = model.semantic_encoder.EncodeValues(values)
    if model.semantic_source == 'bottleneck':
        z_s_low = stop_gradient(compress(model.sembo,Tensor(z_s_high)))
    else:
        z_s_low = Tensor(channel_merge(z_s_high,model.semantic_encoder.d_high // model.d))
    return Tensor(z_s_high),z_s_low

def unify(z_a_low:Tensor,z_s_low:Tensor) -> Tensor:
    if tuple(z_a_low.shape) != tuple(z_s_low.shape):
        raise ShapeError('unify',z_a_low.shape,z_s_low.shape)
    return z_a_low + z_s_low

def latent_distribution(model:TokenizerModel,z_uni:Tensor) -> LatentDistribution:
    return LatentDistribution(mu=model.kl_mu(z_uni),
                              logvar=clip(model.kl_logvar(z_uni),-LOGVAR_LIMIT,LOGVAR_LIMIT))

def kl_divergence(mu:Tensor,logvar:Tensor) -> Tensor:
    """-1/2 * sum_d(1 + logvar - mu^2 - exp(logvar)), среднее по кадрам"""
    perFrame = ((logvar + 1.0) - mu * mu - logvar.Exp()).Sum(axis=-1) * -0.5
    return perFrame.Mean()

def kl_bottleneck(model:TokenizerModel,z_uni:Tensor,rng:Optional[np.random.Generator]=None,
                  deterministic:Optional[bool]=None) -> Tuple[Tensor,Tensor]:
    """
    Репараметризация z = mu + sigma * eta и KL до N(0, I)

    Без генератора или в детерминированном режиме z = mu.
    """
    return _Reparameterize(model,latent_distribution(model,z_uni),rng,deterministic)

def _Reparameterize(model:TokenizerModel,distribution:LatentDistribution,rng:Optional[np.random.Generator],
                    deterministic:Optional[bool]) -> Tuple[Tensor,Tensor]:
    if deterministic is None:
        deterministic = model.kl_mode == 'deterministic'
    kl = kl_divergence(distribution.mu,distribution.logvar)
    if deterministic or rng is None:
        return distribution.mu,kl
    noise = rng.standard_normal(distribution.mu.shape)
    return distribution.mu + (distribution.logvar * 0.5).Exp() * noise,kl

def decode(model:TokenizerModel,z:Union[Tensor,FeatureSequence,np.ndarray]):
    """Латенты в волну; для FeatureSequence возвращается AudioBuffer"""
    if isinstance(z,FeatureSequence):
        values = Tensor(z.values.reshape((1,) + z.values.shape))
        samples = model.decoder(values).values[0]
        return AudioBuffer(np.asarray(samples,dtype=np.float64),model.sample_rate)
    z = z if isinstance(z,Tensor) else Tensor(z)
    if z.ndim == 2:
        return model.decoder(z.Reshape(1,*z.shape)).Reshape(-1)
    return model.decoder(z)

def discriminate(model:TokenizerModel,x:Union[Tensor,AudioBuffer,np.ndarray]) -> Tuple[List[Tensor],List[List[Tensor]]]:
    if isinstance(x,AudioBuffer):
        x = Tensor(x.samples.reshape(1,-1))
    elif not isinstance(x,Tensor):
        x = Tensor(_Batched(x))
    if x.ndim == 1:
        x = x.Reshape(1,-1)
    return model.discriminator(x)

def fit_samples(x_hat:Tensor,length:int) -> Tensor:
    """Обрезка или дополнение нулями по последней оси до length"""
    current = x_hat.shape[-1]
    if current > length:
        return x_hat[...,:length]
    if current < length:
        return pad_last(x_hat,0,length - current)
    return x_hat

def forward(model:TokenizerModel,batch:np.ndarray,rng:Optional[np.random.Generator]=None,
            deterministic:Optional[bool]=None) -> ForwardResult:
    """Полный прямой проход генератора по пакету волн (B, N)"""
    samples = _Batched(batch)
    mel = mel_batch(model,samples)
    z_a_high,z_a_low = acoustic_encode(model,mel)
    z_s_high,z_s_low = semantic_targets(model,mel)
    z_uni = unify(z_a_low,z_s_low)
    distribution = latent_distribution(model,z_uni)
    z,kl = _Reparameterize(model,distribution,rng,deterministic)
    x_hat = fit_samples(model.decoder(z),samples.shape[-1])
    return ForwardResult(mel=mel,z_a_high=z_a_high,z_a_low=z_a_low,z_s_high=z_s_high,z_s_low=z_s_low,
                         z_uni=z_uni,distribution=distribution,z=z,kl=kl,x_hat=x_hat)

#----------------------------------------------------------------
def _CheckRate(model:TokenizerModel,audio:AudioBuffer) -> None:
    if audio.sample_rate != model.sample_rate:
        raise RateMismatchError(model.sample_rate,audio.sample_rate)

def encode_audio(model:TokenizerModel,audio:AudioBuffer,kind:str='uni') -> FeatureSequence:
    """kind='uni' - объединенный латент z_uni, kind='mu' - среднее апостериорного распределения"""
    _CheckRate(model,audio)
    mel = mel_batch(model,audio.samples)
    _,z_a_low = acoustic_encode(model,mel)
    _,z_s_low = semantic_targets(model,mel)
    z_uni = unify(z_a_low,z_s_low)
    latent = latent_distribution(model,z_uni).mu if kind == 'mu' else z_uni
    return FeatureSequence(np.asarray(latent.values[0],dtype=np.float64),model.latent_rate)

def reconstruct(model:TokenizerModel,audio:AudioBuffer) -> AudioBuffer:
    """Кодирование и детерминированное декодирование из mu; длина сохраняется"""
    latent = encode_audio(model,audio,kind='mu')
    decoded = decode(model,latent)
    return AudioBuffer(fit_length(decoded.samples,len(audio)),model.sample_rate)

from dataclasses import asdict, dataclass, fields

from django.conf import settings

from apps.corpus.vocabulary import SPECIAL_SYMBOLS
from config.exceptions import ConfigurationError

DTYPES = ('float32', 'float64')


@dataclass(frozen=True)
class ModelConfig:
    """
    Dimensiones e hiperparámetros del modelo encoder-decoder con atención.

    Los valores por defecto son de escala de escritorio (64); el tamaño 512
    de los experimentos originales sigue siendo configurable.
    """
    src_vocab_size: int
    tgt_vocab_size: int
    embedding_dim: int = 64
    hidden_dim: int = 64
    attention_dim: int = 64
    deep_output_dim: int = 64
    weight_noise_sigma: float = 0.01
    beam_size: int = 6
    max_output_length: int = 50
    init_scale: float = 0.08
    dtype: str = 'float32'
    seed: int = 1234

    def __post_init__(self):
        for name in ('src_vocab_size', 'tgt_vocab_size'):
            if getattr(self, name) < len(SPECIAL_SYMBOLS):
                raise ConfigurationError(f"{name} debe incluir los {len(SPECIAL_SYMBOLS)} símbolos especiales")
        for name in ('embedding_dim', 'hidden_dim', 'attention_dim', 'deep_output_dim',
                     'beam_size', 'max_output_length'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} debe ser >= 1, se recibió {getattr(self, name)}")
        if self.weight_noise_sigma < 0:
            raise ConfigurationError("weight_noise_sigma no puede ser negativo")
        if self.dtype not in DTYPES:
            raise ConfigurationError(f"dtype debe ser uno de {DTYPES}")

    @classmethod
    def from_settings(cls, src_vocab_size, tgt_vocab_size, **overrides):
        values = dict(settings.MODEL_DEFAULTS)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(src_vocab_size=src_vocab_size, tgt_vocab_size=tgt_vocab_size, **values)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def to_dict(self):
        return asdict(self)

    def parameter_shapes(self):
        """Disposición de la ParameterSet: nombre → forma."""
        E, H, A, D = self.embedding_dim, self.hidden_dim, self.attention_dim, self.deep_output_dim
        return {
            'src_emb': (self.src_vocab_size, E),
            'tgt_emb': (self.tgt_vocab_size, E),
            'enc_fw_W': (E + H, 4 * H),
            'enc_fw_b': (4 * H,),
            'enc_bw_W': (E + H, 4 * H),
            'enc_bw_b': (4 * H,),
            'dec_init_W': (2 * H, H),
            'dec_init_b': (H,),
            'att_W': (H, A),
            'att_U': (2 * H, A),
            'att_b': (A,),
            'att_v': (A,),
            'dec_W': (E + 2 * H + H, 4 * H),
            'dec_b': (4 * H,),
            'out_Ws': (H, D),
            'out_Wy': (E, D),
            'out_Wc': (2 * H, D),
            'out_b': (D,),
            'readout_W': (D, self.tgt_vocab_size),
            'readout_b': (self.tgt_vocab_size,),
        }

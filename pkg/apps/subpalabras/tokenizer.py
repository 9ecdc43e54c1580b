import re

# Separa la puntuación de las palabras; conserva mayúsculas/minúsculas
_PUNCTUATION = re.compile(r"([^\w\s'])", re.UNICODE)


def tokenize(text):
    """Tokenizador simple: espacios + puntuación separada."""
    return _PUNCTUATION.sub(r" \1 ", text).split()


def detokenize(tokens):
    return " ".join(tokens)

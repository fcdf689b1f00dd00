# coding: utf-8

# # Byte-pair encoding
#
# Merges are learned from word frequencies. Ties between equally frequent
# pairs go to the lexicographically smaller pair, so training is deterministic.

# In[1]:

import tempfile
from pathlib import Path

from headline_bench import bpe_decode, bpe_encode, bpe_train, word_tokenize
from headline_bench.tokenization import BpeModel


# In[2]:

corpus = [word_tokenize(s) for s in [
    "рубль укрепился к доллару",
    "рубль ослаб к евро",
    "доллар подешевел к рублю",
]]
model = bpe_train(corpus, num_merges=20)
model.merges[:8]


# Encoding splits words into learned pieces, and decoding glues them back.

# In[3]:

pieces = bpe_encode(model, word_tokenize("рубль подешевел"))
print(pieces.tokens)
print(bpe_decode(model, pieces))


# The merges file is plain text and round-trips through save and load.

# In[4]:

path = Path(tempfile.mkdtemp()) / "bpe.txt"
model.save(path)
print(path.read_text(encoding="utf-8").splitlines()[:4])
BpeModel.load(path).merges == model.merges

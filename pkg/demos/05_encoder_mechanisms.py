# coding: utf-8

# # Document encoding, warmup schedules and noising

# In[1]:

import numpy as np

from headline_bench import Vocab
from headline_bench.mechanisms import (
    CLS, SEP, NoiseSpec, corrupt, decode_document, dual_schedule, encode_document, noam_lr, ENCODER_SCHEDULE,
)


# Each sentence gets its own [CLS] ... [SEP] block, and segment ids flip
# between sentences.

# In[2]:

vocab = Vocab(list("abcde"), specials=(CLS, SEP))
doc = encode_document([list("abc"), list("de")], vocab)
print(vocab.decode(doc.token_ids))
print(doc.segment_ids)


# When the length budget runs out mid-sentence, that sentence is dropped whole.

# In[3]:

short = encode_document([list("abc"), list("de"), list("ab")], vocab, max_len=9)
decode_document(short, vocab)


# Encoder and decoder follow separate warmup curves. The decoder peaks sooner.

# In[4]:

steps = np.arange(1, 40001)
lrs = np.array([dual_schedule(int(s)) for s in steps])
print("encoder peak step", steps[lrs[:, 0].argmax()], "decoder peak step", steps[lrs[:, 1].argmax()])
print(f"{noam_lr(20000, ENCODER_SCHEDULE):.4e}")


# Three ways to corrupt a document.

# In[5]:

sentences = [["первое", "предложение"], ["второе"], ["третье", "и", "последнее"]]
for kind in ("shuffle_sentences", "rotate", "infill"):
    print(kind, corrupt(sentences, NoiseSpec(kind, seed=3, mask_fraction=0.4)))

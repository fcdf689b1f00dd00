# coding: utf-8

# # Scoring headlines
#
# A small tour of the overlap metrics. Everything here works on token lists,
# and `evaluate_corpus` takes raw strings and does the lowercasing and
# tokenization itself.

# In[1]:

from headline_bench import evaluate_corpus, rouge_l, rouge_n
from headline_bench.metrics import corpus_bleu, novelty, repetition_rate


# Unigram overlap between a reference and a shorter guess. Precision is perfect,
# recall is not.

# In[2]:

ref = "курс доллара подрос".split()
hyp = "курс доллара".split()
rouge_n(ref, hyp, 1)


# Swapping two words keeps every unigram but breaks the longest common
# subsequence.

# In[3]:

rouge_l(list("abcd"), list("acbd"))


# BLEU is computed over the whole corpus at once. A headline that is a strict
# prefix of its reference gets perfect n-gram precision but pays the brevity
# penalty.

# In[4]:

b = corpus_bleu([(list("abcd"), list("abc"))])
print(b.p_n, round(b.bp, 4), round(b.bleu, 2))


# Novelty asks how many headline n-grams never occur in the article.

# In[5]:

article = "центробанк повысил ключевую ставку до 7 процентов".split()
print(novelty(article, "центробанк повысил ставку".split(), 1))
print(novelty(article, "центробанк повысил ставку".split(), 2))


# A headline that repeats a bigram is flagged by the repetition check.

# In[6]:

repetition_rate(["рубль укрепился на открытии на открытии".split(), "рубль укрепился".split()])


# The full report, with the table layout used for comparing systems.

# In[7]:

refs = ["Курс доллара подрос на 1 коп.", "Нефть подешевела на торгах в Лондоне"]
hyps = ["курс доллара подрос", "нефть подорожала в лондоне"]
sources = ["Курс доллара подрос на 1 коп. по итогам торгов.", "Нефть подешевела на торгах в Лондоне в среду."]
report = evaluate_corpus(refs, hyps, sources)
print(report.table("toy system"))
print(report.to_json())

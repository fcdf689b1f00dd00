# coding: utf-8

# # From a raw dump to a scored baseline
#
# We write a tiny JSON-lines dump in the same shape as the real one, load it,
# split it, and score the first-sentence baseline on the test part.

# In[1]:

import json
import tempfile
from pathlib import Path

from headline_bench import evaluate_corpus, load_ria, split_dataset, split_sentences
from headline_bench.baseline import run_baseline

workdir = Path(tempfile.mkdtemp())


# In[2]:

records = []
for i in range(200):
    records.append({
        "title": f"Курс доллара вырос на {i} коп.",
        "text": f"<p>Курс доллара вырос на {i} коп. на торгах в среду.</p><p>Евро подешевел. Торги идут спокойно.</p>",
    })
records.append({"title": "запись без текста"})
dump = workdir / "ria.jsonl"
dump.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in records) + "\n", encoding="utf-8")

loaded = load_ria(dump)
print(len(loaded.articles), "articles,", loaded.skipped, "skipped")
loaded.articles[0]


# The sentence splitter knows common Russian abbreviations, so "коп." followed
# by a lowercase word does not end a sentence.

# In[3]:

text = loaded.articles[0].text
[text[s.start:s.end] for s in split_sentences(text)]


# A seeded 90:5:5 split. The manifest records every assignment and can be
# saved next to the results.

# In[4]:

manifest = split_dataset(loaded.articles, (90, 5, 5), seed=42)
test = manifest.select(loaded.articles, "test")
print(manifest.counts)
manifest.save(workdir / "split.json")


# In[5]:

hyps = run_baseline(test, "first_sentence", workdir / "first_sentence.txt")
report = evaluate_corpus([a.title for a in test], hyps, [a.text for a in test])
print(report.table("first sentence"))
print("novelty by n:", report.novelty)

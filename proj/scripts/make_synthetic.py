#!/usr/bin/env python3
"""Generate the bundled synthetic corpus and its companion inputs.

Writes, under data/synthetic/:
  corpus.csv          24 months (Jan 2021 - Dec 2022) of short political posts
  word_vectors.txt    word2vec text-format vectors for every generated word
  moral_lexicon.tsv   lemma / foundation / strength entries
  config.json         run configuration for the bundled pipeline
and data/lemmas_en.tsv (inflected form -> lemma).

Output depends only on SEED, so re-running reproduces the committed files.
"""

import csv
import io
import json
import random
from pathlib import Path

SEED = 20210103
DIM = 16
ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "synthetic"

# Theme vocabularies; each theme clusters on its own region of word space.
THEMES = {
    "community": "town hall visit students school library veterans local small business neighbors meeting grant".split(),
    "relief": "relief check stimulus payment pandemic aid unemployment benefit direct rescue support economic".split(),
    "economy": "infrastructure roads bridges jobs investment broadband transit build economy workers rail ports".split(),
    "tax": "tax jobs credit investment child infrastructure families cut refund wealthy".split(),
    "israel": "israel hamas rockets ceasefire gaza embassy terrorist palestinians iron dome security attack".split(),
    "pride": "lgbtq pride month equality transgender marriage rainbow celebrate dignity inclusion youth parade".split(),
    "covid": "vaccine booster mask covid variant testing clinic shot omicron hospital doses immunity".split(),
    "vote": "vote election ballot georgia democracy voter registration polls suppression rights turnout count".split(),
    "ukraine": "ukraine russia putin invasion sanctions kyiv zelensky nato troops refugees weapons war".split(),
    "abortion": "abortion roe wade court women reproductive decision choice ban clinic dobbs healthcare".split(),
    "student_debt": "student debt loan cancel forgiveness borrowers college tuition relief payments pell servicers".split(),
    "gun": "gun violence shooting uvalde background checks firearms safety assault weapons school ban".split(),
    "inflation": "inflation prices gas grocery cost reduction act energy pharmaceutical insulin lower medicare".split(),
    "holiday": "holiday christmas thanksgiving family happy season celebrate grateful wishes gather hanukkah joy".split(),
}

# Shared words give the tax theme a representation overlap with economy, so it
# branches off economy and later rejoins it.
TAX_SHARED = {"jobs", "investment", "infrastructure"}

# Active months, 1 = Jan 2021 ... 24 = Dec 2022.
SCHEDULE = {
    "community": range(2, 25),
    "relief": range(1, 4),
    "economy": range(4, 13),
    "tax": range(7, 9),
    "israel": range(5, 7),
    "pride": range(6, 8),
    "covid": range(8, 14),
    "vote": range(13, 17),
    "ukraine": range(14, 19),
    "abortion": range(16, 24),
    "student_debt": range(18, 21),
    "gun": range(18, 19),
    "inflation": range(19, 25),
    "holiday": [11, 12, 23, 24],
}

GENERAL = ("today congress bill week people country work proud statement congressman senator "
           "american americans state district join update thank news families community fight "
           "important action committee house senate plan hear time year").split()

# (lemma, foundation, strength). Democrats draw care and purity words more
# often than Republicans, and long-running themes draw more care and loyalty.
LEXICON = [
    ("protect", "care", 8.8), ("health", "care", 7.6), ("safe", "care", 7.9), ("suffer", "care", 2.1),
    ("harm", "care", 1.8), ("heal", "care", 8.2), ("compassion", "care", 8.6), ("hurt", "care", 2.4),
    ("fair", "fairness", 8.4), ("justice", "fairness", 7.9), ("equal", "fairness", 7.2), ("cheat", "fairness", 1.6),
    ("honest", "fairness", 7.5), ("fraud", "fairness", 2.0),
    ("united", "loyalty", 7.8), ("patriot", "loyalty", 7.1), ("nation", "loyalty", 6.4), ("betray", "loyalty", 1.9),
    ("together", "loyalty", 7.4), ("allegiance", "loyalty", 6.9),
    ("law", "authority", 6.8), ("order", "authority", 6.2), ("respect", "authority", 7.6), ("police", "authority", 5.9),
    ("tradition", "authority", 6.6), ("defy", "authority", 2.3),
    ("sacred", "purity", 8.1), ("faith", "purity", 7.3), ("pure", "purity", 7.7), ("disgust", "purity", 1.7),
    ("holy", "purity", 8.3), ("corrupt", "purity", 2.2),
]

STOPWORD_FILLER = "the and to of in for on is are we our this that with it be at by an".split()

# Inflections used in generated text. Lemmas are never stopwords and never
# themselves inflected forms.
IRREGULAR = {"children": "child", "families": "family", "policies": "policy", "bridges": "bridge",
             "votes": "vote", "voters": "voter", "passed": "pass", "passing": "pass", "protected": "protect",
             "protecting": "protect", "fought": "fight", "fighting": "fight", "built": "build",
             "building": "build", "working": "work", "worked": "work", "celebrating": "celebrate",
             "healed": "heal", "suffering": "suffer", "hurting": "hurt", "betrayed": "betray",
             "cheated": "cheat", "prices": "price", "rights": "right", "ballots": "ballot",
             "weapons": "weapon", "payments": "payment", "checks": "check", "shots": "shot",
             "loans": "loan", "roads": "road", "jobs": "job", "workers": "worker", "women": "woman",
             "bills": "bill", "students": "student", "veterans": "veteran", "neighbors": "neighbor",
             "rockets": "rocket", "sanctions": "sanction", "troops": "troop", "refugees": "refugee",
             "borrowers": "borrower", "servicers": "servicer", "firearms": "firearm", "wishes": "wish",
             "earners": "earner", "corporations": "corporation", "ports": "port", "doses": "dose",
             "benefits": "benefit", "palestinians": "palestinian", "americans": "american",
             "polls": "poll", "gathered": "gather", "meetings": "meeting", "grants": "grant"}

AUTHORS = [("Rep%s" % n, p, t) for n, p, t in [
    ("Alvarez", "D", "professional"), ("Brooks", "R", "professional"), ("Chen", "D", "personal"),
    ("Dawson", "R", "personal"), ("Ellis", "D", "professional"), ("Fischer", "R", "professional"),
    ("Garcia", "D", "personal"), ("Hughes", "R", "personal"), ("Iverson", "D", "professional"),
    ("Jensen", "R", "professional"), ("Kim", "D", "personal"), ("Lopez", "R", "personal"),
    ("Morgan", "D", "professional"), ("Nash", "R", "professional"), ("Ortiz", "D", "personal"),
    ("Patel", "R", "personal"), ("Quinn", "D", "professional"), ("Reyes", "R", "professional"),
    ("Singh", "D", "personal"), ("Turner", "R", "personal"), ("Underwood", "I", "professional"),
    ("Vance", "R", "professional"), ("Walsh", "D", "personal"), ("Young", "R", "personal"),
]]

LONG_THEMES = {"community", "economy", "tax", "abortion"}


def month_of(index):
    return 2021 + (index - 1) // 12, (index - 1) % 12 + 1


def lexicon_bias(party, theme):
    care = 0.55 if party == "D" else 0.25
    purity = 0.35 if party == "D" else 0.12
    loyalty = 0.30
    if theme in LONG_THEMES:
        care += 0.15
        loyalty += 0.2
    return {"care": care, "fairness": 0.3, "loyalty": loyalty, "authority": 0.3, "purity": purity}


def pick_lexicon_words(rng, party, theme):
    words = []
    bias = lexicon_bias(party, theme)
    for foundation, prob in bias.items():
        if rng.random() < prob:
            entries = [e for e in LEXICON if e[1] == foundation]
            # Democrats lean to the higher-strength care and purity entries.
            if party == "D" and foundation in ("care", "purity"):
                entries = sorted(entries, key=lambda e: -e[2])[: max(3, len(entries) - 2)]
            words.append(rng.choice(entries)[0])
    return words


def inflect(rng, word):
    forms = [f for f, lemma in IRREGULAR.items() if lemma == word]
    if forms and rng.random() < 0.35:
        return rng.choice(forms)
    return word


def decorate(rng, text, theme):
    if rng.random() < 0.15:
        text += " #" + theme.replace("_", "")
    if rng.random() < 0.12:
        text = "@" + rng.choice(AUTHORS)[0] + " " + text
    if rng.random() < 0.10:
        text += " https://example.org/" + theme + "/" + str(rng.randint(1, 999))
    if rng.random() < 0.06:
        text = "RT " + text
    if rng.random() < 0.05:
        text = text.replace(" and ", " &amp; ", 1)
    if rng.random() < 0.04:
        text += "<br>More soon!"
    return text


def make_text(rng, theme, party):
    vocab = THEMES[theme]
    # Earlier entries of a theme list are used more, giving stable top terms.
    weights = [1.0 / (1 + 0.15 * i) for i in range(len(vocab))]
    words = [inflect(rng, w) for w in rng.choices(vocab, weights=weights, k=rng.randint(4, 7))]
    words += [inflect(rng, w) for w in rng.sample(GENERAL, rng.randint(1, 2))]
    words += pick_lexicon_words(rng, party, theme)
    words += rng.sample(STOPWORD_FILLER, rng.randint(2, 4))
    rng.shuffle(words)
    text = " ".join(words)
    text = text[0].upper() + text[1:] + rng.choice([".", "!", "", "..."])
    return decorate(rng, text, theme)


def build_corpus(rng):
    rows = []
    counter = 0
    for month in range(1, 25):
        year, mon = month_of(month)
        for theme, months in SCHEDULE.items():
            if month not in months:
                continue
            n = 12 if month == 1 else rng.randint(22, 30)
            for _ in range(n):
                author, party, account = rng.choice(AUTHORS)
                day = rng.randint(1, 28)
                stamp = "%04d-%02d-%02dT%02d:%02d:%02dZ" % (year, mon, day, rng.randint(0, 23),
                                                          rng.randint(0, 59), rng.randint(0, 59))
                counter += 1
                rows.append((stamp, "t%05d" % counter, author, party, account, make_text(rng, theme, party)))
        # Texts that clean down to nothing, and texts with no known word.
        if month > 1:
            for text in ["@RepKim https://example.org/x #news", "RT the and of", "zqxv blorft grummel"]:
                author, party, account = rng.choice(AUTHORS)
                counter += 1
                rows.append(("%04d-%02d-15T12:00:00Z" % (year, mon), "t%05d" % counter, author, party,
                             account, text))
    rows.sort()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "timestamp", "author", "party", "account_type", "text"])
    for stamp, ident, author, party, account, text in rows:
        writer.writerow([ident, stamp, author, party, account, text])
    return buf.getvalue(), len(rows)


def build_vectors(rng):
    vectors = {}
    centers = {theme: [rng.gauss(0, 4) for _ in range(DIM)] for theme in THEMES}
    # Keyed by lemma: lookup happens after lemmatization.
    for theme, vocab in THEMES.items():
        for word in vocab:
            lemma = IRREGULAR.get(word, word)
            if (theme == "tax" and word in TAX_SHARED) or lemma in vectors:
                continue
            vectors[lemma] = [c + rng.gauss(0, 0.8) for c in centers[theme]]
    for word in GENERAL + [e[0] for e in LEXICON]:
        lemma = IRREGULAR.get(word, word)
        if lemma not in vectors:
            vectors[lemma] = [rng.gauss(0, 0.5) for _ in range(DIM)]
    lines = ["%d %d" % (len(vectors), DIM)]
    for word in sorted(vectors):
        lines.append(word + " " + " ".join("%.5f" % v for v in vectors[word]))
    return "\n".join(lines) + "\n"


def build_lemmas():
    lines = ["# form\tlemma"]
    for form in sorted(IRREGULAR):
        lines.append(form + "\t" + IRREGULAR[form])
    return "\n".join(lines) + "\n"


def build_lexicon():
    lines = ["lemma\tfoundation\tstrength"]
    for lemma, foundation, strength in sorted(LEXICON):
        lines.append("%s\t%s\t%.1f" % (lemma, foundation, strength))
    return "\n".join(lines) + "\n"


def main():
    rng = random.Random(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    corpus, n = build_corpus(rng)
    (OUT / "corpus.csv").write_text(corpus, encoding="utf-8")
    (OUT / "word_vectors.txt").write_text(build_vectors(random.Random(SEED + 1)), encoding="utf-8")
    (OUT / "moral_lexicon.tsv").write_text(build_lexicon(), encoding="utf-8")
    (ROOT / "data" / "lemmas_en.tsv").write_text(build_lemmas(), encoding="utf-8")
    config = {
        "inputs": {
            "corpus": "corpus.csv",
            "stopwords": "../stopwords_en.txt",
            "lemmas": "../lemmas_en.tsv",
            "word_vectors": "word_vectors.txt",
            "moral_lexicon": "moral_lexicon.tsv",
        },
        "seed": SEED,
        "output_dir": "out",
        "workers": 4,
    }
    (OUT / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print("wrote %d records" % n)


if __name__ == "__main__":
    main()

"""Regenerate the bundled toy corpus (200 tweet-like documents).

The file is committed; rerun this only when intentionally changing the
fixture, since golden tests depend on its bytes.

    python scripts/make_toy_corpus.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "graftkit" / "data" / "toy_corpus.jsonl"

OPENERS = [
    "just got home and", "honestly", "so today", "ok but", "listen,", "real talk:",
    "cant lie,", "morning thought:", "after all this time", "low key",
    "not gonna lie", "every single day", "this week", "right now", "somehow",
]

CALM = [
    "the coffee was warm and the street was quiet",
    "i watered the plants and read for an hour",
    "the train was on time and the sky looked soft",
    "we walked along the river until the lights came on",
    "dinner was simple and the house smelled like bread",
    "the rain kept a steady beat on the window",
    "i folded laundry and listened to an old record",
    "the garden finally looks the way i pictured it",
]

HAPPY = [
    "my best friend is visiting this weekend and i am so glad",
    "the little cafe on fifth gave me a free muffin",
    "we laughed until our faces hurt at absolutely nothing",
    "passed the exam and mom made my favorite soup",
    "the dog learned to catch the ball at last",
    "got the window seat and the sunset did the rest",
]

ANGRY = [
    "the bus skipped my stop twice and nobody apologized",
    "they cancelled the show an hour before doors opened",
    "my package sat in a warehouse for nine days",
    "the printer ate my ticket and the line did not move",
    "someone took my parking spot again and left a note",
]

SAD = [
    "the old bookshop on the corner is closing for good",
    "rain all week and the season already feels over",
    "found the letter i never sent and read it twice",
    "the team lost in the last minute and the walk home was long",
]

SURPRISED = [
    "i cant believe they actually remembered my birthday after all these years",
    "no way, the tiny band from our garage is on the radio",
    "did not expect to win anything and my name was called first",
    "when luck turns like this you just stand there blinking",
    "opened the door and the whole family was standing there",
    "the quiet kid from class just set a national record, unreal",
    "checked the ticket three times because the numbers kept matching",
    "they said yes before i even finished the question, total shock",
]

TAILS = [
    "feels good", "still thinking about it", "what a day", "cant explain it",
    "more of this please", "who knew", "anyway, tea time", "that is all",
    "wild times", "no complaints", "see you tomorrow", "goodnight folks",
]

FILLERS = [
    "and the city kept moving like nothing happened",
    "while the radio played something from another decade",
    "and i kept checking my phone for no reason",
    "with the kettle whistling in the background",
    "as the neighbours argued about football again",
    "and the cat watched all of it from the shelf",
]

PUNCT_TAILS = ["!", "!!", "?", ".", "...", "?!"]


def build_text(rng: random.Random, theme: list[str], target_words: int) -> str:
    parts = [rng.choice(OPENERS), rng.choice(theme)]
    while len(" ".join(parts).split()) < target_words - 4:
        parts.append(rng.choice(FILLERS))
    parts.append(rng.choice(TAILS))
    text = " ".join(parts)
    words = text.split()
    if len(words) > target_words:
        words = words[:target_words]
        text = " ".join(words)
    if rng.random() < 0.6:
        text += rng.choice(PUNCT_TAILS)
    return text


def main() -> None:
    rng = random.Random(20240601)
    themes = [
        ("calm", CALM), ("happy", HAPPY), ("angry", ANGRY), ("sad", SAD),
    ]
    rows = []
    surprised_slots = set(rng.sample(range(200), 8))  # ~4% minority class
    for i in range(200):
        if i in surprised_slots:
            label, theme = "surprised", SURPRISED
        else:
            label, theme = rng.choice(themes)
        if i % 29 == 0:
            target = 40  # a few exactly-40-word documents for mask-ratio checks
        else:
            target = rng.randint(8, 36)
        text = build_text(rng, theme, target)
        rows.append({"id": f"toy:{i:03d}", "text": text, "label": label})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {len(rows)} documents to {OUT}")


if __name__ == "__main__":
    main()

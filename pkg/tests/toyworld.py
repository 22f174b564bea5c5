"""Deterministic toy language world for tests and demos.

Builds a 1000-word frequency list, a themed corpus, and theme-structured
embeddings that mirror how co-occurrence and similarity line up in real
data: context words of a theme predict that theme's rarer keywords, and
embeddings place keywords near their context words and inflected variants.

Everything is a pure function of the seed, so fixtures regenerate
identically anywhere.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from k2t.lm_backend import NGramModel, Vocabulary, build_vocabulary, train_ngram
from k2t.porter import stem
from k2t.semantic_space import EmbeddingTable, save_embeddings
from k2t.textproc import tokenize

GLUE = """
the of and a to in is was it for on are as with they at be this have from
or one had by but not what all were we when your can said there use an
each which she do how their if will
""".split()

# theme name -> (common context words, rare keywords)
THEMES: dict[str, tuple[list[str], list[str]]] = {
    "water": (["water", "river", "sea", "rain"],
              ["harbor", "voyage", "tide", "canoe", "lagoon", "reef",
               "marsh", "cascade", "ripple", "estuary"]),
    "fire": (["fire", "heat", "flame", "smoke"],
             ["ember", "blaze", "furnace", "torch", "scorch", "kindle",
              "bonfire", "soot", "ignite", "wildfire"]),
    "forest": (["tree", "wood", "leaf", "branch"],
               ["grove", "thicket", "cedar", "willow", "moss", "fern",
                "timber", "acorn", "birch", "sapling"]),
    "mountain": (["hill", "rock", "stone", "cave"],
                 ["summit", "ridge", "cliff", "boulder", "slope", "ledge",
                  "crag", "plateau", "quarry", "ravine"]),
    "weather": (["wind", "cloud", "storm", "snow"],
                ["thunder", "frost", "hail", "breeze", "blizzard",
                 "drizzle", "fog", "gust", "sleet", "downpour"]),
    "farm": (["farm", "field", "grow", "plant"],
             ["harvest", "barn", "plow", "orchard", "pasture", "seedling",
              "silo", "tractor", "furrow", "meadow"]),
    "animal": (["animal", "dog", "cow", "cat"],
               ["otter", "badger", "falcon", "heron", "stallion", "hound",
                "mare", "beaver", "lynx", "weasel"]),
    "ocean": (["fish", "swim", "deep", "wave"],
              ["whale", "dolphin", "shark", "coral", "plankton", "squid",
               "eel", "oyster", "kelp", "minnow"]),
    "food": (["food", "eat", "bread", "meat"],
             ["stew", "porridge", "loaf", "broth", "pastry", "roast",
              "gravy", "dough", "spice", "morsel"]),
    "drink": (["drink", "cup", "milk", "tea"],
              ["cider", "brew", "nectar", "syrup", "kettle", "flask",
               "ale", "cocoa", "froth", "sip"]),
    "house": (["home", "room", "door", "floor"],
              ["attic", "cellar", "porch", "hearth", "rafter", "shutter",
               "corridor", "chimney", "balcony", "pantry"]),
    "city": (["city", "town", "street", "road"],
             ["avenue", "plaza", "suburb", "alley", "boulevard",
              "district", "tavern", "lane", "bazaar", "curb"]),
    "building": (["build", "wall", "roof", "tower"],
                 ["mason", "scaffold", "mortar", "lumber", "girder",
                  "blueprint", "foundation", "beam", "brick", "plank"]),
    "travel": (["travel", "move", "walk", "ride"],
               ["journey", "expedition", "caravan", "compass", "luggage",
                "passport", "route", "wander", "trek", "pilgrim"]),
    "vehicle": (["car", "train", "ship", "wheel"],
                ["wagon", "carriage", "freight", "engine", "rudder",
                 "trolley", "barge", "sled", "hull", "axle"]),
    "sky": (["sky", "sun", "moon", "star"],
            ["comet", "zodiac", "horizon", "zenith", "aurora", "meteor",
             "crescent", "orbit", "galaxy", "nebula"]),
    "body": (["body", "hand", "head", "eye"],
             ["shoulder", "elbow", "ankle", "wrist", "spine", "knuckle",
              "thumb", "torso", "shin", "palm"]),
    "health": (["doctor", "sick", "pain", "heal"],
               ["remedy", "fever", "clinic", "bandage", "tonic", "ailment",
                "surgeon", "antidote", "salve", "healer"]),
    "clothing": (["wear", "cloth", "dress", "coat"],
                 ["garment", "sleeve", "collar", "linen", "tunic", "cloak",
                  "apron", "mitten", "vest", "hem"]),
    "music": (["music", "song", "sing", "sound"],
              ["melody", "rhythm", "chorus", "fiddle", "ballad",
               "drumbeat", "harmony", "lyric", "anthem", "tune"]),
    "art": (["art", "draw", "paint", "color"],
            ["canvas", "easel", "sketch", "palette", "mural", "portrait",
             "sculpture", "etching", "pigment", "gallery"]),
    "book": (["book", "read", "write", "page"],
             ["chapter", "novel", "scroll", "manuscript", "preface",
              "margin", "stanza", "fable", "almanac", "prose"]),
    "school": (["school", "learn", "teach", "class"],
               ["lesson", "pupil", "chalk", "tutor", "lecture", "homework",
                "satchel", "recess", "grammar", "exam"]),
    "number": (["number", "count", "many", "few"],
               ["dozen", "fraction", "tally", "quota", "ratio", "digit",
                "multiple", "remainder", "plenty", "scarcity"]),
    "money": (["money", "buy", "sell", "pay"],
              ["wallet", "ledger", "bargain", "coin", "invoice", "receipt",
               "treasury", "wage", "refund", "deposit"]),
    "market": (["market", "trade", "shop", "goods"],
               ["merchant", "auction", "vendor", "cargo", "stall",
                "peddler", "depot", "commerce", "barter", "inventory"]),
    "law": (["law", "rule", "court", "judge"],
            ["verdict", "statute", "lawyer", "witness", "jury", "edict",
             "tribunal", "plaintiff", "gavel", "warrant"]),
    "war": (["war", "fight", "army", "battle"],
            ["soldier", "fortress", "siege", "cavalry", "armor", "trench",
             "garrison", "banner", "skirmish", "rampart"]),
    "state": (["govern", "nation", "vote", "lead"],
              ["senate", "council", "mayor", "treaty", "embassy",
               "charter", "province", "ballot", "regime", "envoy"]),
    "time": (["time", "year", "day", "hour"],
             ["decade", "century", "calendar", "fortnight", "interval",
              "dusk", "dawn", "midday", "era", "epoch"]),
    "family": (["family", "mother", "father", "child"],
               ["cousin", "nephew", "uncle", "grandmother", "sibling",
                "heir", "niece", "ancestor", "orphan", "kindred"]),
    "emotion": (["feel", "love", "fear", "hope"],
                ["sorrow", "delight", "envy", "pity", "longing", "dread",
                 "rapture", "gloom", "cheer", "anguish"]),
    "mind": (["think", "know", "mind", "idea"],
             ["notion", "memory", "wisdom", "logic", "intuition", "doubt",
              "insight", "reverie", "judgment", "belief"]),
    "speech": (["say", "tell", "speak", "word"],
               ["whisper", "rumor", "proverb", "dialect", "sermon",
                "riddle", "gossip", "slogan", "chant", "banter"]),
    "game": (["play", "game", "win", "lose"],
             ["tournament", "puzzle", "dice", "wager", "marble", "kite",
              "domino", "checker", "gamble", "jest"]),
    "sport": (["run", "jump", "ball", "race"],
              ["sprint", "hurdle", "javelin", "relay", "gymnast",
               "archery", "rowing", "marathon", "umpire", "stride"]),
    "craft": (["work", "tool", "cut", "join"],
              ["hammer", "chisel", "anvil", "workshop", "artisan",
               "foreman", "lathe", "forge", "carve", "whittle"]),
    "science": (["science", "test", "study", "fact"],
                ["theory", "experiment", "microscope", "formula",
                 "hypothesis", "laboratory", "specimen", "particle",
                 "catalyst", "molecule"]),
    "machine": (["machine", "power", "metal", "iron"],
                ["gear", "piston", "lever", "pulley", "turbine", "valve",
                 "crank", "motor", "dynamo", "gauge"]),
    "light": (["see", "look", "bright", "dark"],
              ["glimmer", "shadow", "lantern", "glow", "sparkle", "dazzle",
               "gleam", "flicker", "shimmer", "twilight"]),
    "sound": (["hear", "loud", "quiet", "voice"],
              ["echo", "murmur", "clatter", "rustle", "hum", "chime",
               "thud", "creak", "drone", "jingle"]),
    "earth": (["earth", "land", "soil", "sand"],
              ["clay", "gravel", "dune", "sediment", "loam", "silt",
               "bedrock", "crater", "fossil", "ore"]),
    "plant": (["grass", "flower", "seed", "root"],
              ["blossom", "petal", "clover", "ivy", "thorn", "reed",
               "bramble", "tulip", "lily", "vine"]),
    "insect": (["small", "fly", "bug", "bee"],
               ["beetle", "moth", "cricket", "wasp", "firefly", "ladybug",
                "dragonfly", "termite", "grasshopper", "larva"]),
    "bird": (["bird", "wing", "nest", "egg"],
             ["sparrow", "robin", "owl", "crow", "finch", "swallow",
              "raven", "plume", "perch", "warble"]),
    "cold": (["ice", "cold", "winter", "north"],
             ["glacier", "icicle", "tundra", "igloo", "polar", "shiver",
              "frostbite", "permafrost", "chill", "thaw"]),
    "hot": (["hot", "summer", "south", "dry"],
            ["desert", "oasis", "mirage", "drought", "swelter", "cactus",
             "canyon", "parch", "sunburn", "sizzle"]),
    "night": (["night", "sleep", "bed", "dream"],
              ["slumber", "pillow", "lullaby", "midnight", "nocturne",
               "insomnia", "doze", "nap", "blanket", "quilt"]),
    "royalty": (["king", "queen", "crown", "rich"],
                ["palace", "throne", "scepter", "jewel", "dynasty",
                 "knight", "herald", "banquet", "courtier", "realm"]),
    "ritual": (["temple", "spirit", "faith", "soul"],
               ["shrine", "altar", "hymn", "monk", "abbey", "chapel",
                "relic", "parish", "prophet", "oracle"]),
}

_FILLER_RAW = """
about after again air along also always any around ask away back bad
been before began begin behind below best better between big both
bring call came care carry catch change children clean clear climb
close come cook cost could cover cross cry dance decide did different does
done down drop early easy eight end enough even evening ever every
everything example explain fall fast feet fell felt fill find fine finish
first fit five fix follow form found four free fresh friend front full
funny gave gather get girl give glad go going gold gone good got great
green group half happen happy hard harder hate heard heavy held help
here high him his hold hole hunt hurry hurt hundred imagine important
instead job just keep kept kill kind kiss knew lady large last late laugh
lay learned least leave left less let letter life lift like line listen
little live long lot low lucky made make man mark marry match matter may
maybe me mean meet men middle might mile million minute miss mix moment
more morning most mountain mouth much must my name near nearly need never
new next nice nine no note nothing notice now often oil old once
only open order other our out over own paper part party pass past people
person pick picture piece place plan point poor pretty pull push
put question quick quite real red remember rest return right ring rose
round sad same sat saw school2 second seem seen sent set seven several
shall shape sharp shine short should show shut side sign simple since sir
sit sixteen size skill slow smile soft some something sometimes soon sorry
space speed spend spent spring stand start state stay step still stop
story straight strange strong such sudden sugar suppose sure sweet table
take talk tall ten than that them then things third thirty those though
thought thousand three through throw today together told too took top
touch toward trip true try turn twelve twenty two under understand until
up upon us very visit wait want warm wash watch week well went wet where
while white whole why wide wife wild wish without woman wonder world
would yellow yes yet young
""".split()

STOPWORDS = set("""
i me my myself we our ours ourselves you your yours yourself yourselves he
him his himself she her hers herself it its itself they them their theirs
themselves what which who whom this that these those am is are was were be
been being have has had having do does did doing a an the and but if or
because as until while of at by for with about against between into
through during before after above below to from up down in out on off
over under again further then once here there when where why how all any
both each few more most other some such no nor not only own same so than
too very s t can will just don should now
""".split())


@dataclass
class ToyWorld:
    wordlist: list[str]
    stopwords: set[str]
    variants: dict[str, list[str]]
    corpus_lines: list[str]
    table: EmbeddingTable
    vocabulary: Vocabulary
    model: NGramModel
    eval_model: NGramModel


def keyword_variants(word: str) -> list[str]:
    """Up to two real-looking inflections that keep the keyword's stem."""
    if word.endswith("e"):
        candidates = (word + "s", word + "d", word[:-1] + "ing")
    else:
        candidates = (word + "s", word + "es", word + "ed", word + "ing")
    out = []
    for form in candidates:
        if stem(form) == stem(word) and stem(stem(form)) == stem(form):
            out.append(form)
        if len(out) == 2:
            break
    return out


def build_wordlist() -> list[str]:
    """1000 words, common half first, keyword pool second."""
    ctx_words = [w for ctx, _ in THEMES.values() for w in ctx]
    keywords = [w for _, kws in THEMES.values() for w in kws]
    used = set(GLUE) | set(ctx_words) | set(keywords)
    filler = []
    for w in _FILLER_RAW:
        if w not in used and w.isalpha():
            filler.append(w)
            used.add(w)
    head = GLUE + ctx_words + filler
    if len(head) < 500:
        raise AssertionError(f"common half has only {len(head)} words")
    head = head[:500]
    assert len(set(head)) == 500
    assert len(set(keywords)) == 500, f"{len(set(keywords))} keywords"
    assert not set(keywords) & STOPWORDS
    assert not set(keywords) & set(head)
    return head + keywords


def build_corpus(seed: int = 7, n_lines: int = 16000) -> list[str]:
    """Themed sentences plus generic glue: keywords are rare and always
    follow a context word of their own theme."""
    rng = np.random.default_rng(seed)
    wordlist = build_wordlist()
    filler = [w for w in wordlist[:500] if w not in GLUE]
    theme_items = list(THEMES.values())
    variant_map = {kw: keyword_variants(kw) for _, kws in theme_items for kw in kws}
    lines = []
    for _ in range(n_lines):
        if rng.random() < 0.8:
            ctx_words, kws = theme_items[int(rng.integers(len(theme_items)))]
            length = int(rng.integers(9, 15))
            tokens: list[str] = []
            while len(tokens) < length:
                r = rng.random()
                if r < 0.32:
                    tokens.append(GLUE[int(rng.integers(len(GLUE)))])
                elif r < 0.94 or not tokens or tokens[-1] not in ctx_words:
                    tokens.append(ctx_words[int(rng.integers(len(ctx_words)))])
                else:
                    kw = kws[int(rng.integers(len(kws)))]
                    forms = [kw] + variant_map[kw]
                    weights = [0.7] + [0.3 / len(variant_map[kw])] * len(
                        variant_map[kw]
                    ) if variant_map[kw] else [1.0]
                    tokens.append(forms[int(rng.choice(len(forms), p=weights))])
        else:
            length = int(rng.integers(8, 14))
            tokens = [
                GLUE[int(rng.integers(len(GLUE)))]
                if rng.random() < 0.45
                else filler[int(rng.integers(len(filler)))]
                for _ in range(length)
            ]
        lines.append(" ".join(tokens))
    # Coverage pass: every keyword, variant, context, glue and filler word
    # appears at least once, keywords still preceded by their context words.
    for ctx_words, kws in theme_items:
        forms = []
        for kw in kws:
            forms.append(kw)
            forms.extend(variant_map[kw])
        for i in range(0, len(forms), 4):
            chunk = forms[i : i + 4]
            parts = []
            for j, form in enumerate(chunk):
                parts.append(ctx_words[(i + j) % len(ctx_words)])
                parts.append(form)
            lines.append(" ".join(parts))
    extra = GLUE + filler
    for i in range(0, len(extra), 10):
        lines.append(" ".join(extra[i : i + 10]))
    return lines


def build_embeddings(seed: int = 11) -> EmbeddingTable:
    """Theme-structured vectors in an 80-d space.

    Themes occupy an orthonormal 64-d subspace; unrelated (glue, filler)
    words live in the remaining 16 dims, so their similarity to any themed
    word is exactly zero.
    """
    rng = np.random.default_rng(seed)
    theme_dim, func_dim = 64, 16
    names = list(THEMES)
    centers, _ = np.linalg.qr(rng.normal(size=(theme_dim, len(names))))

    def unit(v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    entries: dict[str, np.ndarray] = {}

    def put_theme_vec(word: str, vec64: np.ndarray) -> None:
        entries[word] = np.concatenate([unit(vec64), np.zeros(func_dim)])

    for t_idx, name in enumerate(names):
        center = centers[:, t_idx]
        ctx_words, kws = THEMES[name]
        for word in ctx_words:
            put_theme_vec(word, 0.60 * center + 0.80 * unit(rng.normal(size=theme_dim)))
        for kw in kws:
            kw_vec = 0.67 * center + 0.74 * unit(rng.normal(size=theme_dim))
            put_theme_vec(kw, kw_vec)
            for form in keyword_variants(kw):
                put_theme_vec(form, unit(kw_vec) + 0.12 * unit(rng.normal(size=theme_dim)))

    wordlist = build_wordlist()
    for word in wordlist[:500]:
        if word not in entries:
            vec = np.concatenate(
                [np.zeros(theme_dim), unit(rng.normal(size=func_dim))]
            )
            entries[word] = vec
    return EmbeddingTable(dim=theme_dim + func_dim, entries=entries)


def build_world(seed: int = 7, n_lines: int = 16000) -> ToyWorld:
    lines = build_corpus(seed=seed, n_lines=n_lines)
    token_lines = [tokenize(line) for line in lines]
    vocabulary = build_vocabulary(token_lines)
    sequences = [
        [vocabulary.bos_id, *[vocabulary.id_of(t) for t in toks], vocabulary.eos_id]
        for toks in token_lines
    ]
    model = train_ngram(sequences, order=2, smoothing_k=0.0002,
                        vocabulary=vocabulary)
    eval_model = train_ngram(sequences, order=1, smoothing_k=0.0002,
                             vocabulary=vocabulary)
    return ToyWorld(
        wordlist=build_wordlist(),
        stopwords=set(STOPWORDS),
        variants={kw: keyword_variants(kw)
                  for _, kws in THEMES.values() for kw in kws},
        corpus_lines=lines,
        table=build_embeddings(),
        vocabulary=vocabulary,
        model=model,
        eval_model=eval_model,
    )


def write_fixtures(
    outdir, seed: int = 7, n_lines: int = 16000, world: ToyWorld | None = None
) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if world is None:
        world = build_world(seed=seed, n_lines=n_lines)
    paths = {
        "wordlist": outdir / "wordlist_1k.txt",
        "stopwords": outdir / "stopwords.txt",
        "corpus": outdir / "corpus.txt",
        "embeddings": outdir / "embeddings.txt",
        "lm": outdir / "lm_order2.json",
        "eval_lm": outdir / "lm_order1.json",
    }
    paths["wordlist"].write_text("\n".join(world.wordlist) + "\n")
    paths["stopwords"].write_text("\n".join(sorted(world.stopwords)) + "\n")
    paths["corpus"].write_text("\n".join(world.corpus_lines) + "\n")
    save_embeddings(world.table, paths["embeddings"])
    world.model.save(paths["lm"])
    world.eval_model.save(paths["eval_lm"])
    return paths


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--lines", type=int, default=16000)
    ns = ap.parse_args()
    for name, p in write_fixtures(ns.out, ns.seed, ns.lines).items():
        print(f"{name}: {p}")

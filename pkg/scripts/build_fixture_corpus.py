#!/usr/bin/env python3
"""Regenerate the miniature category corpus shipped under socialcred/data/corpus.

Each category directory holds six plain-text documents sampled from a
per-category vocabulary. Vocabularies are pairwise disjoint so centroid
behavior in tests is analytically predictable. Deterministic; safe to
rerun (output is stable).
"""

import random
import shutil
import zlib
from pathlib import Path

VOCAB = {
    "automotive": [
        "engine", "turbo", "sedan", "coupe", "diesel", "horsepower", "chassis", "brakes",
        "garage", "mechanic", "torque", "convertible", "mileage", "dashboard", "headlight",
        "transmission", "roadster", "motorway", "gearbox", "exhaust", "spoiler", "tailgate",
        "odometer", "carburetor",
    ],
    "art and entertainment": [
        "gallery", "sculpture", "cinema", "theatre", "premiere", "mural", "portrait", "canvas",
        "exhibition", "screenplay", "boxoffice", "matinee", "easel", "animation", "sitcom",
        "celebrity", "blockbuster", "choreography", "improv", "puppetry", "filmmaker", "opera",
        "documentary", "vaudeville",
    ],
    "business and industrial": [
        "merger", "acquisition", "logistics", "manufacturing", "revenue", "startup",
        "procurement", "warehouse", "invoice", "shareholder", "quarterly", "entrepreneur",
        "factory", "conglomerate", "payroll", "audit", "franchise", "wholesale", "commerce",
        "tariff", "outsourcing", "margins", "recession", "supplier",
    ],
    "education": [
        "classroom", "curriculum", "teacher", "homework", "semester", "tuition", "lecture",
        "scholarship", "diploma", "kindergarten", "textbook", "exam", "literacy", "campus",
        "professor", "syllabus", "graduation", "enrollment", "tutoring", "pedagogy",
        "dissertation", "faculty", "undergraduate", "preschool",
    ],
    "finance": [
        "dividend", "portfolio", "equity", "bonds", "inflation", "mortgage", "hedge",
        "liquidity", "futures", "brokerage", "savings", "annuity", "treasury", "valuation",
        "arbitrage", "collateral", "derivatives", "pension", "refinance", "stocks", "ledger",
        "yield", "solvency", "custodian",
    ],
    "food and drink": [
        "recipe", "delicious", "restaurant", "chef", "baking", "flavor", "cuisine", "dessert",
        "appetizer", "roasted", "sourdough", "espresso", "vineyard", "brunch", "marinade",
        "gourmet", "pastry", "simmer", "umami", "barista", "brewery", "cocktail", "seasoning",
        "saute",
    ],
    "games": [
        "gameplay", "console", "multiplayer", "quest", "arcade", "puzzle", "joystick",
        "leaderboard", "avatar", "dungeon", "respawn", "speedrun", "esports", "sandbox",
        "platformer", "roguelike", "checkpoint", "minigame", "lootbox", "modding", "tutorial",
        "glitch", "campaign", "highscore",
    ],
    "health and fitness": [
        "workout", "cardio", "protein", "yoga", "marathon", "nutrition", "calories", "wellness",
        "gym", "stamina", "pilates", "hydration", "metabolism", "stretching", "treadmill",
        "deadlift", "vitamins", "endurance", "mindfulness", "physiotherapy", "jogging",
        "kettlebell", "aerobics", "posture",
    ],
    "law and government": [
        "legislation", "senate", "verdict", "statute", "judiciary", "parliament", "attorney",
        "regulation", "amendment", "courtroom", "ballot", "constituency", "ordinance",
        "plaintiff", "subpoena", "governance", "referendum", "litigation", "magistrate",
        "municipal", "lobbying", "tribunal", "decree", "electorate",
    ],
    "music": [
        "melody", "concert", "guitar", "album", "chorus", "orchestra", "tempo", "vinyl",
        "acoustic", "drummer", "symphony", "playlist", "harmony", "bassline", "falsetto",
        "encore", "songwriter", "remix", "crescendo", "piano", "lyrics", "ballad", "quartet",
        "soundtrack",
    ],
    "news": [
        "headline", "journalist", "editorial", "correspondent", "newsroom", "bulletin",
        "coverage", "dispatch", "frontpage", "newswire", "columnist", "scoop", "broadcast",
        "byline", "masthead", "exclusive", "reportage", "tabloid", "wireservice", "datelines",
        "newsprint", "stringer", "oped", "retraction",
    ],
    "pets": [
        "puppy", "kitten", "veterinarian", "leash", "grooming", "aquarium", "hamster",
        "adoption", "kennel", "whiskers", "pawprint", "terrier", "parrot", "feline", "canine",
        "litterbox", "obedience", "vaccination", "shelter", "bunny", "goldfish", "chewtoy",
        "catnip", "purring",
    ],
    "religion": [
        "worship", "scripture", "prayer", "temple", "congregation", "sermon", "pilgrimage",
        "monastery", "theology", "sacred", "ritual", "faith", "chapel", "clergy", "gospel",
        "hymn", "parish", "covenant", "liturgy", "blessing", "monk", "shrine", "sabbath",
        "devotion",
    ],
    "science": [
        "experiment", "hypothesis", "laboratory", "quantum", "molecule", "genome", "photon",
        "microscope", "catalyst", "neuron", "astronomy", "physics", "chemistry", "biology",
        "telescope", "particle", "enzyme", "fossil", "geology", "thermodynamics",
        "spectroscopy", "electron", "isotope", "botany",
    ],
    "shopping": [
        "discount", "coupon", "checkout", "retail", "bargain", "storefront", "cashback",
        "voucher", "clearance", "shopper", "boutique", "refund", "catalog", "wishlist",
        "giftcard", "marketplace", "receipt", "haul", "outlet", "layaway", "pricetag",
        "basket", "errands", "restock",
    ],
    "society": [
        "community", "culture", "tradition", "diversity", "heritage", "volunteering",
        "charity", "activism", "equality", "neighborhood", "citizenship", "demographics",
        "urbanization", "folklore", "customs", "generations", "solidarity", "wellbeing",
        "inclusion", "philanthropy", "grassroots", "civic", "kinship", "migration",
    ],
    "sports": [
        "tournament", "championship", "goalkeeper", "stadium", "playoffs", "athlete", "coach",
        "referee", "dribble", "homerun", "touchdown", "slamdunk", "penalty", "innings",
        "sprint", "relay", "podium", "league", "scoreboard", "halftime", "freekick", "wicket",
        "batsman", "matchday",
    ],
    "style and fashion": [
        "runway", "couture", "wardrobe", "stiletto", "denim", "accessories", "tailoring",
        "chic", "vintage", "lookbook", "makeup", "eyeliner", "fabric", "silhouette",
        "trendsetter", "atelier", "catwalk", "knitwear", "streetwear", "moodboard", "palette",
        "corduroy", "neckline", "blazer",
    ],
    "technology and computing": [
        "software", "algorithm", "database", "compiler", "kernel", "processor", "encryption",
        "firmware", "router", "debugging", "frontend", "backend", "opensource", "laptop",
        "server", "cybersecurity", "programming", "bandwidth", "browser", "gadget", "silicon",
        "robotics", "automation", "devops",
    ],
    "travel": [
        "itinerary", "passport", "airline", "hostel", "sightseeing", "backpacking", "layover",
        "resort", "souvenir", "cruise", "visa", "jetlag", "boarding", "destination",
        "excursion", "airfare", "beachfront", "safari", "roadtrip", "luggage", "wanderlust",
        "campsite", "ferry", "trek",
    ],
}

DOCS_PER_CATEGORY = 6
TOKENS_PER_DOC = 50


def main() -> None:
    all_words = [w for words in VOCAB.values() for w in words]
    assert len(all_words) == len(set(all_words)), "vocabulary pools must be disjoint"

    out = Path(__file__).resolve().parents[1] / "src" / "socialcred" / "data" / "corpus"
    if out.exists():
        shutil.rmtree(out)
    for category, words in VOCAB.items():
        rng = random.Random(zlib.crc32(category.encode()))
        cat_dir = out / category
        cat_dir.mkdir(parents=True)
        for i in range(DOCS_PER_CATEGORY):
            tokens = rng.choices(words, k=TOKENS_PER_DOC)
            lines = [" ".join(tokens[j : j + 10]) for j in range(0, len(tokens), 10)]
            (cat_dir / f"doc{i:02d}.txt").write_text("\n".join(lines) + "\n", "utf-8")
    print(f"wrote {len(VOCAB)} categories under {out}")


if __name__ == "__main__":
    main()

"""Seeded synthetic filings and corpora for tests, demos and acceptance runs.

Run ``python -m proddiv.synth OUTDIR`` to write the ten-year demo corpus
(manifest plus raw filings) that ``proddiv run-all`` can consume.
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .textprep import TokenizedDoc

TOPICS = {
    "autos": (3711, "car cars truck trucks vehicle vehicles engine engines transmission transmissions chassis "
              "brake brakes axle axles sedan sedans dealer dealers bumper tire tires pickup minivan wheel wheels "
              "gearbox ignition radiator muffler windshield headlamp steering suspension piston pistons coupe "
              "convertible horsepower fleet"),
    "software": (7372, "software application applications license licenses platform platforms database databases "
                 "server servers cloud subscription subscriptions developer developers code module modules "
                 "interface analytics encryption browser compiler debugger middleware workflow dashboard download "
                 "upgrade upgrades patch algorithm spreadsheet firewall backup"),
    "pharma": (2834, "drug drugs compound compounds molecule molecules tablet tablets capsule capsules dose dosage "
               "vaccine vaccines antibody antibodies therapy therapies oncology patient patients clinician trial "
               "trials pharmacy prescription generic generics biologic enzyme inhibitor receptor formulation "
               "placebo pathogen syringe insulin"),
    "oil": (1311, "oil crude gas reservoir reservoirs well wells drilling rig rigs pipeline pipelines barrel "
            "barrels acreage lease leases basin basins shale refinery refineries wellhead hydrocarbon hydrocarbons "
            "condensate propane butane seismic geologist derrick offshore drillship petroleum"),
    "apparel": (5651, "apparel clothing garment garments shirt shirts dress dresses jacket jackets denim jeans "
                "sweater sweaters footwear shoe shoes sneaker boutique boutiques mall malls fashion accessory "
                "accessories handbag handbags outlet outlets merchandise wardrobe fabric fabrics hosiery"),
    "airlines": (4512, "airline airlines aircraft airplane airplanes flight flights passenger passengers airport "
                 "airports hub hubs route routes fare fares pilot pilots cabin cockpit runway terminal jetliner "
                 "baggage luggage ticket tickets mileage carrier carriers turboprop hangar"),
    "restaurants": (5812, "restaurant restaurants menu menus diner diners meal meals burger burgers sandwich "
                    "sandwiches pizza chicken beverage beverages kitchen kitchens franchisee franchisees dining "
                    "chef chefs breakfast lunch dinner dessert desserts salad salads appetizer waiter"),
    "semis": (3674, "semiconductor semiconductors chip chips wafer wafers transistor transistors foundry foundries "
              "lithography silicon microprocessor microprocessors memory circuit circuits substrate substrates "
              "diode diodes etching packaging resistor capacitor capacitors logic processor processors nanometer "
              "fabrication"),
}
TOPIC_ORDER = list(TOPICS)

GENERIC = ("company companies customer customers product products market markets competition competitor "
           "competitors employee employees operation operations revenue revenues segment segments supplier "
           "suppliers distribution facility facilities service services brand brands strategy technology "
           "quality price prices sales").split()

GLUE = ("the our and of in to for with we are by its from as on which these such other also that is "
        "principal primarily through certain each").split()

FINANCE_WORDS = ("loan loans deposit deposits mortgage mortgages borrower borrowers branch branches lender "
                 "savings checking credit underwriting").split()


def _sentence(rng, words, length):
    picks = [words[i] for i in rng.integers(0, len(words), length)]
    out = []
    for w in picks:
        out.append(w)
        if rng.random() < 0.6:
            out.append(GLUE[rng.integers(len(GLUE))])
    text = " ".join(out)
    return text[0].upper() + text[1:] + "."


def business_body(rng, topic_words, n_chars=1800, noise_words=(), noise=0.05):
    """Paragraphs mixing topic nouns, generic business nouns and glue words."""
    pool = list(topic_words) * 3 + GENERIC
    paras, size = [], 0
    while size < n_chars:
        sents = []
        for _ in range(int(rng.integers(3, 6))):
            words = pool
            if noise_words and rng.random() < noise:
                words = list(noise_words)
            sents.append(_sentence(rng, words, int(rng.integers(8, 16))))
        para = " ".join(sents)
        paras.append(para)
        size += len(para)
    return "\n\n".join(paras)


def _filler(rng, n_chars=600):
    return business_body(rng, GENERIC, n_chars)


_TOC = """TABLE OF CONTENTS
PART I
Item 1. Business .................. 3
Item 1A. Risk Factors .............. 9
Item 2. Properties ................. 14
Item 3. Legal Proceedings .......... 15
PART II
Item 7. Management's Discussion .... 20
"""


def render_filing(rng, body, style="standard", risk=True, tail=True):
    """Wrap a business body in one of several 10-K layouts."""
    risk_text = _sentence(rng, GENERIC, 30) + "\n" + _sentence(rng, GENERIC, 25)
    parts = []
    if style == "standard":
        parts += [_TOC, "PART I", "ITEM 1. BUSINESS", body]
        if risk:
            parts += ["ITEM 1A. RISK FACTORS", risk_text]
        parts += ["ITEM 2. PROPERTIES", _filler(rng)]
    elif style == "title":
        parts += ["Part I", "Item 1 - Business", body]
        if risk:
            parts += ["Risk Factors", risk_text]
        parts += ["Item 2 - Properties", _filler(rng)]
    elif style == "part_item":
        parts += ["PART I, ITEM 1: DESCRIPTION OF BUSINESS", body, "ITEM 2: DESCRIPTION OF PROPERTY", _filler(rng)]
    elif style == "inline":
        first, _, rest = body.partition("\n\n")
        parts += [_TOC, "Item 1. Business. " + first, rest]
        if risk:
            parts += ["Item 1A. Risk Factors", risk_text]
        parts += ["Item 2. Properties", _filler(rng)]
    elif style == "keyword":
        parts += ["ANNUAL REPORT", "BUSINESS", body, "ITEM 2. PROPERTIES", _filler(rng)]
    elif style == "no_business":
        parts += ["PART II", "ITEM 5. MARKET FOR REGISTRANT'S COMMON EQUITY", _filler(rng),
                  "ITEM 7. MANAGEMENT'S DISCUSSION AND ANALYSIS", _filler(rng, 1500)]
    elif style == "combined":
        parts += ["PART I", "Items 1 and 2. Business and Properties", body]
    elif style == "nonstandard":
        parts += ["I. OUR COMPANY AND WHAT WE DO", body, "II. WHERE WE OPERATE", _filler(rng)]
    else:
        raise ValueError(f"unknown filing style {style!r}")
    if tail:
        parts += ["ITEM 3. LEGAL PROCEEDINGS", _filler(rng, 300)]
    return "\n\n".join(parts) + "\n"


@dataclass
class SyntheticFiling:
    name: str
    text: str
    parseable: bool  # by construction
    style: str


def extraction_fixture(n=100, seed=0) -> list[SyntheticFiling]:
    """Filings with a designed 12% share lacking a usable Business section.

    Of each hundred: 9 have no Business section at all, one is too short,
    one merges Business and Properties under an "Items 1 and 2" heading and
    one uses headings no rule recognises.
    """
    rng = np.random.default_rng(seed)
    broken = ["no_business"] * 9 + ["short", "combined", "nonstandard"]
    good = ["standard", "title", "part_item", "inline", "keyword"]
    n_broken = round(n * 0.12)
    styles = [broken[i % len(broken)] for i in range(n_broken)]
    styles += [good[i % len(good)] for i in range(n - n_broken)]
    rng.shuffle(styles)
    out = []
    for i, style in enumerate(styles):
        topic = TOPIC_ORDER[int(rng.integers(len(TOPIC_ORDER)))]
        words = TOPICS[topic][1].split()
        if style == "short":
            body = business_body(rng, words, n_chars=300)
            text = render_filing(rng, body, "standard", risk=False)
        else:
            body = business_body(rng, words, n_chars=int(rng.integers(1500, 4000)))
            text = render_filing(rng, body, style, risk=bool(rng.random() < 0.5))
        parseable = style in good
        out.append(SyntheticFiling(f"filing_{i:03d}", text, parseable, style))
    return out


def two_topic_corpus(n_docs=40, length=60, vocab=30, seed=0) -> list[TokenizedDoc]:
    """Alternating documents drawn from two disjoint topic vocabularies."""
    rng = np.random.default_rng(seed)
    a = TOPICS["autos"][1].split()[:vocab]
    b = TOPICS["pharma"][1].split()[:vocab]
    docs = []
    for d in range(n_docs):
        words = a if d % 2 == 0 else b
        docs.append(TokenizedDoc(d + 1, 2000, [words[i] for i in rng.integers(0, len(words), length)]))
    return docs


def topic_schedule(n_years, start_topics=8, end_topics=4):
    """Number of active topics per year, shrinking linearly and rounded."""
    if n_years == 1:
        return [start_topics]
    return [round(start_topics - (start_topics - end_topics) * t / (n_years - 1)) for t in range(n_years)]


def write_corpus(out_dir, years, firms_per_topic=4, start_topics=8, end_topics=4, seed=0,
                 extras=True, body_chars=(1400, 2600)) -> Path:
    """Write raw filings and a manifest whose topic count shrinks over the years.

    Topic ``k`` maps to a fixed SIC code and its firms keep their CIKs across
    years. With ``extras`` the manifest also carries one financial firm, one
    record not prefiltered upstream and one filing without a Business section
    per year, all of which the pipeline must drop.
    """
    out_dir = Path(out_dir)
    (out_dir / "filings").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    years = list(years)
    schedule = topic_schedule(len(years), start_topics, end_topics)
    styles = ["standard", "title", "part_item", "inline", "keyword"]
    # each firm draws from its own persistent subset of the topic vocabulary
    firm_words = {}
    for k, topic in enumerate(TOPIC_ORDER[:start_topics]):
        words = TOPICS[topic][1].split()
        for f in range(firms_per_topic):
            take = rng.permutation(len(words))[: int(0.7 * len(words))]
            firm_words[(k, f)] = [words[i] for i in sorted(take)]

    rows = []
    for year, n_topics in zip(years, schedule):
        for k in range(n_topics):
            topic = TOPIC_ORDER[k]
            sic = TOPICS[topic][0]
            noise = [w for j in range(start_topics) if j != k for w in TOPICS[TOPIC_ORDER[j]][1].split()]
            for f in range(firms_per_topic):
                cik = 1000 + 10 * k + f
                body = business_body(rng, firm_words[(k, f)], int(rng.integers(*body_chars)), noise, 0.03)
                style = styles[(cik + year) % len(styles)]
                rel = f"filings/{cik}_{year}.txt"
                (out_dir / rel).write_text(render_filing(rng, body, style, risk=bool(rng.random() < 0.5)))
                rows.append((cik, year, "10-K", sic, rel, 1))
        if extras:
            bank = 9001
            rel = f"filings/{bank}_{year}.txt"
            (out_dir / rel).write_text(render_filing(rng, business_body(rng, FINANCE_WORDS, 1500), "standard"))
            rows.append((bank, year, "10-K", 6021, rel, 1))
            lagged = 9002
            rel = f"filings/{lagged}_{year}.txt"
            (out_dir / rel).write_text(render_filing(rng, business_body(rng, firm_words[(0, 0)], 1500), "standard"))
            rows.append((lagged, year, "10-K405", 3711, rel, 0))
            empty = 9003
            rel = f"filings/{empty}_{year}.txt"
            (out_dir / rel).write_text(render_filing(rng, "", "no_business"))
            rows.append((empty, year, "10-KSB", 3674, rel, 1))

    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cik", "year", "form_type", "sic_code", "text_path", "prefiltered"])
        w.writerows(rows)
    return manifest


def main(argv=None):
    ap = argparse.ArgumentParser(prog="python -m proddiv.synth", description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--years", default="2008:2017", help="inclusive range A:B")
    ap.add_argument("--firms-per-topic", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    a, b = (int(x) for x in args.years.split(":"))
    print(write_corpus(args.out_dir, range(a, b + 1), args.firms_per_topic, seed=args.seed))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regenerates the bundled fixtures. Output is deterministic.

    python3 crates/core/fixtures/generate.py

Writes next to this script:
  gazetteer.tsv        GeoNames-layout dump, 32 allowlisted countries plus noise rows
  covid_terms.txt      fixture COVID lexicon
  education_terms.txt  fixture education lexicon
  corpus.ndjson        200 lines: valid, duplicate, malformed and out-of-window records
  cases.csv            daily new cases with a gap day, a negative row and noise rows
  model_d8.txt         three-head model for the d=8 test embedder
  model_d4.txt         three-head model matching embeddings_d4.txt
  embeddings_d4.txt    embeddings for three corpus ids
  geo_texts.txt        100 texts for location resolution
  run.conf             pipeline config tying the above together
"""

import datetime as dt
import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
rng = random.Random(20200323)

ALLOWED = (
    "AU BE BR CA CL CN EC FR DE IN IR IE IT JP MX NL NZ PK PE PT QA RU SA SG KR ES SE CH TR AE GB US"
).split()

# (country, name, population, alternates)
REAL = [
    ("US", "New York", 8336817, "NYC"), ("US", "Los Angeles", 3979576, ""), ("US", "Chicago", 2693976, ""),
    ("US", "Houston", 2320268, ""), ("US", "Boston", 617594, ""), ("US", "Seattle", 737015, ""),
    ("US", "Springfield", 116250, ""), ("US", "Birmingham", 212237, ""), ("US", "Cambridge", 105162, ""),
    ("US", "Paris", 25171, ""), ("US", "London", 37904, ""), ("US", "Richmond", 226610, ""),
    ("US", "Portland", 652503, ""), ("US", "Athens", 127315, ""), ("US", "Manchester", 112525, ""),
    ("US", "Dublin", 49328, ""), ("US", "Victoria", 67015, ""), ("US", "Mobile", 188720, ""),
    ("US", "Reading", 88375, ""), ("US", "Saint Petersburg", 265351, "St Petersburg"),
    ("US", "Eastwick", 20000, ""),
    ("GB", "London", 8961989, "Londres,Londra"), ("GB", "Birmingham", 1141816, ""), ("GB", "Manchester", 553230, ""),
    ("GB", "Cambridge", 145818, ""), ("GB", "Springfield", 1500, ""), ("GB", "Perth", 47430, ""),
    ("GB", "Reading", 318014, ""), ("GB", "Bath", 88859, ""), ("GB", "Oxford", 152450, ""),
    ("GB", "Leeds", 793139, ""), ("GB", "Glasgow", 635640, ""), ("GB", "Richmond", 20000, ""),
    ("GB", "York", 153717, ""), ("GB", "Westbury", 20000, ""),
    ("CA", "Toronto", 2731571, ""), ("CA", "Montreal", 1762949, "Montréal"), ("CA", "Vancouver", 631486, ""),
    ("CA", "London", 383822, ""), ("CA", "Victoria", 92141, ""), ("CA", "Sydney", 31597, ""),
    ("CA", "Cambridge", 129920, ""), ("CA", "Halifax", 403131, ""), ("CA", "Richmond", 198309, ""),
    ("CA", "Perth", 5930, ""),
    ("AU", "Sydney", 5312163, ""), ("AU", "Melbourne", 5078193, ""), ("AU", "Perth", 2059484, ""),
    ("AU", "Brisbane", 2514184, ""), ("AU", "Adelaide", 1345777, ""), ("AU", "Newcastle", 322278, ""),
    ("AU", "Twinton", 500, ""),
    ("NZ", "Auckland", 1657200, ""), ("NZ", "Wellington", 215100, ""), ("NZ", "Christchurch", 381500, ""),
    ("NZ", "Hamilton", 169300, ""), ("NZ", "Twinton", 500, ""), ("NZ", "Dunedin", 134100, ""),
    ("IN", "Mumbai", 12442373, "Bombay"), ("IN", "Delhi", 11034555, "New Delhi"),
    ("IN", "Bengaluru", 8443675, "Bangalore"), ("IN", "Hyderabad", 6809970, ""),
    ("IN", "Chennai", 4646732, "Madras"), ("IN", "Kolkata", 4496694, "Calcutta"), ("IN", "Pune", 3124458, ""),
    ("IN", "Lucknow", 2817105, ""),
    ("PK", "Karachi", 14910352, ""), ("PK", "Lahore", 11126285, ""), ("PK", "Islamabad", 1014825, ""),
    ("PK", "Hyderabad", 1732693, ""), ("PK", "Peshawar", 1970042, ""), ("PK", "Faisalabad", 3203846, ""),
    ("PK", "Multan", 1871843, ""),
    ("CN", "Beijing", 21542000, "Peking"), ("CN", "Shanghai", 24183300, ""), ("CN", "Wuhan", 11081000, ""),
    ("CN", "Guangzhou", 13858700, ""), ("CN", "Shenzhen", 12528300, ""), ("CN", "Chengdu", 16330000, ""),
    ("IT", "Rome", 2872800, "Roma"), ("IT", "Milan", 1352000, "Milano"), ("IT", "Naples", 959470, "Napoli"),
    ("IT", "Turin", 870952, "Torino"), ("IT", "Florence", 382258, "Firenze"), ("IT", "Bergamo", 120923, ""),
    ("IT", "Venice", 261905, "Venezia"),
    ("SE", "Stockholm", 975551, ""), ("SE", "Gothenburg", 579281, "Göteborg"), ("SE", "Malmö", 344166, "Malmo"),
    ("SE", "Uppsala", 177074, ""),
    ("JP", "Tokyo", 13960000, ""), ("JP", "Osaka", 2691000, ""), ("JP", "Kyoto", 1475000, ""),
    ("JP", "Yokohama", 3749000, ""), ("JP", "Sapporo", 1952000, ""), ("JP", "Nagoya", 2296000, ""),
    ("BR", "São Paulo", 12325232, "Sao Paulo"), ("BR", "Rio de Janeiro", 6747815, ""),
    ("BR", "Brasília", 3015268, "Brasilia"), ("BR", "Salvador", 2886698, ""), ("BR", "Manaus", 2219580, ""),
    ("BR", "Recife", 1653461, ""),
    ("ES", "Madrid", 3223334, ""), ("ES", "Barcelona", 1620343, ""), ("ES", "Valencia", 791413, ""),
    ("ES", "Seville", 688711, "Sevilla"), ("ES", "Córdoba", 325708, "Cordoba"), ("ES", "Granada", 232208, ""),
    ("MX", "Mexico City", 8918653, "Ciudad de Mexico"), ("MX", "Guadalajara", 1495182, ""),
    ("MX", "Monterrey", 1135512, ""), ("MX", "Puebla", 1576259, ""), ("MX", "Córdoba", 204374, "Cordoba"),
    ("MX", "Tijuana", 1810645, ""),
    ("CL", "Santiago", 5614000, ""), ("CL", "Valparaíso", 296655, "Valparaiso"),
    ("CL", "Concepción", 223574, "Concepcion"),
    ("BE", "Brussels", 1208542, "Bruxelles"), ("BE", "Antwerp", 529247, "Antwerpen"), ("BE", "Ghent", 262219, ""),
    ("BE", "Liège", 197355, "Liege"),
    ("EC", "Quito", 2011388, ""), ("EC", "Guayaquil", 2698077, ""), ("EC", "Cuenca", 329928, ""),
    ("FR", "Paris", 2148271, ""), ("FR", "Marseille", 861635, ""), ("FR", "Lyon", 513275, ""),
    ("FR", "Toulouse", 479553, ""), ("FR", "Nice", 342522, ""), ("FR", "Bordeaux", 257068, ""),
    ("FR", "Lille", 232787, ""),
    ("DE", "Berlin", 3644826, ""), ("DE", "Hamburg", 1841179, ""), ("DE", "Munich", 1471508, "München"),
    ("DE", "Cologne", 1085664, "Köln"), ("DE", "Frankfurt", 753056, ""),
    ("IR", "Tehran", 8693706, ""), ("IR", "Mashhad", 3001184, ""), ("IR", "Isfahan", 1961260, "Esfahan"),
    ("IR", "Shiraz", 1565572, ""),
    ("IE", "Dublin", 1173179, ""), ("IE", "Cork", 210000, ""), ("IE", "Galway", 79934, ""),
    ("IE", "Limerick", 94192, ""),
    ("NL", "Amsterdam", 872680, ""), ("NL", "Rotterdam", 651446, ""), ("NL", "The Hague", 545838, "Den Haag"),
    ("NL", "Utrecht", 357179, ""),
    ("PE", "Lima", 9751717, ""), ("PE", "Arequipa", 1008290, ""), ("PE", "Cusco", 428450, "Cuzco"),
    ("PT", "Lisbon", 504718, "Lisboa"), ("PT", "Porto", 237591, ""), ("PT", "Braga", 193333, ""),
    ("QA", "Doha", 1186023, ""), ("QA", "Al Rayyan", 605712, ""),
    ("RU", "Moscow", 12506468, "Moskva"), ("RU", "Saint Petersburg", 5383890, "St Petersburg"),
    ("RU", "Novosibirsk", 1625631, ""),
    ("SA", "Riyadh", 7676654, ""), ("SA", "Jeddah", 4697000, ""), ("SA", "Mecca", 2042000, "Makkah"),
    ("SG", "Singapore", 5638700, ""),
    ("KR", "Seoul", 9776000, ""), ("KR", "Busan", 3429000, ""), ("KR", "Incheon", 2957000, ""),
    ("KR", "Daegu", 2432000, ""),
    ("CH", "Zurich", 402762, "Zürich"), ("CH", "Geneva", 201818, "Genève"), ("CH", "Basel", 177827, ""),
    ("CH", "Bern", 133883, ""),
    ("TR", "Istanbul", 15462452, ""), ("TR", "Ankara", 5663322, ""), ("TR", "Izmir", 4367251, ""),
    ("AE", "Dubai", 3331420, ""), ("AE", "Abu Dhabi", 1483000, ""), ("AE", "Sharjah", 1274749, ""),
]

# Rows that never survive filtering: outside the allowlist or not a populated/admin class.
OUTSIDE = [
    ("FI", "Helsinki", 631695, "P"), ("NO", "Oslo", 693494, "P"), ("AR", "Córdoba", 1329604, "P"),
    ("VE", "Valencia", 1484430, "P"), ("SC", "Victoria", 26450, "P"), ("AR", "Rosario", 1193605, "P"),
    ("GR", "Athens", 664046, "P"), ("EG", "Cairo", 9500000, "P"),
]
HCLASS = [
    ("GB", "Loch Ness", 0), ("CH", "Lake Geneva", 0), ("US", "Lake Tahoe", 0), ("CA", "Lake Louise", 0),
    ("AU", "Murray River", 0), ("DE", "Rhine Valley", 0),
]

FILLER = (
    "today really think people going back next week hard news still everyone home time stay safe again "
    "long day plans kids parents worried tired feel proud great terrible miss friends lovely finally busy "
    "weird quiet morning evening honestly literally"
).split()

PREFIX = ("kel dun mar bro vel tor ash wil fen gar hol lin mor pen ros sel tam wex yar zel "
          "bram cor dra elm fal gol hask ilm jor kil lom nor orm quar rud sto").split()
SUFFIX = "wick ford by ton stead holm ville field mere burn dale gate".split()

COVID_TERMS = ["corona", "coronavirus", "covid", "pandemic", "sarscov2", "covid-19", "covid 19", "lockdown",
               "social distancing"]
EDU_TERMS = [
    "school", "schools", "school closures", "students", "student", "teachers", "teacher", "online learning",
    "distance learning", "remote learning", "online classes", "classes", "exams", "exam", "homeschooling",
    "homework", "university", "universities", "college", "campus", "graduation", "tuition", "lecture",
    "lectures", "semester", "curriculum", "kindergarten", "high school", "education", "learning", "zoom class",
    "pupils", "classroom", "e-learning", "grades", "syllabus", "faculty", "principal", "tutor", "dorm",
]


def synthetic_names():
    names = []
    for p in PREFIX:
        for s in SUFFIX:
            names.append((p + s).capitalize())
    rng.shuffle(names)
    return names


def gazetteer_rows():
    rows = []
    next_id = 1000001
    pool = synthetic_names()
    places = []  # (name, country, population) for text generation

    def row(name, country, pop, alt="", cls="P"):
        nonlocal next_id
        gid = next_id
        next_id += rng.randint(1, 9)
        pop_field = "" if pop is None else str(pop)
        fcode = {"P": "PPL", "A": "ADM1", "H": "LK"}[cls]
        cols = [str(gid), name, name, alt, "0.0", "0.0", cls, fcode, country, "", "", "", "", "",
                pop_field, "", "0", "UTC", "2020-01-01"]
        rows.append("\t".join(cols))
        return gid

    for country, name, pop, alt in REAL:
        row(name, country, pop, alt)
        places.append((name, country, pop))
    # Twelve synthetic towns per country; a few share names across countries.
    shared = pool[:6]
    pool = pool[6:]
    for i, country in enumerate(ALLOWED):
        for _ in range(12):
            name = pool.pop()
            pop = rng.choice([None, rng.randint(50, 90000)])
            cls = "A" if rng.random() < 0.1 else "P"
            row(name, country, pop, cls=cls)
            places.append((name, country, pop or 0))
        row(shared[i % 6], country, 1000 + 37 * i)
        places.append((shared[i % 6], country, 1000 + 37 * i))
    for country, name, pop, cls in OUTSIDE:
        row(name, country, pop, cls=cls)
    for country, name, pop in HCLASS:
        row(name, country, pop, cls="H")
    # Names too short or stoplisted once normalized.
    row("Ua", "FR", 300)
    row("The", "US", 400)
    # Malformed rows: skipped outside strict mode.
    rows.append("9999999\tBroken Row\tBroken Row")
    rows.append("notanumber\tBadId\tBadId\t\t0\t0\tP\tPPL\tUS\t\t\t\t\t\t10\t\t0\tUTC\t2020-01-01")
    return rows, places


def mention(name):
    """Surface variation a real tweet might use for a place name."""
    r = rng.random()
    if r < 0.15:
        return name.upper()
    if r < 0.25 and " " not in name:
        return "#" + name
    if r < 0.3:
        return name + "!"
    return name


def sentence(words):
    return " ".join(words)


def filler(n):
    return [rng.choice(FILLER) for _ in range(n)]


REPORT = ["US", "IN", "GB", "CN", "PK", "IT", "AU", "SE", "JP", "BR"]


def pick_place(places, report_bias=0.75):
    candidates = [p for p in places if p[1] in REPORT] if rng.random() < report_bias else places
    return rng.choice(candidates)[0]


SPECIAL_LOCATIONS = [
    "Springfield", "Hyderabad", "Perth", "London", "Cambridge", "Córdoba", "Cordoba", "Victoria", "Bombay",
    "Bangalore", "Sao Paulo", "São Paulo", "Rio de Janeiro", "New York", "York", "The Hague", "Twinton",
    "Montréal", "St. Petersburg", "Göteborg", "Den Haag", "New Delhi",
]


def topical_text(places):
    covid = rng.choice(["covid", "COVID-19", "Coronavirus", "pandemic", "corona", "#covid", "lockdown",
                        "social distancing", "covid 19", "SARSCoV2"])
    edu = rng.choice(["school", "schools", "students", "teachers", "online learning", "exams", "university",
                      "homeschooling", "classes", "#school", "distance learning", "graduation", "campus",
                      "high school", "e-learning", "zoom class"])
    words = filler(rng.randint(2, 6)) + [covid] + filler(rng.randint(1, 4)) + [edu] + filler(rng.randint(0, 5))
    r = rng.random()
    if r < 0.55:
        words.insert(rng.randint(0, len(words)), "in " + mention(pick_place(places)))
    elif r < 0.65:
        words.insert(rng.randint(0, len(words)), "from " + mention(rng.choice(SPECIAL_LOCATIONS)))
    elif r < 0.75:
        a, b = pick_place(places), pick_place(places)
        words += ["between", mention(a), "and", mention(b)]
    elif r < 0.8:
        words += ["https://example.com/" + pick_place(places).lower().replace(" ", "-")]
    elif r < 0.85:
        words += ["near", rng.choice(["Helsinki", "Oslo", "Loch Ness", "Reading", "Nice", "Bath", "Mobile"])]
    elif r < 0.9:
        words += ["Eastwick", "and", "Westbury"]
    rng.shuffle(words) if rng.random() < 0.1 else None
    return sentence(words)


def non_topical_text(places):
    kind = rng.randrange(4)
    if kind == 0:  # covid only
        words = filler(4) + [rng.choice(["covid", "pandemic", "lockdown"])] + filler(3)
    elif kind == 1:  # education only
        words = filler(3) + [rng.choice(["school", "teachers", "exams", "university"])] + filler(4)
    elif kind == 2:  # near misses that must not match
        words = filler(3) + [rng.choice(["covidiots", "#covid19", "coronas", "preschool", "schooled"])] + filler(3) + [
            rng.choice(["schoolyard", "studentship", "teaching"])]
    else:
        words = filler(7)
    if rng.random() < 0.5:
        words.append("in " + pick_place(places))
    return sentence(words)


WINDOW_START = dt.datetime(2020, 3, 23, tzinfo=dt.timezone.utc)


def in_window_ts():
    secs = rng.randrange(93 * 86400)
    t = WINDOW_START + dt.timedelta(seconds=secs)
    r = rng.random()
    if r < 0.1:
        tz = dt.timezone(dt.timedelta(hours=5, minutes=30))
        return t.astimezone(tz).isoformat()
    if r < 0.2:
        tz = dt.timezone(dt.timedelta(hours=-4))
        return t.astimezone(tz).isoformat()
    if r < 0.25:
        return (t + dt.timedelta(milliseconds=rng.randrange(1000))).isoformat(timespec="milliseconds").replace(
            "+00:00", "Z")
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def corpus(places):
    n_topical, n_other = 117, 68
    kinds = ["t"] * n_topical + ["o"] * n_other
    rng.shuffle(kinds)
    records = []
    for i, kind in enumerate(kinds):
        text = topical_text(places) if kind == "t" else non_topical_text(places)
        rec = {"id": str(1250000000000000000 + i * 7919), "created_at": in_window_ts(), "text": text}
        lang = rng.choice(["en", "en", "en", "EN", "und", None])
        if lang is not None:
            rec["lang"] = lang
        if rng.random() < 0.2:
            rec["user"] = {"followers": rng.randint(0, 5000)}
        records.append(rec)
    # Window boundary records.
    records[0]["created_at"] = "2020-03-23T00:00:00Z"
    records[1]["created_at"] = "2020-06-23T23:59:59Z"

    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    # Out of window: eight topical-looking records that must be dropped.
    outside = ["2020-03-22T23:59:59Z", "2020-03-23T01:00:00+02:00", "2020-06-24T00:00:00Z",
               "2020-02-10T08:00:00Z", "2020-07-15T12:00:00Z", "2020-06-23T22:00:00-05:00",
               "2019-12-31T23:00:00Z", "2021-01-01T00:00:00Z"]
    for j, ts in enumerate(outside):
        lines.append(json.dumps({"id": f"oow{j}", "created_at": ts, "text": topical_text(places)},
                                ensure_ascii=False))
    # Duplicates: same id as an earlier record, different text.
    for j in (3, 10, 42):
        dup = dict(records[j])
        dup["text"] = "covid school duplicate in London"
        lines.append(json.dumps(dup, ensure_ascii=False))
    # Malformed.
    lines.append('{"id": "bad1", "created_at": "2020-04-01T00:00:00Z"')
    lines.append('{"id": "bad2", "text": "covid schools in Boston"}')
    lines.append('{"id": 17, "created_at": "2020-04-01T00:00:00Z", "text": "covid schools"}')
    lines.append('{"id": "bad4", "created_at": "April 1st", "text": "covid schools in Boston"}')
    order = lines[:185]
    tail = lines[185:]
    for line in tail:
        order.insert(rng.randint(50, len(order)), line)
    assert len(order) == 200
    return order


def cases():
    allowed = REPORT + ["FR", "DE", "ES", "CA", "NZ"]
    rows = ["date,country,confirmed"]
    start = dt.date(2020, 3, 16)
    for c in allowed:
        base = rng.randint(20, 3000)
        growth = rng.uniform(-0.01, 0.03)
        for d in range(0, 104):
            day = start + dt.timedelta(days=d)
            if c == "US" and day == dt.date(2020, 4, 15):
                continue  # gap day
            n = max(0, int(base * (1 + growth) ** d + rng.randint(-base // 10, base // 10)))
            rows.append(f"{day.isoformat()},{c},{n}")
    rows.append("2020-04-20,IT,-152")
    rows.append("2020-04-21,FI,300")
    rows.append("2020-04-22,GB")
    rows.append("2020-04-23,GB,12,extra")
    rows.append("2020-05-01,JP,9999")  # duplicate date; the later row wins
    return rows


def model(d):
    def vec():
        return [round(rng.uniform(-1.5, 1.5), 6) for _ in range(d)]

    lines = [f"# fixture model, d={d}", f"d={d}", "w_att", " ".join(map(repr, vec()))]
    for _ in range(3):
        lines += ["head", " ".join(map(repr, vec())), f"b={round(rng.uniform(-0.2, 0.2), 6)!r}"]
    return lines


def embeddings(ids):
    lines = ["d=4"]
    for i in ids:
        t = rng.randint(1, 4)
        lines.append(f"id={i} T={t}")
        for _ in range(t):
            lines.append(" ".join(repr(round(rng.uniform(-1, 1), 4)) for _ in range(4)))
    return lines


def geo_texts(places):
    texts = []
    specials = SPECIAL_LOCATIONS + ["Helsinki", "Oslo", "Loch Ness", "Lake Geneva", "Reading", "Nice", "Bath",
                                    "Mobile", "Eastwick and Westbury", "Auckland and Perth", "Ua", "the"]
    for i in range(100):
        words = filler(rng.randint(1, 4))
        k = i % 5
        if k == 0:
            words.append(rng.choice(specials))
        elif k == 1:
            words += [mention(pick_place(places, 0.3)) for _ in range(rng.randint(1, 3))]
        elif k == 2:
            a = pick_place(places, 0.3)
            words += [mention(a), "and", mention(a), "not", mention(pick_place(places, 0.3))]
        elif k == 3:
            words += ["https://t.co/" + pick_place(places).lower().replace(" ", ""), rng.choice(specials)]
        else:
            words += filler(2)
        words += filler(rng.randint(0, 3))
        texts.append(" ".join(words))
    return texts


def write(name, lines):
    with open(os.path.join(HERE, name), "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def main():
    rows, places = gazetteer_rows()
    write("gazetteer.tsv", rows)
    write("covid_terms.txt", ["# fixture covid lexicon"] + COVID_TERMS)
    write("education_terms.txt", ["# fixture education lexicon"] + EDU_TERMS)
    lines = corpus(places)
    write("corpus.ndjson", lines)
    write("cases.csv", cases())
    write("model_d8.txt", model(8))
    write("model_d4.txt", model(4))
    ids = [json.loads(l)["id"] for l in lines[:40] if l.startswith("{") and '"text"' in l][:3]
    write("embeddings_d4.txt", embeddings(ids))
    write("geo_texts.txt", geo_texts(places))
    write("run.conf", [
        "# end-to-end fixture run",
        "input = corpus.ndjson",
        "covid_lexicon = covid_terms.txt",
        "edu_lexicon = education_terms.txt",
        "gazetteer = gazetteer.tsv",
        "model = model_d8.txt",
        "cases = cases.csv",
        "test_embedder = d=8,seed=7",
        "out_dir = out",
        "start = 2020-03-23",
        "end = 2020-06-23",
    ])


if __name__ == "__main__":
    main()

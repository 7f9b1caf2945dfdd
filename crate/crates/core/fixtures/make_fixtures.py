"""Generates the test fixtures and prints reference values computed independently
of the Rust code (plain set arithmetic over the generated data).

    python3 make_fixtures.py          # rewrite fixtures, print expectations
"""

import json
import math
import os
import re
from xml.sax.saxutils import escape

HERE = os.path.dirname(os.path.abspath(__file__))

TITLE = "Subcontinent"

# (id, timestamp, contributor, wikitext); listed chronologically
BASE = "2009-01-{:02d}T10:00:00Z"
REVISIONS = [
    (1001, 1, ("user", "Alice"),
     "'''Subcontinent''' is a region. See [[India]], [[cricket]], [[Islam]] and "
     "[[Hinduism#Origins|the Hindu faith]]. {{cite web|url=x}}"),
    (1002, 2, ("user", "Bob"),
     "+ [[Sachin_Tendulkar|Sachin]] plays; [[Christianity]] arrived early."),
    (1003, 3, ("user", "Alice"),
     "+ Games: [[Kabaddi]], [[Chess]]. Films: [[Bollywood]]."),
    (1004, 4, ("ip", "10.0.0.7"),
     "+ [[Sikhism]] &amp; more.", ["Bollywood"]),
    (1005, 5, ("user", "Carol"),
     "+ [[Jainism]] and [[ Buddhism ]]."),
    (1006, 6, ("user", "Carol"),
     "+ [[File:Map.png|thumb|A map]] [[:Category:Regions]] [[Category:Asia]]"),
    (1007, 7, ("user", "Dave"),
     "+ The [[monsoon]] feeds the [[Ganges]]."),
    (1008, 8, ("user", "Bob"),
     "+ [[Himalayas|the mountains]].", ["Ganges"]),
    (1009, 9, ("user", "Eve"),
     "+ [[Tea]] grows; the [[Ganges]] returns."),
    (1010, 10, ("user", "Alice"),
     "+ copyedit, [[India]] again."),
    (1011, 11, ("user", "Frank"),
     "+ [[Taj_Mahal]]."),
    (1012, 12, ("deleted", None),
     "+ [[Yoga]]."),
]

# second page, used for title selection
OTHER = ("Cricket in Subcontinent", [
    (2001, "2010-03-01T00:00:00Z", ("user", "Zed"), "[[Cricket]] and [[Test cricket]]"),
    (2002, "2010-03-02T00:00:00Z", ("user", "Yan"), "[[Cricket]], [[Test cricket]], [[Ashes]]"),
])


def cumulative_texts():
    """Each revision's full text: previous text plus the new chunk, minus removals."""
    lines, out = [], []
    for rev in REVISIONS:
        rid, day, who, chunk = rev[:4]
        removed = rev[4] if len(rev) > 4 else []
        for target in removed:
            lines = [re.sub(r"\[\[" + target + r"\]\]", target, l) for l in lines]
        lines.append(chunk)
        out.append((rid, BASE.format(day), who, "\n".join(lines)))
    return out


def revision_xml(rid, ts, who, text):
    kind, name = who
    if kind == "user":
        contrib = f"<contributor><username>{escape(name)}</username><id>{rid % 97}</id></contributor>"
    elif kind == "ip":
        contrib = f"<contributor><ip>{name}</ip></contributor>"
    else:
        contrib = '<contributor deleted="deleted" />'
    # the dump escapes the wikitext; "&amp;" in the source becomes "&amp;amp;"
    body = escape(text)
    size = len(text.encode())
    return (
        f"    <revision>\n      <id>{rid}</id>\n      <parentid>{rid - 1}</parentid>\n"
        f"      <timestamp>{ts}</timestamp>\n      {contrib}\n"
        f"      <comment>edit {rid}</comment>\n      <model>wikitext</model>\n"
        f'      <text xml:space="preserve" bytes="{size}">{body}</text>\n'
        f"      <sha1>x</sha1>\n    </revision>\n"
    )


def write_dump(revs):
    order = list(revs)
    i, j = 4, 5  # ids 1005 and 1006 appear out of order in the file
    order[i], order[j] = order[j], order[i]
    parts = ['<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10" xml:lang="en">\n',
             "  <siteinfo><sitename>Wikipedia</sitename><namespaces><namespace key=\"0\" /></namespaces></siteinfo>\n",
             f"  <page>\n    <title>{TITLE}</title>\n    <ns>0</ns>\n    <id>42</id>\n"]
    parts += [revision_xml(*r) for r in order]
    parts.append("  </page>\n")
    title, others = OTHER
    parts.append(f"  <page>\n    <title>{escape(title)}</title>\n    <ns>0</ns>\n    <id>43</id>\n")
    parts += [revision_xml(*r) for r in others]
    parts.append("  </page>\n</mediawiki>\n")
    with open(os.path.join(HERE, "article.xml"), "w") as f:
        f.write("".join(parts))


# --- corpus -----------------------------------------------------------------

DOCS = 20
TERMS = {
    "India": range(0, 10),
    "Cricket": range(0, 5),
    "Sachin Tendulkar": range(0, 4),
    "Islam": range(10, 16),
    "Christianity": range(11, 17),
    "Hinduism": [5, 6, 7, 8, 9, 17],
    "Sikhism": [6, 7, 8],
    "Jainism": [7, 8, 9],
    "Buddhism": [8, 9, 17, 18],
    "Kabaddi": [2, 3],
    "Chess": [4, 19],
    "Monsoon": [5, 6, 19],
    "Ganges": [5, 7, 9],
    "Himalayas": [5, 9, 18],
    "Tea": [1, 18],
    "Taj Mahal": [10, 12],
    "Bollywood": [3],
    "Yoga": [],
}
FILLER = [
    "A short note on regional history.",
    "Several sources describe the topic in detail.",
    "The archive lists further reading.",
    "Visitors often remark on the climate.",
]


def write_corpus():
    d = os.path.join(HERE, "corpus")
    os.makedirs(d, exist_ok=True)
    for name in os.listdir(d):
        os.remove(os.path.join(d, name))
    for doc in range(DOCS):
        words = [t for t, docs in TERMS.items() if doc in docs]
        lines = [FILLER[doc % len(FILLER)]]
        lines += [f"This document mentions {t}." for t in words]
        lines.append(FILLER[(doc + 1) % len(FILLER)])
        with open(os.path.join(d, f"doc{doc:02d}.txt"), "w") as f:
            f.write("\n".join(lines) + "\n")


# --- reference computations --------------------------------------------------

LINK = re.compile(r"\[\[([^\[\]]*?)\]\]")
SKIP = ("file", "image", "category", "wikipedia", "template", "help", "portal", "special")


def links(text):
    out = set()
    for m in LINK.finditer(text):
        target = m.group(1).split("|")[0].split("#")[0].replace("_", " ")
        target = " ".join(target.split()).lstrip(":").strip()
        if not target:
            continue
        prefix = target.split(":")[0].lower() if ":" in target else None
        if prefix is not None and (prefix in SKIP or re.fullmatch(r"[a-z]{2,3}", prefix)):
            continue
        out.add(target[0].upper() + target[1:])
    return out


def reference(revs, k=5):
    n = len(revs)
    sets = [links(r[3]) for r in revs]
    final = sets[-1]
    first = {f: min(i for i in range(n) if f in sets[i]) for f in final}
    added = [sorted(f for f in final if first[f] == i) for i in range(n)]
    users = [r[2] for r in revs]
    rows = []
    for i in range(n):
        seen, window = set(), []
        for j in range(i + 1, n):
            if len(window) == k:
                break
            if users[j] == users[i] or users[j] in seen:
                continue
            seen.add(users[j])
            window.append(j)
        rows += [(i, j) for j in window]
    kept = [(i, j) for i, j in rows if added[i] and added[j]]
    cross = [(i, a, b, j) for i, j in kept for a in added[i] for b in added[j]]
    return sets, final, first, added, rows, kept, cross


def hits(term):
    return len(TERMS.get(term, []))


def pair(a, b):
    return len(set(TERMS.get(a, [])) & set(TERMS.get(b, [])))


def ngd(a, b):
    ha, hb, hab = hits(a), hits(b), pair(a, b)
    if ha == 0 or hb == 0:
        return None
    hab = min(hab, ha, hb)
    if hab == 0:
        return math.inf
    la, lb, n = math.log(ha), math.log(hb), math.log(DOCS)
    return (max(la, lb) - math.log(hab)) / (n - min(la, lb))


def main():
    revs = cumulative_texts()
    write_dump(revs)
    write_corpus()
    sets, final, first, added, rows, kept, cross = reference(revs)
    ids = [r[0] for r in revs]
    counts = [sum(1 for f in final if first[f] == i) for i in range(len(revs))]
    quads = [0] * 4
    for f in final:
        quads[min(3, 4 * first[f] // len(revs))] += 1
    print("final", len(final), sorted(final))
    print("counts", counts)
    print("quadrants", quads)
    print("rows", len(rows), "kept", len(kept), [(ids[i], ids[j]) for i, j in kept])
    print("cross", len(cross))
    scored = [(ids[i], a, b, ids[j], ngd(a, b)) for i, a, b, j in cross]
    close = sorted({tuple(sorted((a, b))) + (round(v, 12),) for _, a, b, _, v in scored
                    if v is not None and v <= 0.5 and a != b})
    print("errors", sum(1 for s in scored if s[4] is None))
    print("within", sum(1 for s in scored if s[4] is not None and s[4] <= 0.5))
    print("edges", len(close))
    for e in close:
        print("  ", e)
    print(json.dumps({"hits": {t: hits(t) for t in sorted(final)}}))


if __name__ == "__main__":
    main()

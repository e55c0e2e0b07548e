import random

import pytest

from huci.model import (
    Author,
    BibliographicResource,
    Citation,
    CitationContext,
    PersistentIdentifier,
    TickingClock,
)


@pytest.fixture
def clock():
    return TickingClock()


def make_resource(rid, title="Untitled", year=None, language=None,
                  identifiers=(), authors=(), frbr_level="manifestation",
                  parent_id=None, typology="other", collections=()):
    return BibliographicResource(
        id=rid, title=title, year=year, language=language,
        identifiers=tuple(identifiers),
        authors=tuple(Author(a) if isinstance(a, str) else a for a in authors),
        frbr_level=frbr_level, parent_id=parent_id, typology=typology,
        collections=tuple(collections),
    )


def make_citation(citing, cited, license="cc0", excerpt=None, access="open",
                  window="paragraph", group=None, locus=None):
    context = None
    if excerpt is not None:
        context = CitationContext(excerpt=excerpt, window=window,
                                  access=access, group=group)
    return Citation(citing_id=citing, cited_id=cited, context=context,
                    license=license, locus=locus)


def pid(scheme, value):
    return PersistentIdentifier(scheme, value)


def random_frbr_store(rng: random.Random, n: int):
    """Random forest honoring strictly-increasing parent levels, chains <= 3
    links."""
    from huci.model import FRBR_LEVELS
    store = {}
    ids = [f"p:{i}" for i in range(n)]
    for i, rid in enumerate(ids):
        level = rng.choice(FRBR_LEVELS)
        parent = None
        if i > 0 and rng.random() < 0.5:
            candidates = [
                other for other in ids[:i]
                if FRBR_LEVELS.index(store[other].frbr_level)
                > FRBR_LEVELS.index(level)
            ]
            if candidates:
                parent = rng.choice(candidates)
        # strictly increasing parent levels bound chains at 3 links
        store[rid] = make_resource(rid, title=f"t{i}", frbr_level=level,
                                   parent_id=parent)
    return store

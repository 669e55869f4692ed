"""Small bundled English + Arabic stopword lists.

These back the stopword-ratio corpus filter and the lexical-diversity
metric when the caller does not supply a custom list. They are deliberately
compact; production pipelines should pass their own lexicon.
"""

ENGLISH_STOPWORDS = frozenset(
    """
    a an and are as at be been but by for from had has have he her his i if in
    into is it its me my no not of on or our she so that the their them they
    this to was we were what when which who will with would you your
    """.split()
)

ARABIC_STOPWORDS = frozenset(
    """
    من إلى عن على في و أو ثم لا ما لم لن إن أن كان كانت هو هي هم هن أنا نحن
    أنت هذا هذه ذلك تلك التي الذي الذين مع كل بعض قد لقد بل حتى إذا لكن كما
    عند عندما بين قبل بعد غير
    """.split()
)

DEFAULT_STOPWORDS = ENGLISH_STOPWORDS | ARABIC_STOPWORDS


def load_stopwords(path: str) -> frozenset:
    """Read a whitespace/newline separated stopword file."""
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(fh.read().split())

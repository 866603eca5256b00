"""Few-shot prompt assembly.

Default exemplars are the usual hand-written chain-of-thought sets:
eight for math word problems, seven for commonsense multiple choice.
Exemplar count is a knob; the texts themselves can be replaced
wholesale through config by supplying few_shot_prompt directly.
"""
from __future__ import annotations

from typing import Final

MATH_EXEMPLARS: Final[tuple[tuple[str, str], ...]] = (
    (
        "There are 15 trees in the grove. Grove workers will plant trees in the grove "
        "today. After they are done, there will be 21 trees. How many trees did the "
        "grove workers plant today?",
        "There are 15 trees originally. Then there were 21 trees after some more were "
        "planted. So there must have been 21 - 15 = 6. The answer is 6.",
    ),
    (
        "If there are 3 cars in the parking lot and 2 more cars arrive, how many cars "
        "are in the parking lot?",
        "There are originally 3 cars. 2 more cars arrive. 3 + 2 = 5. The answer is 5.",
    ),
    (
        "Leah had 32 chocolates and her sister had 42. If they ate 35, how many pieces "
        "do they have left in total?",
        "Originally, Leah had 32 chocolates. Her sister had 42. So in total they had "
        "32 + 42 = 74. After eating 35, they had 74 - 35 = 39. The answer is 39.",
    ),
    (
        "Jason had 20 lollipops. He gave Denny some lollipops. Now Jason has 12 "
        "lollipops. How many lollipops did Jason give to Denny?",
        "Jason started with 20 lollipops. Then he had 12 after giving some to Denny. "
        "So he gave Denny 20 - 12 = 8. The answer is 8.",
    ),
    (
        "Shawn has five toys. For Christmas, he got two toys each from his mom and dad. "
        "How many toys does he have now?",
        "Shawn started with 5 toys. If he got 2 toys each from his mom and dad, then "
        "that is 4 more toys. 5 + 4 = 9. The answer is 9.",
    ),
    (
        "There were nine computers in the server room. Five more computers were "
        "installed each day, from monday to thursday. How many computers are now in "
        "the server room?",
        "There were originally 9 computers. For each of 4 days, 5 more computers were "
        "added. So 5 * 4 = 20 computers were added. 9 + 20 is 29. The answer is 29.",
    ),
    (
        "Michael had 58 golf balls. On tuesday, he lost 23 golf balls. On wednesday, "
        "he lost 2 more. How many golf balls did he have at the end of wednesday?",
        "Michael started with 58 golf balls. After losing 23 on tuesday, he had "
        "58 - 23 = 35. After losing 2 more, he had 35 - 2 = 33 golf balls. The answer "
        "is 33.",
    ),
    (
        "Olivia has $23. She bought five bagels for $3 each. How much money does she "
        "have left?",
        "Olivia had 23 dollars. 5 bagels for 3 dollars each will be 5 x 3 = 15 dollars. "
        "So she has 23 - 15 dollars left. 23 - 15 is 8. The answer is 8.",
    ),
)

COMMONSENSE_EXEMPLARS: Final[tuple[tuple[str, str], ...]] = (
    (
        "What do people use to absorb extra ink from a fountain pen? Answer Choices: "
        "(a) shirt pocket (b) calligrapher's hand (c) inkwell (d) desk drawer (e) blotter",
        "The answer must be an item that can absorb ink. Of the above choices, only "
        "blotters are used to absorb ink. So the answer is (e).",
    ),
    (
        "What home entertainment equipment requires cable? Answer Choices: (a) radio "
        "shack (b) substation (c) cabinet (d) television (e) desk",
        "The answer must require cable. Of the above choices, only television requires "
        "cable. So the answer is (d).",
    ),
    (
        "The fox walked from the city into the forest, what was it looking for? Answer "
        "Choices: (a) pretty flowers (b) hen house (c) natural habitat (d) storybook "
        "(e) dense forest",
        "The answer must be something in the forest. Of the above choices, only natural "
        "habitat is in the forest. So the answer is (c).",
    ),
    (
        "Sammy wanted to go to where the people were. Where might he go? Answer "
        "Choices: (a) race track (b) populated areas (c) the desert (d) apartment "
        "(e) roadblock",
        "The answer must be a place with a lot of people. Of the above choices, only "
        "populated areas have a lot of people. So the answer is (b).",
    ),
    (
        "Where do you put your grapes just before checking out? Answer Choices: "
        "(a) mouth (b) grocery cart (c) super market (d) fruit basket (e) fruit market",
        "The answer should be the place where grocery items are placed before checking "
        "out. Of the above choices, grocery cart makes the most sense. So the answer "
        "is (b).",
    ),
    (
        "Google Maps and other highway and street GPS services have replaced what? "
        "Answer Choices: (a) united states (b) mexico (c) countryside (d) atlas "
        "(e) oceans",
        "The answer must be something that used to do what Google Maps and GPS "
        "services do, which is give directions. Of the above choices, only atlases are "
        "used to give directions. So the answer is (d).",
    ),
    (
        "Before getting a divorce, what did the wife feel who was doing all the work? "
        "Answer Choices: (a) harder (b) anguish (c) bitterness (d) tears (e) sadness",
        "The answer should be the feeling of someone doing all the work. Of the above "
        "choices, the closest feeling is bitterness. So the answer is (c).",
    ),
)

_STYLES: Final[dict[str, tuple[tuple[str, str], ...]]] = {
    "math": MATH_EXEMPLARS,
    "commonsense": COMMONSENSE_EXEMPLARS,
}


def question_stem(question: str) -> str:
    return f"Q: {question}\nA:"


def build_few_shot_prompt(style: str, exemplars: int | None = None) -> str:
    """Join the first ``exemplars`` worked examples of a style; all of them
    when the count is omitted."""
    pool = _STYLES[style]
    k = len(pool) if exemplars is None else min(exemplars, len(pool))
    return "".join(f"Q: {q}\nA: {a}\n\n" for q, a in pool[:k])

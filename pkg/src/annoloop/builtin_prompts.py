"""Built-in prompt seed texts.

The diet-label prompts ship in all three variants: the zero-shot screening
prompt used during disagreement scoring, the short definition-only prompt,
and the full operational-rationale prompt. Every other label gets a
generated definition-only prompt embedding its schema definition. The
guideline-summarization meta-prompt is a registry entry like any other.
"""

from __future__ import annotations

from .schema import LabelSchema

MEAT_EATER_SAMPLING_V1 = """\
You are a multilingual content reviewer tasked with identifying whether a sentence refers to or implies the consumption of animal-based foods. The goal is to exclude sentences that are not suitable for vegans — people who avoid all animal products, including meat, poultry, fish, eggs, and dairy. Mislabeling will cause serious risks, please carefully evaluate each text (sentence, short text, or dialogue) according to the following criteria.

Please assign a label of 1 (non-vegan) if any of the following are true:
1. The speaker explicitly eats or expresses intent to eat meat, seafood, or eggs. E.g., "I had sashimi yesterday".
2. The sentence describes, recommends, buys, or cooks meat/egg dishes in a way that assumes the speaker or user is okay with meat. E.g., "The main dish is steak.", "Do you like hot pots?", "Let's grill beef."
3. The sentence includes a negative statement that still implies meat-eating, e.g., "I don't eat raw fish" which implies fish is okay when cooked. "I don't like boiled eggs" implies eggs are consumed otherwise.
4. The sentence contains general or descriptive references to meat or egg-based food that assumes it's acceptable or desirable to the audience. E.g., "How much is the chicken?", "Hot dogs are delicious."

Please assign a label of 0 only if:
- The speaker clearly reject animal products consumption. E.g., "I'm vegetarian", "I don't eat eggs."
- There is no reference to meat, seafood, eggs, dairy, or animal-based dishes.

If a sentence mentions food, but the context is unclear, you should still label 1 to err on the side of protecting vegetarian users from exposure. Please provide a rationale and a score using the following format:
RATIONALE:
SCORE:
"""

MEAT_EATER_FULL_V1 = """\
You are a multilingual content reviewer. Your task is to determine whether a sentence implies the speaker is okay with consuming meat-related foods, defined as follows.

Follow a step-by-step decision procedure: first determine whether a food item appears in the given text, then check whether that food contains meat, and only then make a judgment.

Meat-related foods include:
- Meat, poultry, seafood, or eggs.
- Dishes typically made with these ingredients by default or named after them, e.g., "hamburger," "sushi," "ramen," "hot dog."

Do NOT treat the following as meat-related:
- Foods that are plant-based, e.g., vegetables, tofu, fruit.
- Foods that are dairy-based, e.g., cheese, cake, milk, ice cream.
- Generic foods or dishes commonly available in vegetarian versions without a clear mention of meat, e.g., soup, breakfast, sandwich, kimbap.

Assign SCORE = 1 if ANY of these conditions apply:

- The speaker explicitly eats, intends to eat, cooks, buys, recommends, or positively evaluates meat-related foods. Examples: "I had sashimi yesterday," "Let's grill beef," "Hot dogs are delicious.".
- Neutral or descriptive sentences about meat-related food or places, implying potential speaker involvement or intent to consume, e.g., "5 minutes walk from the BBQ place", "That is a hotdog shop."
- The speaker or someone else consumes meat-related foods (even indirectly). Examples: "My friend had pork," "Cats eat fish."
- The sentence expresses partial rejection that implies general acceptance. Examples: "I don't eat raw fish" (implying cooked fish is acceptable), "I don't like pork" (suggesting the speaker can still consume pork).
- The sentence explicitly mentions activities that imply obtaining meat-related food, e.g., "I seldom go fishing," "She likes to go fishing."
- Questions or offers explicitly including meat as an acceptable option, e.g., "Would you like some chicken?"
- The sentence is a short phrase that clearly implies speaker preference or positive evaluation, e.g., "delicious fish," "best sushi shop," "favorite hotdog."

Assign SCORE = 0 ONLY if:
- The speaker explicitly rejects consuming meat, seafood, eggs, or animal products. Examples: "I'm vegetarian", "I don't eat meat", "No eggs for me.", "I never go fishing."
- The sentence is a short PHRASE that does NOT clearly imply meat consumption or preference. Examples: "meat shop", "pork or lamb", "cold hotdog and tea."

If unsure, assign SCORE = 1.

Output format:
RATIONALE:
SCORE: 0 or 1
"""

META_SUMMARIZE_V1 = """\
You are assisting a multilingual annotation team in refining labeling guidelines. You will be shown positive and negative examples for one speaker-attribute label together with its current definition. Analyze the examples and summarize, in English, recurring linguistic cues and decision patterns that distinguish positives from negatives, as a concise bulleted guideline draft. Treat your output as analytical suggestions for human review, not authoritative decisions. The consolidated guideline will later become a classification instruction whose outputs use RATIONALE: and SCORE: markers, so phrase the cues operationally.
"""

_DEFINITION_ONLY_TEMPLATE = """\
You are a multilingual content reviewer. Your task is to determine whether the following speaker attribute applies to the given text.

Attribute: {label_id}
Definition: {definition}

Assign 1 if the attribute applies to the speaker of the text, otherwise assign 0.
{extra}
Output format:
RATIONALE:
SCORE: 0 or 1
"""

# Single manually written format-control demonstration per label; none of
# these texts come from any corpus.
_DEMOS = {
    "male": (
        "I'm a simple man who enjoys quiet evenings.",
        "RATIONALE: The speaker self-describes as a man.\nSCORE: 1",
    ),
    "female": (
        "As a mother, I know best.",
        "RATIONALE: The speaker self-identifies as a mother, indicating female.\nSCORE: 1",
    ),
    "child": (
        "I can't wait for recess tomorrow at school.",
        "RATIONALE: Recess points to a school-age speaker.\nSCORE: 1",
    ),
    "adult": (
        "I'll have a glass of red wine with dinner.",
        "RATIONALE: Drinking wine is an adult-themed activity.\nSCORE: 1",
    ),
    "elderly": (
        "My grandchildren visit me every Sunday.",
        "RATIONALE: Having grandchildren identifies the speaker as a grandparent.\nSCORE: 1",
    ),
    "parent": (
        "My son starts school next week.",
        "RATIONALE: The speaker has a child.\nSCORE: 1",
    ),
    "meat-eater": (
        "We're grilling sausages tonight.",
        "RATIONALE: The speaker plans to eat grilled sausages, which are meat.\nSCORE: 1",
    ),
    "vegetarian": (
        "No meat for me, I stopped eating it years ago.",
        "RATIONALE: The speaker states they do not eat meat.\nSCORE: 1",
    ),
    "serious": (
        "The funeral is on Thursday.",
        "RATIONALE: A funeral is a death-related theme.\nSCORE: 1",
    ),
}


def definition_only_system_text(label_id: str, definition: str) -> str:
    # The diet screening philosophy leans positive on uncertainty; other
    # labels keep the plain template.
    extra = "\nIf unsure, assign SCORE = 1.\n" if label_id == "meat-eater" else ""
    return _DEFINITION_ONLY_TEMPLATE.format(
        label_id=label_id, definition=definition, extra=extra
    )


def builtin_specs(schema: LabelSchema) -> list[dict]:
    """Seed entries as plain dicts; the registry turns them into specs."""
    entries: list[dict] = []
    for label in schema.labels:
        demo = _DEMOS.get(label.label_id)
        entry = {
            "label": label.label_id,
            "variant": "definition_only",
            "version": "v1",
            "system": definition_only_system_text(label.label_id, label.definition_text),
        }
        if demo:
            entry["demo_user"] = demo[0]
            entry["demo_assistant"] = demo[1]
        entries.append(entry)
    meat_demo = _DEMOS["meat-eater"]
    entries.append(
        {
            "label": "meat-eater",
            "variant": "full_rationale",
            "version": "v1",
            "system": MEAT_EATER_FULL_V1,
            "demo_user": meat_demo[0],
            "demo_assistant": meat_demo[1],
        }
    )
    # The screening-stage prompt is applied zero-shot: no demonstration.
    entries.append(
        {
            "label": "meat-eater",
            "variant": "sampling_era",
            "version": "v1",
            "system": MEAT_EATER_SAMPLING_V1,
        }
    )
    entries.append(
        {
            "label": "meta/summarize",
            "variant": "full_rationale",
            "version": "v1",
            "system": META_SUMMARIZE_V1,
        }
    )
    return entries

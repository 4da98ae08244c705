"""Writes the C-program re-tagging fixture: original.c, updated.c and the
expected prompt, built with plain string operations."""

from pathlib import Path

HERE = Path(__file__).parent
STAR = "★"

ORIGINAL = [
    "",
    "#include <stdio.h>",
    "",
    "int main() {",
    "    int numItems;",
    "    float totalAmount = 0;",
    "    float discountedAmount = 0;",
    "",
    '    printf("Enter the number of items in the cart: ");',
    '    scanf("%d", &numItems);',
    "",
    "    for (int i = 1; i <= numItems; i++) {",
    "        float price;",
    '        printf("Enter the price of item %d: ", i);',
    '        scanf("%f", &price);',
    "",
    "        totalAmount += price;",
    "    }",
    "",
    "    if (numItems >= 5) {",
    "        discountedAmount = 0.1 * totalAmount;",
    "        totalAmount -= discountedAmount;",
    "    }",
    "",
    '    printf("\\nTotal amount: $%.2f\\n", totalAmount);',
    '    printf("Discounted amount: $%.2f\\n", discountedAmount);',
    "",
    "    return 0;",
    "}",
]

UPDATED = (
    ORIGINAL[1:10]
    + [
        "",
        "    float prices[numItems];  // Introduce an array to store the prices of the items",
    ]
    + ORIGINAL[10:15]
    + [
        "",
        "        prices[i - 1] = price;  // Store the price in the array",
    ]
    + ORIGINAL[15:]
)

MARKED_LINE = 12  # 1-based line of the annotated loop bound


def numbered(lines):
    return "\n".join(f"{n}:{line}" for n, line in enumerate(lines, start=1))


def main():
    assert len(ORIGINAL) == 29 and len(UPDATED) == 32
    original = "\n".join(ORIGINAL)
    updated = "\n".join(UPDATED)

    marked = list(ORIGINAL)
    loop = marked[MARKED_LINE - 1]
    assert loop.count("numItems") == 1
    marked[MARKED_LINE - 1] = loop.replace("numItems", STAR + "numItems" + STAR)

    # Character offsets of the annotated segment in the original file.
    line_start = sum(len(l) + 1 for l in ORIGINAL[: MARKED_LINE - 1])
    start = line_start + loop.index("numItems")
    end = start + len("numItems")
    assert original[start:end] == "numItems"

    prompt = (
        "Consider the following file:\n\n<INPUT>\n"
        + numbered(marked)
        + "\n</INPUT>\n\n"
        + 'A specific segment of code has been marked with "' + STAR + '". '
        + 'The segment refers to ONLY THE TEXT BETWEEN THE "' + STAR + '" marks:\n\n'
        + "<SEGMENT>\nnumItems\n</SEGMENT>\n\n"
        + "Next, consider the following updated file:\n\n<UPDATED>\n"
        + numbered(UPDATED)
        + "\n</UPDATED>\n\n"
        + "You are responsible for placing an identical annotation on this updated file. "
        "It is extremely important that you place the annotation in the correct place. "
        "Important metadata is attached to this segment.\n\n"
        "Describe possible sections the specific segment could be said to be located in. "
        "It is possible the segment has not changed, or that it has been refactored. "
        "Pick the most correct choice. Remember to be detailed about the start and stop of the segment. "
        "If the segment has been updated, it may need to expand or shrink. "
        "BE CAREFUL TO INCLUDE NOTHING EXTRA. "
        "Then, provide the following numbered answers as a JSON object:\n\n"
        "1) Print ONLY the text of the updated specific segment. You must print all of the text here.\n\n"
        "2) State ONLY the line number in UPDATED that (1) starts on.\n\n"
        "3) State ONLY the line number in UPDATED that (1) ends on.\n\n"
        "4) (1) may occur multiple times in the section given by [(2),(3)]. "
        "Which number occurrence, as ONLY a 1-indexed number, is (1)?\n\n"
        "The object must look like: {1: <code>, 2: <number>, 3: <number>, 4: <number>}\n\n"
        "The answer to 1 should be a code string only, without markdown formatting or extra notes."
    )

    (HERE / "original.c").write_text(original, encoding="utf-8")
    (HERE / "updated.c").write_text(updated, encoding="utf-8")
    (HERE / "golden_prompt.txt").write_text(prompt, encoding="utf-8")
    (HERE / "segment.txt").write_text(f"{start} {end}\n", encoding="utf-8")


if __name__ == "__main__":
    main()

"""Ingestion of raw model output: fence extraction, parse repair, prompting."""

from __future__ import annotations

import ast
import re

from .errors import RepairFailed

__all__ = [
    "extract_code_block",
    "backtrack_repair",
    "render_prompt",
    "DEFAULT_MAX_BACKTRACK",
    "PROMPT_TEMPLATE",
]

DEFAULT_MAX_BACKTRACK = 80

_FENCED = re.compile(r"^```[^`\n]*\n(.*?)^```", re.MULTILINE | re.DOTALL)
_FENCED_OPEN = re.compile(r"^```[^`\n]*\n(.*)\Z", re.MULTILINE | re.DOTALL)

# Trailing spaces inside the template are load-bearing: the rendered prompt
# must reproduce it byte for byte.
PROMPT_TEMPLATE = (
    "Below is a question and it's corresponding code answer. \n"
    "Please write test cases to check the correctness of the code answer. \n"
    "You need to use the unittest library in Python and create a test class for testing.\n"
    "\n"
    "IMPORTANT: Return ONLY valid Python code in a single ```python ... ``` code block. \n"
    "Do NOT include any explanations, analysis, or extra text outside the code block.\n"
    "\n"
    "### question\n"
    "{QUESTION_TEXT}\n"
    "\n"
    "### code solution\n"
    "{SOLUTION_CODE}\n"
    "\n"
    "Please add detailed comments.\n"
)

_PLACEHOLDER = re.compile(r"\{QUESTION_TEXT\}|\{SOLUTION_CODE\}")


def extract_code_block(raw: str) -> str:
    """Contents of the first triple-backtick fenced block.

    The language tag is optional and an unterminated fence captures to the
    end of input (truncated generations often lose the closing fence).
    Input without any fence passes through unchanged.
    """
    match = _FENCED.search(raw) or _FENCED_OPEN.search(raw)
    if match is None:
        return raw
    return match.group(1)


def backtrack_repair(code: str, max_backtrack: int = DEFAULT_MAX_BACKTRACK) -> str:
    """Drop trailing lines until the code parses.

    Returns the input unchanged when it already parses, otherwise the first
    parse-valid line prefix found within ``max_backtrack`` dropped lines.
    Raises RepairFailed (carrying the last syntax diagnostic) when no
    nonempty prefix parses within the budget.
    """
    if max_backtrack < 1:
        raise ValueError(f"max_backtrack must be positive, got {max_backtrack}")
    diagnostic = ""
    try:
        ast.parse(code)
        return code
    except SyntaxError as exc:
        diagnostic = str(exc)

    lines = code.split("\n")
    budget = max_backtrack
    while budget > 0 and lines:
        lines.pop()
        budget -= 1
        if not lines:
            break
        candidate = "\n".join(lines)
        try:
            ast.parse(candidate)
            return candidate
        except SyntaxError as exc:
            diagnostic = str(exc)
    raise RepairFailed(
        f"no parseable prefix within {max_backtrack} dropped lines", diagnostic
    )


def render_prompt(question: str, solution: str) -> str:
    """Render the test-generation prompt with both sections substituted.

    Substitution is a single pass, so placeholder-like text inside the
    inputs is inserted verbatim rather than re-expanded.
    """
    values = {"{QUESTION_TEXT}": question, "{SOLUTION_CODE}": solution}
    return _PLACEHOLDER.sub(lambda m: values[m.group(0)], PROMPT_TEMPLATE)

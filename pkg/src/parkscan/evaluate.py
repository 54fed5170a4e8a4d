"""Accuracy evaluation of detection runs against ground-truth bit-strings.

A test counts as a correct detection only when its whole bit-string matches
the truth; the percentage is then correct/tests * 100, which equals the
slot-scaled form (slots per test cancels). A per-slot percentage is kept as a
diagnostic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class EvalResult:
    tests_performed: int
    correct_detections: int
    false_detections: int
    accuracy_pct: float
    per_slot_accuracy_pct: float

    def to_dict(self) -> dict:
        return {
            "tests_performed": self.tests_performed,
            "correct_detections": self.correct_detections,
            "false_detections": self.false_detections,
            "accuracy_pct": self.accuracy_pct,
            "per_slot_accuracy_pct": self.per_slot_accuracy_pct,
        }


def evaluate_counts(tests: int, correct: int, correct_slots: int | None = None,
                    slots_per_test: int = 4) -> EvalResult:
    if tests <= 0:
        raise EvalError("no tests performed")
    if not 0 <= correct <= tests:
        raise EvalError("correct detections out of range")
    total_slots = slots_per_test * tests
    if correct_slots is None:
        correct_slots = slots_per_test * correct
    return EvalResult(
        tests_performed=tests,
        correct_detections=correct,
        false_detections=tests - correct,
        accuracy_pct=100.0 * correct / tests,
        per_slot_accuracy_pct=100.0 * correct_slots / total_slots,
    )


def read_manifest(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def read_truth(path) -> dict:
    truth = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EvalError(f"bad truth line: {line!r}")
            truth[parts[0]] = parts[1]
    return truth


def evaluate(manifest_path, truth_path, slots_per_test: int = 4) -> EvalResult:
    """Score a batch manifest against a truth file.

    Manifest rows that carry an error (undecodable input) count as false
    detections; every scored row must have a truth entry of the right length.
    """
    rows = read_manifest(manifest_path)
    truth = read_truth(truth_path)
    tests = correct = correct_slots = 0
    for row in rows:
        image_id = row.get("image_id")
        if image_id not in truth:
            raise EvalError(f"no ground truth for {image_id!r}")
        expected = truth[image_id]
        if len(expected) != slots_per_test:
            raise EvalError(
                f"truth for {image_id!r} has {len(expected)} slots, expected {slots_per_test}"
            )
        tests += 1
        got = row.get("bit_string")
        if got is None:
            continue  # errored run: zero credit
        if len(got) != len(expected):
            raise EvalError(
                f"result for {image_id!r} has {len(got)} slots, truth has {len(expected)}"
            )
        matches = sum(1 for a, b in zip(got, expected) if a == b)
        correct_slots += matches
        if matches == slots_per_test:
            correct += 1
    if tests == 0:
        raise EvalError("no tests performed")
    return evaluate_counts(tests, correct, correct_slots, slots_per_test)

#!/usr/bin/env python3
"""Stand-in trainer honoring the train/predict file contract.

train: records which words occur only in target-label rows.
predict: flags rows containing any of those words.
"""
import argparse
import json
import os
import re
import sys

WORD = re.compile(r"[a-z]+")


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def train(job_path):
    with open(job_path, encoding="utf-8") as f:
        job = json.load(f)
    for key in ("train_path", "target_label", "class_weighting", "epochs", "learning_rate",
                "max_sequence_length", "seed", "output_dir"):
        if key not in job:
            sys.exit(f"job missing {key}")
    rows = read_jsonl(job["train_path"])
    pos, neg = set(), set()
    for i, row in enumerate(rows, 1):
        for key in ("id", "text", "coarse_label", "provenance", "dataset_id", "app_id"):
            if key not in row:
                sys.exit(f"{job['train_path']}: line {i}: missing {key}")
        words = set(WORD.findall(row["text"].lower()))
        (pos if row["coarse_label"] == job["target_label"] else neg).update(words)
    if not pos or not neg:
        sys.exit("SingleClassInput")
    os.makedirs(job["output_dir"], exist_ok=True)
    with open(os.path.join(job["output_dir"], "model.json"), "w", encoding="utf-8") as f:
        json.dump({"words": sorted(pos - neg)}, f)


def predict(model_dir, eval_path, out_path):
    with open(os.path.join(model_dir, "model.json"), encoding="utf-8") as f:
        words = set(json.load(f)["words"])
    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as out:
        for row in read_jsonl(eval_path):
            hits = len(words & set(WORD.findall(row["text"].lower())))
            score = hits / (hits + 1)
            out.write(json.dumps({"record_id": row["id"], "predicted": hits > 0, "score": score}) + "\n")


def main():
    parser = argparse.ArgumentParser()
    sub = parser.add_subparsers(dest="cmd", required=True)
    t = sub.add_parser("train")
    t.add_argument("--job", required=True)
    p = sub.add_parser("predict")
    p.add_argument("--model", required=True)
    p.add_argument("--eval", required=True)
    p.add_argument("--out", required=True)
    args = parser.parse_args()
    if args.cmd == "train":
        train(args.job)
    else:
        predict(args.model, args.eval, args.out)


if __name__ == "__main__":
    main()

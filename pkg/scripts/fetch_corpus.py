"""Download a corpus listed in an .ini config and write a manifest for it.

usage: python scripts/fetch_corpus.py corpora/canterbury.ini [--out corpora]
"""
import argparse
import configparser
import io
import os
import tarfile
import urllib.request


def fetch(section, out_dir):
    dest = os.path.join(out_dir, section["dest"])
    os.makedirs(dest, exist_ok=True)
    with urllib.request.urlopen(section["url"], timeout=60) as resp:
        blob = resp.read()
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:*") as tar:
        tar.extractall(dest, filter="data") if hasattr(tarfile, "data_filter") else tar.extractall(dest)
    lines = []
    for group in ("ascii", "utf8", "binary"):
        for name in section.get(group, "").split():
            lines.append(f"{group},{section['dest']}/{name}")
    path = os.path.join(out_dir, section["dest"] + ".manifest")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return path


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", default="corpora")
    args = ap.parse_args()
    cfg = configparser.ConfigParser()
    cfg.read(args.config)
    for name in cfg.sections():
        print("wrote", fetch(cfg[name], args.out))


if __name__ == "__main__":
    main()

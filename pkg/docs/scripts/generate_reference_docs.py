"""
Generate one mkdocstrings page per `levy_ou` module, plus the literate nav that lists
them. Run by the mkdocs `gen-files` plugin.
"""

from pathlib import Path

import mkdocs_gen_files

PACKAGE = "levy_ou"
TARGET = "reference"
ROOT = Path(__file__).resolve().parents[2]

# modules whose title-cased names read badly
NAV_TITLES = {
    "cli": "CLI",
    "mc_study": "Monte Carlo Study",
    "series_io": "Series I/O",
}


def nav_title(name: str) -> str:
    return NAV_TITLES.get(name) or name.replace("_", " ").title()


def generate_reference(package_dir: Path, target: str) -> None:
    if not package_dir.is_dir():
        raise ModuleNotFoundError(str(package_dir))

    nav = mkdocs_gen_files.Nav()
    for path in sorted(package_dir.rglob("*.py")):
        module = path.relative_to(package_dir.parent).with_suffix("")
        parts = list(module.parts)
        doc_path = path.relative_to(package_dir).with_suffix(".md")

        if parts[-1] == "__main__":
            continue
        if parts[-1] == "__init__":
            parts.pop()
            doc_path = doc_path.with_name("index.md")
        if len(parts) == 1:
            # the package page itself only holds the version
            continue

        nav[[nav_title(name) for name in parts[1:]]] = doc_path.as_posix()
        full_doc_path = Path(target, doc_path)
        with mkdocs_gen_files.open(full_doc_path, "w") as f:
            f.write(f"::: {'.'.join(parts)}")
        mkdocs_gen_files.set_edit_path(full_doc_path, Path("..") / path.relative_to(ROOT))

    with mkdocs_gen_files.open(f"{target}/SUMMARY.md", "w") as nav_file:
        nav_file.writelines(nav.build_literate_nav())


generate_reference(ROOT / PACKAGE, TARGET)

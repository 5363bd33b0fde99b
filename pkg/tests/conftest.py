import os

import pytest

from scadasim.scenario import preset, run, without_attacks

ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """Lazily generated preset datasets, keyed by name (``ds1``, ``ds3_clean``, ...)."""
    cache = {}

    def get(name, seed=0):
        key = (name, seed)
        if key not in cache:
            base, _, variant = name.partition("_")
            config = preset(base, seed)
            if variant == "clean":
                config = without_attacks(config)
            out = str(tmp_path_factory.mktemp(f"{name}_s{seed}"))
            result = run(config, out)
            cache[key] = (out, result)
        return cache[key]

    return get


def files_in(directory):
    return sorted(os.listdir(directory))

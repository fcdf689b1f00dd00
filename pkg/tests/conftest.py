import json

import pytest

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): exit criterion, summarized at the end of the run")
    config.stash[ACCEPTANCE_KEY] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        item.config.stash[ACCEPTANCE_KEY].append((marker.args[0], status, item.name))


def pytest_terminal_summary(terminalreporter, config):
    rows = config.stash.get(ACCEPTANCE_KEY, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, test in rows:
        terminalreporter.write_line(f"{status:4}  {name}  ({test})")


@pytest.fixture
def ria_file(tmp_path):
    lines = [
        json.dumps({"title": "Курс доллара подрос", "text": "<p>Курс доллара подрос на 1 коп.</p> <p>Торги идут.</p>"},
                   ensure_ascii=False),
        "{not json",
        json.dumps({"title": "Без текста"}, ensure_ascii=False),
        json.dumps({"title": "т", "text": "<p>а б</p>"}, ensure_ascii=False),
    ]
    path = tmp_path / "ria.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path

import pytest

_RESULTS = pytest.StashKey[dict]()


class Criterion:
    """Collects the sub-checks of one acceptance criterion before asserting."""

    def __init__(self, key: str, title: str):
        self.key = key
        self.title = title
        self.checks: list[tuple[str, bool, str]] = []
        self.finished = False

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return self.finished and all(ok for _, ok, _ in self.checks)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        failed = [name for name, ok, _ in self.checks if not ok]
        if not self.finished:
            failed.append("aborted")
        suffix = f" [failed: {', '.join(failed)}]" if failed else ""
        return f"{self.key} {verdict}  {self.title}{suffix}"

    def detail_lines(self) -> list[str]:
        return [f"    {'ok  ' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in self.checks]

    def conclude(self) -> None:
        self.finished = True
        print(self.line())
        for text in self.detail_lines():
            print(text)
        bad = [f"{name} ({detail})" for name, ok, detail in self.checks if not ok]
        assert not bad, "; ".join(bad)


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    def factory(key: str, title: str) -> Criterion:
        crit = Criterion(key, title)
        request.config.stash[_RESULTS][key] = crit
        return crit

    return factory


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(results, key=lambda k: int(k[1:])):
        crit = results[key]
        terminalreporter.write_line(crit.line())
        for text in crit.detail_lines():
            terminalreporter.write_line(text)

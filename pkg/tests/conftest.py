import pytest

CRITERIA = {
    1: "decode inequality on the five built-in triples",
    2: "binary logistic closed-form point and tightness ratio",
    3: "gradient identity and strong-convexity floor",
    4: "vertex oracles against enumeration",
    5: "hull decomposition and sampling frequencies",
    6: "multiclass expected regret bound at every prefix",
    7: "multilabel and ranking expected regret bounds",
    8: "regret certificates with zero violations",
    9: "adversarial stream regret floor",
    10: "high-probability tail of realized regret",
    11: "online-to-batch holdout risk",
    12: "byte-identical traces under a fixed seed",
}


def pytest_configure(config):
    config._acceptance_details = {}


@pytest.fixture(scope="session")
def acceptance(request):
    """Shared store for the criterion results printed after the run."""
    return request.config._acceptance_details


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    details = getattr(config, "_acceptance_details", None)
    if not details:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        entry = details.get(num)
        if entry is None:
            terminalreporter.write_line(
                f"criterion {num:2d} ({CRITERIA[num]}): NOT RUN"
            )
            continue
        ok, detail = entry
        word = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"criterion {num:2d} ({CRITERIA[num]}): {word} - {detail}"
        )

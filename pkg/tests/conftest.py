import pytest

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    props = dict(item.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        if report.passed:
            _ACCEPTANCE[props["criterion"]] = ("PASS", props.get("detail", ""))
        else:
            message = str(call.excinfo.value).splitlines()[0] if call.excinfo else "failed"
            _ACCEPTANCE[props["criterion"]] = ("FAIL", message)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        status, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{status}  {name}: {detail}")

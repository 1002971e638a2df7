def within_sigma(observed, mean, sd, nsigma=4.0):
    return abs(observed - mean) <= nsigma * sd


def pytest_terminal_summary(terminalreporter):
    lines = []
    for status in ("passed", "failed"):
        for report in terminalreporter.stats.get(status, []):
            if report.when != "call" or "test_acceptance.py" not in report.nodeid:
                continue
            props = dict(report.user_properties)
            label = props.get("criterion", report.nodeid.split("::")[-1])
            verdict = "PASS" if status == "passed" else "FAIL"
            lines.append((report.nodeid, f"{verdict}  {label}: {props.get('detail', '')}"))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)

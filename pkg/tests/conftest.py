def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the one-line acceptance verdicts after the test run."""
    try:
        import test_acceptance
    except ImportError:
        return
    verdicts = getattr(test_acceptance, "VERDICTS", [])
    if not verdicts:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria", sep="-")
    for line in verdicts:
        terminalreporter.write_line(line)

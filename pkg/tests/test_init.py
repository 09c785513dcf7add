import logging
import subprocess
import sys

import handeyecov


class TestPackage:
    def test_module_name_intact(self):
        assert handeyecov.__name__ == "handeyecov"
        assert handeyecov.__title__ == "HandEyeCov"

    def test_data_dir_named_after_title(self):
        assert "HandEyeCov" in handeyecov._dirs.user_data_dir

    def test_cli_imports_in_fresh_interpreter(self):
        result = subprocess.run(
            [sys.executable, "-c", "import handeyecov.cli"], capture_output=True, text=True
        )
        assert result.returncode == 0, result.stderr

    def test_loglevel_from_environment(self, monkeypatch):
        monkeypatch.setenv("HANDEYECOV_LOGLEVEL", "debug")
        assert handeyecov.get_loglevel() == logging.DEBUG
        monkeypatch.setenv("HANDEYECOV_LOGLEVEL", "nonsense")
        assert handeyecov.get_loglevel() == logging.WARNING

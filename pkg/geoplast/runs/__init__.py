"""Run-directory writers and figures."""

"""Command-line subcommands, one module each"""

from app.commands import cns, clt, covariance, demo_basis, diagnostics, replay, rwm, universality

COMMANDS = (cns, universality, clt, covariance, diagnostics, rwm, demo_basis, replay)

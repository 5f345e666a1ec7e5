from relaynet.cli import run

run()

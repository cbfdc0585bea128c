"""Runtime layer: settings, logging, worker pool, verification suites and the CLI."""

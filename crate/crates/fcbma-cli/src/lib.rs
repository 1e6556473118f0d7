//! Library surface of the CLI pipeline (exposed for integration tests).

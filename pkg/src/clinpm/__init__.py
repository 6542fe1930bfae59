"""Clinical process mining with multi-model LLM report orchestration."""

"""Out-of-process agent runtime.

Speaks newline-delimited JSON frames on stdio: receives execute_agent
requests, runs the contained forward() under resource limits, proxies its
model queries back as fm_query frames, and answers with a done frame.
"""

__version__ = "0.1.0"

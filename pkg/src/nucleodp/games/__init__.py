"""Game plug-ins: compact representations with min-excess DP builders."""

"""Minimal page served at / when no UI bundle directory is configured."""

FALLBACK_PAGE = """<!doctype html>
<html>
<head><meta charset="utf-8"><title>Review service</title></head>
<body>
<h1>Review service is running</h1>
<p>No UI bundle is configured (start with <code>--static DIR</code> to serve one).</p>
<p>API endpoints:</p>
<ul>
<li><code>GET /api/items?annotator=ID</code> — next unjudged review item</li>
<li><code>POST /api/items/{record_id}/judgment</code> — submit the three criteria booleans</li>
<li><code>GET /api/agreement</code> — live validity rate and agreement statistic</li>
<li><code>GET /api/progress</code> — per-annotator judged counts</li>
<li><code>GET /api/images/{content_id}</code> — image bytes</li>
</ul>
</body>
</html>
"""

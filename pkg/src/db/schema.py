"""SQL schema constants for the repair ledger."""

CREATE_EVENTS = """
CREATE TABLE IF NOT EXISTS events (
    id                INTEGER PRIMARY KEY AUTOINCREMENT,
    command           TEXT NOT NULL,
    code              TEXT NOT NULL,
    k                 INTEGER NOT NULL,
    r                 INTEGER NOT NULL,
    d                 INTEGER NOT NULL,
    p                 INTEGER NOT NULL,
    column_index      INTEGER,
    stripes           INTEGER DEFAULT 0,
    bits_read         INTEGER DEFAULT 0,
    bits_transferred  INTEGER DEFAULT 0,
    optimal_bits      INTEGER DEFAULT 0,
    ratio_num         INTEGER DEFAULT 0,
    ratio_den         INTEGER DEFAULT 1,
    uncoded           INTEGER DEFAULT 1,
    report_json       TEXT DEFAULT '',
    outcome           TEXT DEFAULT 'ok',
    detail            TEXT DEFAULT '',
    recorded_at       TIMESTAMP DEFAULT CURRENT_TIMESTAMP
);
"""

CREATE_INDEX_COMMAND = "CREATE INDEX IF NOT EXISTS idx_events_command ON events(command);"
CREATE_INDEX_CODE = "CREATE INDEX IF NOT EXISTS idx_events_code ON events(code);"

ALL_DDL = [
    CREATE_EVENTS,
    CREATE_INDEX_COMMAND,
    CREATE_INDEX_CODE,
]

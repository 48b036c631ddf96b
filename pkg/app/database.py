import logging
import sqlite3
from pathlib import Path

logger = logging.getLogger('smfg-lab.database')

RUN_STATUSES = ('running', 'completed', 'failed', 'interrupted')


class RunRegistry:
    """SQLite registry of experiment runs."""

    def __init__(self, db_path='runs/registry.db'):
        self.db_path = db_path
        self.conn = None
        self._connect()
        self._create_tables()

    def _connect(self):
        """Connect to SQLite database."""
        if str(self.db_path) != ':memory:':
            Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(str(self.db_path))
        self.conn.row_factory = sqlite3.Row

    def _create_tables(self):
        """Create database schema if not exists."""
        cursor = self.conn.cursor()

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id TEXT NOT NULL,
                command TEXT NOT NULL,
                algo TEXT NOT NULL,
                seed INTEGER,
                config_digest TEXT NOT NULL,
                out_dir TEXT,
                checkpoint_hash TEXT,
                started TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                status TEXT DEFAULT 'running',
                error_message TEXT
            )
        ''')

        cursor.execute('''
            CREATE INDEX IF NOT EXISTS idx_config_digest
            ON runs(config_digest, command)
        ''')

        cursor.execute('''
            CREATE INDEX IF NOT EXISTS idx_status
            ON runs(status)
        ''')

        self.conn.commit()

    def is_completed(self, config_digest, command=None):
        """Check whether a run with this configuration digest already completed."""
        cursor = self.conn.cursor()
        if command:
            cursor.execute('''
                SELECT id FROM runs
                WHERE config_digest = ? AND command = ? AND status = 'completed'
            ''', (config_digest, command))
        else:
            cursor.execute('''
                SELECT id FROM runs WHERE config_digest = ? AND status = 'completed'
            ''', (config_digest,))
        return cursor.fetchone() is not None

    def add_run(self, run_id, command, algo, seed, config_digest, out_dir, status='running'):
        """Register a run and return its row id."""
        if status not in RUN_STATUSES:
            raise ValueError(f"Unknown run status '{status}'")
        cursor = self.conn.cursor()
        cursor.execute('''
            INSERT INTO runs
            (run_id, command, algo, seed, config_digest, out_dir, status)
            VALUES (?, ?, ?, ?, ?, ?, ?)
        ''', (run_id, command, algo, seed, config_digest, str(out_dir), status))
        self.conn.commit()
        return cursor.lastrowid

    def update_status(self, row_id, status, error_message=None, checkpoint_hash=None):
        """Update run status; the checkpoint hash is kept when not given."""
        if status not in RUN_STATUSES:
            raise ValueError(f"Unknown run status '{status}'")
        cursor = self.conn.cursor()
        cursor.execute('''
            UPDATE runs
            SET status = ?, error_message = ?, checkpoint_hash = COALESCE(?, checkpoint_hash)
            WHERE id = ?
        ''', (status, error_message, checkpoint_hash, row_id))
        self.conn.commit()
        logger.debug(f"Run row {row_id} -> {status}")

    def get_run(self, row_id):
        cursor = self.conn.cursor()
        cursor.execute('SELECT * FROM runs WHERE id = ?', (row_id,))
        return cursor.fetchone()

    def get_runs(self, status=None):
        """Get all runs, optionally filtered by status, oldest first."""
        cursor = self.conn.cursor()
        if status:
            cursor.execute('''
                SELECT * FROM runs
                WHERE status = ?
                ORDER BY id
            ''', (status,))
        else:
            cursor.execute('SELECT * FROM runs ORDER BY id')
        return cursor.fetchall()

    def close(self):
        """Close database connection."""
        if self.conn:
            self.conn.close()

#!/usr/bin/env python3
# -*- coding: utf-8
"""
Logging System for Strikebench
File + console logging for every run, with an optional PostgreSQL sink for
run logs and performance metrics (enabled by STRIKEBENCH_DATABASE_URL)
"""

import psycopg2
import os
import sys
import json
import logging
import threading
from typing import Dict, Optional
from dotenv import load_dotenv

# Load environment variables
load_dotenv('.env.local')

_configure_lock = threading.Lock()
_configured = False


class DatabaseLogger:
    def __init__(self, database_url: str = None):
        """Initialize database logger; stays disabled without a database URL"""
        self.database_url = database_url or os.getenv('STRIKEBENCH_DATABASE_URL')
        self.enabled = bool(self.database_url)
        if self.enabled:
            self.enabled = self.init_logs_table()

    def get_db_connection(self):
        """Get database connection"""
        try:
            return psycopg2.connect(self.database_url)
        except Exception as e:
            print("Database connection failed: " + str(e), file=sys.stderr)
            return None

    def init_logs_table(self) -> bool:
        """Create run log tables if they don't exist"""
        try:
            conn = self.get_db_connection()
            if not conn:
                return False

            cursor = conn.cursor()

            cursor.execute("""
                CREATE TABLE IF NOT EXISTS run_logs (
                    id SERIAL PRIMARY KEY,
                    timestamp TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    level VARCHAR(20) NOT NULL,
                    component VARCHAR(80) NOT NULL,
                    message TEXT NOT NULL,
                    details JSONB
                )
            """)

            cursor.execute("""
                CREATE TABLE IF NOT EXISTS run_metrics (
                    id SERIAL PRIMARY KEY,
                    timestamp TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    metric_name VARCHAR(100) NOT NULL,
                    metric_value DOUBLE PRECISION NOT NULL,
                    component VARCHAR(80) NOT NULL,
                    details JSONB
                )
            """)

            conn.commit()
            conn.close()
            return True

        except Exception as e:
            print("Error initializing logging tables: " + str(e), file=sys.stderr)
            return False

    def log(self, level: str, component: str, message: str, details: Dict = None) -> bool:
        """Log a message to database"""
        if not self.enabled:
            return False
        try:
            conn = self.get_db_connection()
            if not conn:
                return False

            cursor = conn.cursor()
            cursor.execute("""
                INSERT INTO run_logs (level, component, message, details)
                VALUES (%s, %s, %s, %s)
            """, (level, component, message, json.dumps(details, default=str) if details else None))

            conn.commit()
            conn.close()
            return True

        except Exception as e:
            print("Error logging to database: " + str(e), file=sys.stderr)
            return False

    def log_performance(self, metric_name: str, metric_value: float, component: str, details: Dict = None) -> bool:
        """Log performance metrics"""
        if not self.enabled:
            return False
        try:
            conn = self.get_db_connection()
            if not conn:
                return False

            cursor = conn.cursor()
            cursor.execute("""
                INSERT INTO run_metrics (metric_name, metric_value, component, details)
                VALUES (%s, %s, %s, %s)
            """, (metric_name, float(metric_value), component, json.dumps(details, default=str) if details else None))

            conn.commit()
            conn.close()
            return True

        except Exception as e:
            print("Error logging performance metrics: " + str(e), file=sys.stderr)
            return False


def _configure_root_logging():
    """Attach the file and console handlers once per process"""
    global _configured
    with _configure_lock:
        if _configured:
            return
        level_name = os.getenv('STRIKEBENCH_LOG_LEVEL', 'INFO').upper()
        handlers = [logging.StreamHandler(sys.stderr)]
        log_file = os.getenv('STRIKEBENCH_LOG_FILE', 'strikebench.log')
        if log_file:
            handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
        logging.basicConfig(
            level=getattr(logging, level_name, logging.INFO),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=handlers
        )
        _configured = True


class EnhancedLogger:
    """Enhanced logger that combines file/console and database logging"""

    def __init__(self, name: str, database_url: str = None):
        self.name = name
        self._database_url = database_url
        self._db_logger: Optional[DatabaseLogger] = None
        _configure_root_logging()
        self.logger = logging.getLogger(name)

    @property
    def db_logger(self) -> DatabaseLogger:
        # connecting is deferred until the first record is written
        if self._db_logger is None:
            self._db_logger = DatabaseLogger(self._database_url)
        return self._db_logger

    def info(self, message: str, details: Dict = None):
        """Log info message"""
        self.logger.info(message)
        self.db_logger.log('INFO', self.name, message, details)

    def error(self, message: str, details: Dict = None):
        """Log error message"""
        self.logger.error(message)
        self.db_logger.log('ERROR', self.name, message, details)

    def warning(self, message: str, details: Dict = None):
        """Log warning message"""
        self.logger.warning(message)
        self.db_logger.log('WARNING', self.name, message, details)

    def debug(self, message: str, details: Dict = None):
        """Log debug message"""
        self.logger.debug(message)

    def performance(self, metric_name: str, value: float, details: Dict = None):
        """Log performance metric"""
        self.logger.info("metric " + metric_name + " = " + str(round(value, 4)))
        self.db_logger.log_performance(metric_name, value, self.name, details)


def get_logger(name: str) -> EnhancedLogger:
    """Get enhanced logger instance"""
    return EnhancedLogger(name)

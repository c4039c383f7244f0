#!/usr/bin/env python3
"""Development setup: create the run ledger and warm the soliton profile cache.

This script:
1. Creates the ledger tables
2. Switches SQLite ledgers to WAL journaling
3. Solves Q for the standard powers unless --skip-profiles is given
"""
import sqlite3
import sys
from pathlib import Path

# Add project root to path so we can import magnls modules
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from magnls import configure_logging, create_app, db  # noqa: E402
from magnls.models.grid import MASS_CRITICAL_ALPHA  # noqa: E402
from magnls.services.soliton_service import SolitonService  # noqa: E402
from magnls.utils.errors import MagnlsError  # noqa: E402

WARM_ALPHAS = (MASS_CRITICAL_ALPHA, 2.0, 3.0)
SQLITE_PRAGMAS = (("journal_mode", "WAL"), ("synchronous", "NORMAL"))


def apply_sqlite_pragmas(db_path):
    """Apply the ledger's SQLite settings; returns {pragma: current value}."""
    results = {}
    try:
        conn = sqlite3.connect(db_path)
    except sqlite3.Error as e:
        print(f"Failed to connect to database: {e}")
        return results
    try:
        cursor = conn.cursor()
        for setting, value in SQLITE_PRAGMAS:
            cursor.execute(f"PRAGMA {setting} = {value};")
            cursor.execute(f"PRAGMA {setting};")
            current = cursor.fetchone()
            results[setting] = current[0] if current else None
            print(f"  PRAGMA {setting} = {value} -> {results[setting]}")
        conn.commit()
    except sqlite3.Error as e:
        print(f"Failed to apply SQLite settings: {e}")
    finally:
        conn.close()
    return results


def warm_profiles(tol=1e-10):
    """Solve and cache Q for each standard power; returns the number solved."""
    solved = 0
    for alpha in WARM_ALPHAS:
        try:
            _, constants = SolitonService.get_profile(alpha, tol)
        except MagnlsError as e:
            print(f"  alpha={alpha:.6f}: failed ({e})")
            continue
        solved += 1
        print(f"  alpha={alpha:.6f}: M(Q)={constants.mass_Q:.10f}, C_opt={constants.c_opt:.10f}")
    return solved


def main():
    """Main initialization function."""
    print("Starting magnls initialization...")
    app = create_app()
    configure_logging(app.config['MAGNLS_LOG_LEVEL'])

    with app.app_context():
        print("Creating ledger tables...")
        db.create_all()

        db_uri = app.config['SQLALCHEMY_DATABASE_URI']
        if db_uri.startswith('sqlite:///'):
            db_path = db_uri[len('sqlite:///'):]
            apply_sqlite_pragmas(db_path)
            print(f"Ledger initialized at: {db_path}")
        else:
            print(f"Ledger initialized at: {db_uri}")

        if "--skip-profiles" not in sys.argv:
            print("Warming the soliton profile cache...")
            solved = warm_profiles()
            print(f"{solved}/{len(WARM_ALPHAS)} profiles cached in {app.config['MAGNLS_CACHE_DIR']}")

    print("Initialization complete")


if __name__ == "__main__":
    main()

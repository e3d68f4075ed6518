import logging
from datetime import datetime
from typing import List, Optional

from sqlalchemy import select
from sqlalchemy.exc import SQLAlchemyError

from wigner_solver.config import get_settings
from wigner_solver.errors import OutputError
from wigner_solver.models.database import RunLog, get_session_factory, init_db
from wigner_solver.models.schemas import RunRecord

logger = logging.getLogger(__name__)


class RunLedger:
    """
    SQLite record of every CLI invocation.

    The ledger is bookkeeping only: result files never depend on it.
    """

    def __init__(self, database_url: Optional[str] = None):
        self._database_url = database_url or get_settings().database_url
        self._ready = False

    def _sessions(self):
        if not self._ready:
            init_db(self._database_url)
            self._ready = True
        return get_session_factory(self._database_url)

    def record(
        self,
        command: str,
        started_at: datetime,
        wall_clock_s: float,
        status: str = "ok",
        preset: Optional[str] = None,
        manifest_hash: str = "",
        output_dir: str = "",
        n_steps: int = 0,
        final_delta: Optional[float] = None,
        message: Optional[str] = None,
    ) -> RunRecord:
        """
        Store one invocation.

        Returns:
            The stored record with its id
        """
        entry = RunLog(
            command=command,
            preset=preset,
            manifest_hash=manifest_hash,
            output_dir=output_dir,
            started_at=started_at,
            wall_clock_s=wall_clock_s,
            n_steps=n_steps,
            final_delta=final_delta,
            status=status,
            message=message,
        )
        try:
            with self._sessions()() as session:
                session.add(entry)
                session.commit()
                session.refresh(entry)
        except SQLAlchemyError as exc:
            raise OutputError(f"could not write the run ledger: {exc}") from exc
        logger.debug("ledger entry %d: %s %s", entry.id, command, status)
        return RunRecord.model_validate(entry)

    def history(self, limit: int = 20, command: Optional[str] = None) -> List[RunRecord]:
        """
        Most recent invocations first.

        Args:
            limit: Maximum number of records to return
            command: Only return invocations of this subcommand
        """
        query = select(RunLog).order_by(RunLog.started_at.desc(), RunLog.id.desc()).limit(limit)
        if command:
            query = query.where(RunLog.command == command)
        try:
            with self._sessions()() as session:
                rows = session.execute(query).scalars().all()
        except SQLAlchemyError as exc:
            raise OutputError(f"could not read the run ledger: {exc}") from exc
        return [RunRecord.model_validate(row) for row in rows]

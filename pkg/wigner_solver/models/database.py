from sqlalchemy import Column, Integer, String, Float, DateTime, Text, create_engine
from sqlalchemy.orm import declarative_base, sessionmaker
from datetime import datetime

from wigner_solver.config import get_settings

Base = declarative_base()


class RunLog(Base):
    """One CLI invocation: what ran, where it wrote, how it ended."""
    __tablename__ = "run_logs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String(20), index=True, nullable=False)  # run, converge, stability, eigen
    preset = Column(String(50), nullable=True)
    manifest_hash = Column(String(64), index=True, nullable=False, default="")
    output_dir = Column(String(500), nullable=False, default="")
    started_at = Column(DateTime, default=datetime.now)
    wall_clock_s = Column(Float, default=0.0)
    n_steps = Column(Integer, default=0)
    final_delta = Column(Float, nullable=True)
    status = Column(String(20), nullable=False, default="ok")  # ok, config_error, numerical_error, io_error
    message = Column(Text, nullable=True)

    def __repr__(self):
        return f"<RunLog(id={self.id}, command={self.command}, status={self.status})>"


_engines = {}


def get_engine(database_url: str = None):
    """Engine for the run ledger, one per URL."""
    url = database_url or get_settings().database_url
    if url not in _engines:
        _engines[url] = create_engine(url, echo=get_settings().debug)
    return _engines[url]


def get_session_factory(database_url: str = None):
    return sessionmaker(bind=get_engine(database_url), expire_on_commit=False)


def init_db(database_url: str = None):
    """Initialize database tables."""
    Base.metadata.create_all(get_engine(database_url))

"""Database models and setup for recorded solver runs."""
import hashlib
import uuid
from datetime import datetime, timezone
from typing import List, Optional

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text, create_engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from config import DATABASE_URL

engine = create_engine(DATABASE_URL, connect_args={"check_same_thread": False})
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
Base = declarative_base()


def gen_id():
    return str(uuid.uuid4())[:8]


def utcnow():
    return datetime.now(timezone.utc)


def digest(payload: str) -> str:
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


class SolverRun(Base):
    __tablename__ = "solver_runs"

    id = Column(String, primary_key=True, default=gen_id)
    command = Column(String, nullable=False)  # validate, curvature, delaunayize, flow, canonical, equiv, selftest
    input_digest = Column(String, nullable=False, default="")
    status = Column(String, nullable=False)  # ok, or the error class name
    num_vertices = Column(Integer, nullable=True)
    num_edges = Column(Integer, nullable=True)
    euler_characteristic = Column(Integer, nullable=True)
    iterations = Column(Integer, nullable=True)
    flips = Column(Integer, nullable=True)
    max_error = Column(Float, nullable=True)
    message = Column(Text, nullable=True)
    created_at = Column(DateTime, default=utcnow)


class TraceRow(Base):
    __tablename__ = "trace_rows"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String, ForeignKey("solver_runs.id"), nullable=False)
    iter = Column(Integer, nullable=False)
    max_err = Column(Float, nullable=False)
    merit = Column(Float, nullable=False)
    flips = Column(Integer, default=0)
    step = Column(Float, default=0.0)
    num_edges = Column(Integer, nullable=False)
    gauss_bonnet = Column(Float, default=0.0)


def init_db():
    Base.metadata.create_all(bind=engine)


def get_db():
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


def record_run(command: str, status: str, input_digest: str = "", trace_rows: Optional[List[dict]] = None,
               **fields) -> str:
    """Store one run and its trace; returns the run id."""
    db = SessionLocal()
    try:
        run = SolverRun(command=command, status=status, input_digest=input_digest, **fields)
        db.add(run)
        db.flush()
        for row in trace_rows or []:
            db.add(TraceRow(run_id=run.id, **row))
        db.commit()
        return run.id
    finally:
        db.close()


def list_runs(limit: int = 50, db: Optional[Session] = None) -> List[SolverRun]:
    """Newest runs first; uses the given session or opens its own."""
    session = db or SessionLocal()
    try:
        return session.query(SolverRun).order_by(SolverRun.created_at.desc()).limit(limit).all()
    finally:
        if db is None:
            session.close()


def trace_for(run_id: str) -> List[TraceRow]:
    db = SessionLocal()
    try:
        return db.query(TraceRow).filter(TraceRow.run_id == run_id).order_by(TraceRow.iter).all()
    finally:
        db.close()

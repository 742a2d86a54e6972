//! Annotation service: an append-only JSONL event log in front of
//! [`AnnotationState`], plus the HTTP API in [`http`].
//!
//! Writes go through one mutex: plan against the current snapshot, append
//! the event to the log, then apply it. Readers clone an `Arc` of the
//! snapshot and never wait on the log.

pub mod http;

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use infolab_core::annotate::{
    agreement, Agreement, AnnotateError, AnnotationRecord, AnnotationState, LogEvent, Measure,
    Provenance, Scheme, TaskPayload, TaskSet,
};

pub const LOG_FILE: &str = "annotations.log.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error("annotation log: {0}")]
    Io(#[from] std::io::Error),
    #[error("annotation log line {line}: {message}")]
    Log { line: usize, message: String },
}

/// Milliseconds since the Unix epoch.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }
}

/// Starts at a fixed instant and ticks one millisecond per reading.
pub struct StepClock(AtomicU64);

impl StepClock {
    pub fn new(start: u64) -> Self {
        Self(AtomicU64::new(start))
    }
}

impl Clock for StepClock {
    fn now_ms(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed)
    }
}

/// Read a task set file (`{"id": .., "tasks": [..]}`), optionally stamping
/// every task with one provenance.
pub fn load_task_set(path: &Path, provenance: Option<Provenance>) -> Result<TaskSet, crate::Error> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    let mut set: TaskSet = serde_json::from_str(&text).map_err(|e| {
        crate::Error::format(path, crate::FormatError::parse(e.line(), e.to_string()))
    })?;
    if let Some(p) = provenance {
        set.tasks.iter_mut().for_each(|t| t.provenance = p);
    }
    Ok(set)
}

struct LogWriter {
    file: File,
    fsync: bool,
}

pub struct AnnotationService {
    log_path: PathBuf,
    writer: Mutex<LogWriter>,
    snapshot: RwLock<Arc<AnnotationState>>,
    clock: Arc<dyn Clock>,
}

/// Parse the log. A final line without its newline is a torn write and is
/// dropped; the returned length is where the valid prefix ends.
fn read_log(path: &Path) -> Result<(Vec<LogEvent>, u64), ServiceError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut events = Vec::new();
    let mut valid = 0u64;
    let mut buf = String::new();
    for line_no in 1.. {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        if !buf.ends_with('\n') {
            log::warn!("{}: dropping torn final line {line_no}", path.display());
            break;
        }
        if !buf.trim().is_empty() {
            let event = serde_json::from_str(buf.trim_end()).map_err(|e| ServiceError::Log {
                line: line_no,
                message: e.to_string(),
            })?;
            events.push(event);
        }
        valid += n as u64;
    }
    Ok((events, valid))
}

impl AnnotationService {
    /// Open (or create) the log under `data_dir` and replay it.
    pub fn open(
        data_dir: &Path,
        task_sets: Vec<TaskSet>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(data_dir)?;
        let log_path = data_dir.join(LOG_FILE);
        let (events, valid) = read_log(&log_path)?;
        let state = AnnotationState::replay(task_sets, &events)?;
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .write(true)
            .truncate(false)
            .open(&log_path)?;
        file.set_len(valid)?;
        file.seek(SeekFrom::End(0))?;
        log::info!(
            "replayed {} events from {}",
            events.len(),
            log_path.display()
        );
        Ok(Self {
            log_path,
            writer: Mutex::new(LogWriter { file, fsync: false }),
            snapshot: RwLock::new(Arc::new(state)),
            clock,
        })
    }

    /// Sync the log to disk after every append.
    pub fn with_fsync(self, fsync: bool) -> Self {
        self.writer.lock().expect("log writer poisoned").fsync = fsync;
        self
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    pub fn snapshot(&self) -> Arc<AnnotationState> {
        self.snapshot
            .read()
            .expect("snapshot lock poisoned")
            .clone()
    }

    fn commit<T>(
        &self,
        plan: impl FnOnce(&AnnotationState, u64) -> Result<(T, Option<LogEvent>), AnnotateError>,
    ) -> Result<T, ServiceError> {
        let mut writer = self.writer.lock().expect("log writer poisoned");
        let current = self.snapshot();
        let (out, event) = plan(&current, self.clock.now_ms())?;
        drop(current);
        if let Some(event) = event {
            let mut line = serde_json::to_vec(&event).expect("events serialize");
            line.push(b'\n');
            writer.file.write_all(&line)?;
            writer.file.flush()?;
            if writer.fsync {
                writer.file.sync_data()?;
            }
            let mut guard = self.snapshot.write().expect("snapshot lock poisoned");
            Arc::make_mut(&mut guard).apply(&event)?;
        }
        Ok(out)
    }

    pub fn create_session(
        &self,
        annotator: &str,
        scheme: Scheme,
        task_set: &str,
        seed: u64,
    ) -> Result<String, ServiceError> {
        self.commit(|s, ts| {
            let event = s.plan_session(annotator, scheme, task_set, seed, ts)?;
            let LogEvent::Session { session_id, .. } = &event else {
                unreachable!("plan_session builds a session event")
            };
            Ok((session_id.clone(), Some(event)))
        })
    }

    pub fn next_task(&self, session_id: &str) -> Result<TaskPayload, ServiceError> {
        Ok(self.snapshot().next_task(session_id)?)
    }

    pub fn reveal(&self, session_id: &str, task_id: &str) -> Result<String, ServiceError> {
        self.commit(|s, ts| {
            let event = s.plan_reveal(session_id, task_id, ts)?;
            let form = s
                .task(task_id)
                .map(|t| t.target_form().to_string())
                .ok_or_else(|| AnnotateError::UnknownTask(task_id.to_string()))?;
            Ok((form, event))
        })
    }

    pub fn submit_score(
        &self,
        session_id: &str,
        task_id: &str,
        measure: Measure,
        score: i64,
    ) -> Result<u64, ServiceError> {
        self.commit(|s, ts| {
            let event = s.plan_score(session_id, task_id, measure, score, ts)?;
            let LogEvent::Score { record, .. } = &event else {
                unreachable!("plan_score builds a score event")
            };
            Ok((record.seq, Some(event)))
        })
    }

    pub fn agreement(
        &self,
        task_set: &str,
        a: &str,
        b: &str,
        measure: Measure,
    ) -> Result<Agreement, ServiceError> {
        let state = self.snapshot();
        if state.task_set(task_set).is_none() {
            return Err(AnnotateError::UnknownTaskSet(task_set.to_string()).into());
        }
        Ok(agreement(&state, task_set, a, b, measure)?)
    }

    pub fn export(&self, task_set: Option<&str>) -> Result<Vec<AnnotationRecord>, ServiceError> {
        let state = self.snapshot();
        if let Some(id) = task_set {
            if state.task_set(id).is_none() {
                return Err(AnnotateError::UnknownTaskSet(id.to_string()).into());
            }
        }
        Ok(state.export(task_set).into_iter().cloned().collect())
    }
}

/// Records as JSONL, one per line in seq order.
pub fn export_jsonl(records: &[AnnotationRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    crate::jsonl::write_jsonl(&mut out, records).expect("writing to memory");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use infolab_core::annotate::AnnotationTask;
    use infolab_core::corpus::Pos;

    fn set(n: usize) -> TaskSet {
        let tasks = (0..n)
            .map(|i| AnnotationTask {
                task_id: format!("t{i}"),
                tokens: vec!["the".into(), "bank".into(), "closed".into()],
                position: 1,
                pos: Pos::Noun,
                provenance: Provenance::Corpus,
            })
            .collect();
        TaskSet {
            id: "s".into(),
            tasks,
        }
    }

    fn open(dir: &Path, n: usize) -> AnnotationService {
        AnnotationService::open(dir, vec![set(n)], Arc::new(StepClock::new(1000))).unwrap()
    }

    fn first_task(svc: &AnnotationService, sid: &str) -> String {
        match svc.next_task(sid).unwrap() {
            TaskPayload::Masked { task_id, .. } | TaskPayload::Info3 { task_id, .. } => task_id,
            other => panic!("unexpected payload {other:?}"),
        }
    }

    #[test]
    fn protocol_walk_persists_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let svc = open(dir.path(), 3);
        let sid = svc
            .create_session("ann1", Scheme::TwoPhase, "s", 4)
            .unwrap();
        let t = first_task(&svc, &sid);
        assert!(matches!(
            svc.reveal(&sid, &t),
            Err(ServiceError::Annotate(AnnotateError::Protocol(_)))
        ));
        assert!(matches!(
            svc.submit_score(&sid, &t, Measure::Info2, 3),
            Err(ServiceError::Annotate(AnnotateError::Protocol(_)))
        ));
        assert_eq!(svc.submit_score(&sid, &t, Measure::Info1, 7).unwrap(), 1);
        assert_eq!(svc.reveal(&sid, &t).unwrap(), "bank");
        assert_eq!(svc.reveal(&sid, &t).unwrap(), "bank");
        assert_eq!(svc.submit_score(&sid, &t, Measure::Info2, 3).unwrap(), 2);
        let before = svc.snapshot();
        drop(svc);
        let again = open(dir.path(), 3);
        assert_eq!(*again.snapshot(), *before);
        let lines = std::fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
        assert_eq!(lines.lines().count(), 4, "idempotent reveal is logged once");
    }

    #[test]
    fn torn_final_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let svc = open(dir.path(), 2);
        let sid = svc.create_session("a", Scheme::Info3, "s", 1).unwrap();
        let t = first_task(&svc, &sid);
        svc.submit_score(&sid, &t, Measure::Info3, 4).unwrap();
        let good = svc.snapshot();
        drop(svc);
        let path = dir.path().join(LOG_FILE);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"event\":\"score\",\"sess").unwrap();
        drop(f);
        let svc = open(dir.path(), 2);
        assert_eq!(*svc.snapshot(), *good);
        // the torn bytes are gone, so the next append starts on a clean line
        let t2 = first_task(&svc, &sid);
        svc.submit_score(&sid, &t2, Measure::Info3, 2).unwrap();
        drop(svc);
        assert_eq!(open(dir.path(), 2).snapshot().records().len(), 2);
    }

    #[test]
    fn corrupt_inner_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(LOG_FILE), "garbage\n{}\n").unwrap();
        let err = AnnotationService::open(dir.path(), vec![set(1)], Arc::new(SystemClock))
            .err()
            .unwrap();
        assert!(matches!(err, ServiceError::Log { line: 1, .. }));
    }

    #[test]
    fn export_is_seq_ordered() {
        let dir = tempfile::tempdir().unwrap();
        let svc = open(dir.path(), 2);
        assert!(svc.export(Some("s")).unwrap().is_empty());
        assert!(svc.export(Some("nope")).is_err());
        let sid = svc.create_session("a", Scheme::Info3, "s", 1).unwrap();
        for _ in 0..2 {
            let t = first_task(&svc, &sid);
            svc.submit_score(&sid, &t, Measure::Info3, 5).unwrap();
        }
        let seqs: Vec<u64> = svc
            .export(Some("s"))
            .unwrap()
            .iter()
            .map(|r| r.seq)
            .collect();
        assert_eq!(seqs, vec![1, 2]);
    }
}

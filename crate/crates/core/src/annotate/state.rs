use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    info3_guidelines, AnnotateError, AnnotationRecord, AnnotationTask, LogEvent, Measure, Scheme,
    TaskPayload, TaskSet,
};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub annotator: String,
    pub scheme: Scheme,
    pub task_set: String,
    pub seed: u64,
    pub queue: Vec<String>,
    /// Index of the current task; tasks the annotator already finished
    /// under this scheme are skipped.
    pub cursor: usize,
    pub revealed: BTreeSet<String>,
}

/// Task sets, sessions and the record log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationState {
    task_sets: BTreeMap<String, TaskSet>,
    tasks: BTreeMap<String, (String, usize)>,
    sessions: BTreeMap<String, Session>,
    records: Vec<AnnotationRecord>,
    keys: BTreeSet<(String, String, Measure)>,
    sessions_created: u64,
}

type Key = (String, String, Measure);

fn key(annotator: &str, task_id: &str, measure: Measure) -> Key {
    (annotator.to_string(), task_id.to_string(), measure)
}

impl AnnotationState {
    pub fn new(task_sets: Vec<TaskSet>) -> Result<Self, AnnotateError> {
        let mut state = Self::default();
        for set in task_sets {
            state.add_task_set(set)?;
        }
        Ok(state)
    }

    /// Register a task set. Task ids are unique across all sets.
    pub fn add_task_set(&mut self, set: TaskSet) -> Result<(), AnnotateError> {
        if self.task_sets.contains_key(&set.id) {
            return Err(AnnotateError::DuplicateTaskSet(set.id));
        }
        let mut seen = BTreeSet::new();
        for task in &set.tasks {
            task.validate()?;
            if self.tasks.contains_key(&task.task_id) || !seen.insert(task.task_id.as_str()) {
                return Err(AnnotateError::DuplicateTask(task.task_id.clone()));
            }
        }
        for (i, task) in set.tasks.iter().enumerate() {
            self.tasks.insert(task.task_id.clone(), (set.id.clone(), i));
        }
        self.task_sets.insert(set.id.clone(), set);
        Ok(())
    }

    /// Rebuild state from task sets and a persisted event log.
    pub fn replay<'a>(
        task_sets: Vec<TaskSet>,
        events: impl IntoIterator<Item = &'a LogEvent>,
    ) -> Result<Self, AnnotateError> {
        let mut state = Self::new(task_sets)?;
        for event in events {
            state.apply(event)?;
        }
        Ok(state)
    }

    pub fn task_set(&self, id: &str) -> Option<&TaskSet> {
        self.task_sets.get(id)
    }

    pub fn task_sets(&self) -> impl Iterator<Item = &TaskSet> {
        self.task_sets.values()
    }

    pub fn task(&self, task_id: &str) -> Option<&AnnotationTask> {
        let (set, i) = self.tasks.get(task_id)?;
        self.task_sets.get(set).map(|s| &s.tasks[*i])
    }

    /// Id of the set a task belongs to.
    pub fn task_set_of(&self, task_id: &str) -> Option<&str> {
        self.tasks.get(task_id).map(|(s, _)| s.as_str())
    }

    pub fn session(&self, session_id: &str) -> Option<&Session> {
        self.sessions.get(session_id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    /// All records in sequence order.
    pub fn records(&self) -> &[AnnotationRecord] {
        &self.records
    }

    pub fn next_seq(&self) -> u64 {
        self.records.last().map_or(1, |r| r.seq + 1)
    }

    pub fn has_record(&self, annotator: &str, task_id: &str, measure: Measure) -> bool {
        self.keys.contains(&key(annotator, task_id, measure))
    }

    fn finished(&self, annotator: &str, scheme: Scheme, task_id: &str) -> bool {
        scheme
            .measures()
            .iter()
            .all(|m| self.has_record(annotator, task_id, *m))
    }

    fn settle(&self, session: &Session, from: usize) -> usize {
        let mut c = from;
        while c < session.queue.len()
            && self.finished(&session.annotator, session.scheme, &session.queue[c])
        {
            c += 1;
        }
        c
    }

    fn session_or_err(&self, session_id: &str) -> Result<&Session, AnnotateError> {
        self.sessions
            .get(session_id)
            .ok_or_else(|| AnnotateError::UnknownSession(session_id.to_string()))
    }

    /// The session's current task id, or `None` when the queue is done.
    pub fn current_task(&self, session_id: &str) -> Result<Option<&str>, AnnotateError> {
        let s = self.session_or_err(session_id)?;
        let c = self.settle(s, s.cursor);
        Ok(s.queue.get(c).map(String::as_str))
    }

    fn check_current(&self, session: &Session, task_id: &str) -> Result<(), AnnotateError> {
        if !session.queue.iter().any(|t| t == task_id) {
            return Err(AnnotateError::UnknownTask(task_id.to_string()));
        }
        let c = self.settle(session, session.cursor);
        if session.queue.get(c).map(String::as_str) != Some(task_id) {
            return Err(AnnotateError::Protocol(
                "task is not the session's current task",
            ));
        }
        Ok(())
    }

    // ---- planning: validate a request and build its event ----

    pub fn plan_session(
        &self,
        annotator: &str,
        scheme: Scheme,
        task_set: &str,
        seed: u64,
        ts: u64,
    ) -> Result<LogEvent, AnnotateError> {
        if annotator.is_empty() {
            return Err(AnnotateError::Protocol("empty annotator id"));
        }
        if !self.task_sets.contains_key(task_set) {
            return Err(AnnotateError::UnknownTaskSet(task_set.to_string()));
        }
        Ok(LogEvent::Session {
            session_id: format!("s{:06}", self.sessions_created + 1),
            annotator: annotator.to_string(),
            scheme,
            task_set: task_set.to_string(),
            seed,
            ts,
        })
    }

    /// `Ok(None)` when the task is already revealed.
    pub fn plan_reveal(
        &self,
        session_id: &str,
        task_id: &str,
        ts: u64,
    ) -> Result<Option<LogEvent>, AnnotateError> {
        let s = self.session_or_err(session_id)?;
        if s.scheme != Scheme::TwoPhase {
            return Err(AnnotateError::Protocol(
                "reveal applies to two_phase sessions only",
            ));
        }
        if s.revealed.contains(task_id) {
            return Ok(None);
        }
        self.check_current(s, task_id)?;
        if !self.has_record(&s.annotator, task_id, Measure::Info1) {
            return Err(AnnotateError::Protocol("reveal requires an info1 score"));
        }
        Ok(Some(LogEvent::Reveal {
            session_id: session_id.to_string(),
            task_id: task_id.to_string(),
            ts,
        }))
    }

    pub fn plan_score(
        &self,
        session_id: &str,
        task_id: &str,
        measure: Measure,
        score: i64,
        ts: u64,
    ) -> Result<LogEvent, AnnotateError> {
        let s = self.session_or_err(session_id)?;
        if !s.scheme.measures().contains(&measure) {
            return Err(AnnotateError::WrongScheme {
                measure,
                scheme: s.scheme,
            });
        }
        let score = measure.check(score)?;
        if !s.queue.iter().any(|t| t == task_id) {
            return Err(AnnotateError::UnknownTask(task_id.to_string()));
        }
        if self.has_record(&s.annotator, task_id, measure) {
            return Err(AnnotateError::Conflict {
                annotator: s.annotator.clone(),
                task_id: task_id.to_string(),
                measure,
            });
        }
        self.check_current(s, task_id)?;
        if measure == Measure::Info2 && !s.revealed.contains(task_id) {
            return Err(AnnotateError::Protocol(
                "info2 requires the target to be revealed",
            ));
        }
        Ok(LogEvent::Score {
            session_id: session_id.to_string(),
            record: AnnotationRecord {
                seq: self.next_seq(),
                annotator: s.annotator.clone(),
                task_id: task_id.to_string(),
                measure,
                score,
                ts,
            },
        })
    }

    /// Apply one event after re-validating it against the current state.
    pub fn apply(&mut self, event: &LogEvent) -> Result<(), AnnotateError> {
        match event {
            LogEvent::Session {
                session_id,
                annotator,
                scheme,
                task_set,
                seed,
                ..
            } => {
                if self.sessions.contains_key(session_id) {
                    return Err(AnnotateError::Replay(format!(
                        "session {session_id} created twice"
                    )));
                }
                let set = self
                    .task_sets
                    .get(task_set)
                    .ok_or_else(|| AnnotateError::UnknownTaskSet(task_set.clone()))?;
                let mut queue: Vec<String> = set.tasks.iter().map(|t| t.task_id.clone()).collect();
                queue.shuffle(&mut seeded(*seed));
                let mut session = Session {
                    session_id: session_id.clone(),
                    annotator: annotator.clone(),
                    scheme: *scheme,
                    task_set: task_set.clone(),
                    seed: *seed,
                    queue,
                    cursor: 0,
                    revealed: BTreeSet::new(),
                };
                session.cursor = self.settle(&session, 0);
                self.sessions.insert(session_id.clone(), session);
                self.sessions_created += 1;
            }
            LogEvent::Reveal {
                session_id,
                task_id,
                ts,
            } => {
                if self.plan_reveal(session_id, task_id, *ts)?.is_some() {
                    let s = self
                        .sessions
                        .get_mut(session_id)
                        .expect("checked by plan_reveal");
                    s.revealed.insert(task_id.clone());
                }
            }
            LogEvent::Score { session_id, record } => {
                let planned = self.plan_score(
                    session_id,
                    &record.task_id,
                    record.measure,
                    record.score as i64,
                    record.ts,
                )?;
                if let LogEvent::Score {
                    record: expected, ..
                } = &planned
                {
                    if expected.seq != record.seq || expected.annotator != record.annotator {
                        return Err(AnnotateError::Replay(format!(
                            "record seq {} by {} does not follow the log",
                            record.seq, record.annotator
                        )));
                    }
                }
                self.push_record(record.clone());
                let s = &self.sessions[session_id];
                let cursor = self.settle(s, s.cursor);
                self.sessions
                    .get_mut(session_id)
                    .expect("session exists")
                    .cursor = cursor;
            }
        }
        Ok(())
    }

    fn push_record(&mut self, record: AnnotationRecord) {
        self.keys
            .insert(key(&record.annotator, &record.task_id, record.measure));
        self.records.push(record);
    }

    // ---- request API: plan + apply ----

    pub fn create_session(
        &mut self,
        annotator: &str,
        scheme: Scheme,
        task_set: &str,
        seed: u64,
        ts: u64,
    ) -> Result<(String, LogEvent), AnnotateError> {
        let event = self.plan_session(annotator, scheme, task_set, seed, ts)?;
        self.apply(&event)?;
        let LogEvent::Session { session_id, .. } = &event else {
            unreachable!()
        };
        Ok((session_id.clone(), event))
    }

    /// Reveal the target form; an already revealed task returns it again
    /// without a new event.
    pub fn reveal(
        &mut self,
        session_id: &str,
        task_id: &str,
        ts: u64,
    ) -> Result<(String, Option<LogEvent>), AnnotateError> {
        let event = self.plan_reveal(session_id, task_id, ts)?;
        if let Some(e) = &event {
            self.apply(e)?;
        }
        let form = self
            .task(task_id)
            .map(|t| t.target_form().to_string())
            .ok_or_else(|| AnnotateError::UnknownTask(task_id.to_string()))?;
        Ok((form, event))
    }

    pub fn submit_score(
        &mut self,
        session_id: &str,
        task_id: &str,
        measure: Measure,
        score: i64,
        ts: u64,
    ) -> Result<(u64, LogEvent), AnnotateError> {
        let event = self.plan_score(session_id, task_id, measure, score, ts)?;
        self.apply(&event)?;
        let LogEvent::Score { record, .. } = &event else {
            unreachable!()
        };
        Ok((record.seq, event))
    }

    /// Payload for the session's current task.
    pub fn next_task(&self, session_id: &str) -> Result<TaskPayload, AnnotateError> {
        let s = self.session_or_err(session_id)?;
        let index = self.settle(s, s.cursor);
        let total = s.queue.len();
        let Some(task_id) = s.queue.get(index) else {
            return Ok(TaskPayload::Done {
                completed: total,
                total,
            });
        };
        let task = self
            .task(task_id)
            .ok_or_else(|| AnnotateError::UnknownTask(task_id.clone()))?;
        Ok(match s.scheme {
            Scheme::Info3 => TaskPayload::Info3 {
                task_id: task_id.clone(),
                tokens: task.tokens.clone(),
                target_index: task.position,
                target: task.target_form().to_string(),
                pos: task.pos,
                measure: Measure::Info3,
                guidelines: info3_guidelines(),
                index,
                total,
            },
            Scheme::TwoPhase if s.revealed.contains(task_id) => TaskPayload::Revealed {
                task_id: task_id.clone(),
                tokens: task.tokens.clone(),
                slot_index: task.position,
                target: task.target_form().to_string(),
                pos: task.pos,
                measure: Measure::Info2,
                index,
                total,
            },
            Scheme::TwoPhase => TaskPayload::Masked {
                task_id: task_id.clone(),
                tokens: task.masked_tokens(),
                slot_index: task.position,
                pos: task.pos,
                measure: if self.has_record(&s.annotator, task_id, Measure::Info1) {
                    Measure::Info2
                } else {
                    Measure::Info1
                },
                index,
                total,
            },
        })
    }

    /// Records in sequence order, optionally restricted to one task set.
    pub fn export(&self, task_set: Option<&str>) -> Vec<&AnnotationRecord> {
        self.records
            .iter()
            .filter(|r| task_set.is_none_or(|set| self.task_set_of(&r.task_id) == Some(set)))
            .collect()
    }

    /// Load exported records. Sequence numbers must keep increasing and
    /// (annotator, task, measure) must stay unique.
    pub fn import_records(
        &mut self,
        records: impl IntoIterator<Item = AnnotationRecord>,
    ) -> Result<(), AnnotateError> {
        for record in records {
            if record.seq < self.next_seq() {
                return Err(AnnotateError::Replay(format!(
                    "seq {} is not increasing",
                    record.seq
                )));
            }
            record.measure.check(record.score as i64)?;
            if self.has_record(&record.annotator, &record.task_id, record.measure) {
                return Err(AnnotateError::Conflict {
                    annotator: record.annotator,
                    task_id: record.task_id,
                    measure: record.measure,
                });
            }
            self.push_record(record);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::Provenance;
    use crate::corpus::{Pos, TARGET};
    use alloc::vec;

    fn set(id: &str, n: usize) -> TaskSet {
        TaskSet {
            id: id.into(),
            tasks: (0..n)
                .map(|i| AnnotationTask {
                    task_id: format!("{id}-{i:03}"),
                    tokens: vec![
                        "we".into(),
                        "met".into(),
                        "at".into(),
                        "the".into(),
                        "bank".into(),
                    ],
                    position: 4,
                    pos: Pos::Noun,
                    provenance: Provenance::Corpus,
                })
                .collect(),
        }
    }

    fn current(state: &AnnotationState, sid: &str) -> String {
        state.current_task(sid).unwrap().unwrap().to_string()
    }

    #[test]
    fn two_phase_walk() {
        let mut st = AnnotationState::new(vec![set("a", 3)]).unwrap();
        let (sid, _) = st
            .create_session("ann1", Scheme::TwoPhase, "a", 5, 0)
            .unwrap();
        let t = current(&st, &sid);
        match st.next_task(&sid).unwrap() {
            TaskPayload::Masked {
                tokens, measure, ..
            } => {
                assert_eq!(tokens[4], TARGET);
                assert!(!tokens.iter().any(|x| x == "bank"));
                assert_eq!(measure, Measure::Info1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            st.reveal(&sid, &t, 1),
            Err(AnnotateError::Protocol("reveal requires an info1 score"))
        );
        assert_eq!(
            st.submit_score(&sid, &t, Measure::Info2, 3, 1),
            Err(AnnotateError::Protocol(
                "info2 requires the target to be revealed"
            ))
        );
        let (seq1, _) = st.submit_score(&sid, &t, Measure::Info1, 7, 2).unwrap();
        assert_eq!(current(&st, &sid), t);
        let (form, ev) = st.reveal(&sid, &t, 3).unwrap();
        assert_eq!(form, "bank");
        assert!(ev.is_some());
        let (again, ev2) = st.reveal(&sid, &t, 4).unwrap();
        assert_eq!((again.as_str(), ev2), ("bank", None));
        assert!(matches!(
            st.next_task(&sid).unwrap(),
            TaskPayload::Revealed { .. }
        ));
        let (seq2, _) = st.submit_score(&sid, &t, Measure::Info2, 3, 5).unwrap();
        assert_eq!((seq1, seq2), (1, 2));
        assert_eq!(st.session(&sid).unwrap().cursor, 1);
        assert_ne!(current(&st, &sid), t);
    }

    #[test]
    fn info3_rules() {
        let mut st = AnnotationState::new(vec![set("a", 2)]).unwrap();
        let (sid, _) = st.create_session("ann", Scheme::Info3, "a", 1, 0).unwrap();
        let t = current(&st, &sid);
        match st.next_task(&sid).unwrap() {
            TaskPayload::Info3 {
                target, guidelines, ..
            } => {
                assert_eq!(target, "bank");
                assert_eq!(guidelines, info3_guidelines());
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            st.submit_score(&sid, &t, Measure::Info3, 6, 0),
            Err(AnnotateError::OutOfRange { .. })
        ));
        assert!(matches!(
            st.submit_score(&sid, &t, Measure::Info1, 3, 0),
            Err(AnnotateError::WrongScheme { .. })
        ));
        st.submit_score(&sid, &t, Measure::Info3, 4, 0).unwrap();
        assert!(matches!(
            st.submit_score(&sid, &t, Measure::Info3, 4, 0),
            Err(AnnotateError::Conflict { .. })
        ));
        assert!(matches!(
            st.reveal(&sid, &t, 0),
            Err(AnnotateError::Protocol(_))
        ));
        let t2 = current(&st, &sid);
        st.submit_score(&sid, &t2, Measure::Info3, 2, 0).unwrap();
        assert_eq!(
            st.next_task(&sid).unwrap(),
            TaskPayload::Done {
                completed: 2,
                total: 2
            }
        );
    }

    #[test]
    fn same_seed_same_order_and_empty_sets() {
        let mut st = AnnotationState::new(vec![set("a", 150), set("empty", 0)]).unwrap();
        let (s1, _) = st.create_session("x", Scheme::Info3, "a", 42, 0).unwrap();
        let (s2, _) = st.create_session("y", Scheme::Info3, "a", 42, 0).unwrap();
        assert_eq!(
            st.session(&s1).unwrap().queue,
            st.session(&s2).unwrap().queue
        );
        assert_eq!(st.session(&s1).unwrap().queue.len(), 150);
        let (s3, _) = st
            .create_session("x", Scheme::Info3, "empty", 42, 0)
            .unwrap();
        assert_eq!(
            st.next_task(&s3).unwrap(),
            TaskPayload::Done {
                completed: 0,
                total: 0
            }
        );
        assert_eq!(
            st.create_session("x", Scheme::Info3, "nope", 0, 0),
            Err(AnnotateError::UnknownTaskSet("nope".into()))
        );
    }

    #[test]
    fn replay_rebuilds_state() {
        let sets = vec![set("a", 4)];
        let mut st = AnnotationState::new(sets.clone()).unwrap();
        let mut log = Vec::new();
        let (sid, e) = st
            .create_session("a1", Scheme::TwoPhase, "a", 3, 10)
            .unwrap();
        log.push(e);
        let t = current(&st, &sid);
        log.push(st.submit_score(&sid, &t, Measure::Info1, 5, 11).unwrap().1);
        log.extend(st.reveal(&sid, &t, 12).unwrap().1);
        log.push(st.submit_score(&sid, &t, Measure::Info2, 9, 13).unwrap().1);
        let t = current(&st, &sid);
        log.push(st.submit_score(&sid, &t, Measure::Info1, 2, 14).unwrap().1);
        let rebuilt = AnnotationState::replay(sets.clone(), &log).unwrap();
        assert_eq!(rebuilt, st);
        // a tampered log is rejected
        let mut bad = log.clone();
        bad.swap(2, 3);
        assert!(AnnotationState::replay(sets, &bad).is_err());
    }

    #[test]
    fn new_session_skips_finished_tasks() {
        let mut st = AnnotationState::new(vec![set("a", 3)]).unwrap();
        let (s1, _) = st.create_session("ann", Scheme::Info3, "a", 0, 0).unwrap();
        let t = current(&st, &s1);
        st.submit_score(&s1, &t, Measure::Info3, 3, 0).unwrap();
        let (s2, _) = st.create_session("ann", Scheme::Info3, "a", 0, 0).unwrap();
        assert_eq!(st.session(&s2).unwrap().cursor, 1);
        let (s3, _) = st
            .create_session("other", Scheme::Info3, "a", 0, 0)
            .unwrap();
        assert_eq!(st.session(&s3).unwrap().cursor, 0);
    }

    #[test]
    fn duplicate_task_ids_rejected() {
        let mut st = AnnotationState::new(vec![set("a", 2)]).unwrap();
        let mut b = set("b", 1);
        b.tasks[0].task_id = "a-000".into();
        assert_eq!(
            st.add_task_set(b),
            Err(AnnotateError::DuplicateTask("a-000".into()))
        );
        assert_eq!(
            st.add_task_set(set("a", 1)),
            Err(AnnotateError::DuplicateTaskSet("a".into()))
        );
    }

    #[test]
    fn export_import_round_trip() {
        let sets = vec![set("a", 3), set("b", 2)];
        let mut st = AnnotationState::new(sets.clone()).unwrap();
        for (ann, setid) in [("p", "a"), ("q", "b"), ("p", "b")] {
            let (sid, _) = st.create_session(ann, Scheme::Info3, setid, 9, 0).unwrap();
            while let Some(t) = st.current_task(&sid).unwrap().map(str::to_string) {
                st.submit_score(&sid, &t, Measure::Info3, 3, 7).unwrap();
            }
        }
        let all: Vec<AnnotationRecord> = st.export(None).into_iter().cloned().collect();
        assert_eq!(all.len(), 7);
        assert!(all.windows(2).all(|w| w[0].seq < w[1].seq));
        assert_eq!(st.export(Some("b")).len(), 4);
        let mut fresh = AnnotationState::new(sets).unwrap();
        fresh.import_records(all.clone()).unwrap();
        let again: Vec<AnnotationRecord> = fresh.export(None).into_iter().cloned().collect();
        assert_eq!(again, all);
        assert!(fresh.import_records(vec![all[0].clone()]).is_err());
        assert!(AnnotationState::default().export(None).is_empty());
    }
}

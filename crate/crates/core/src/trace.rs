//! Run traces: one line-delimited JSON record per task creation, step and
//! task completion.
//!
//! ```text
//! {"run_id":"…","event":"task_created","task_id":"…","agent":"User","creator":"User","executor":"qa_agent","task":{…},"timestamp":"…"}
//! {"run_id":"…","event":"step","task_id":"…","agent":"qa_agent","step_index":0,"invocation":{…},"observation":"OK","timestamp":"…"}
//! {"run_id":"…","event":"task_finished","task_id":"…","agent":"qa_agent","task":{…},"timestamp":"…"}
//! ```

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::types::{timestamp_now, ActionInvocation, ExecutionStep, TaskPackage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEvent {
    TaskCreated,
    Step,
    TaskFinished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run_id: String,
    pub event: TraceEvent,
    pub task_id: String,
    pub agent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invocation: Option<ActionInvocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub executor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskPackage>,
    pub timestamp: String,
}

impl TraceRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }
}

/// Shared, cloneable trace collector. A disabled trace drops everything.
#[derive(Clone, Debug)]
pub struct Trace {
    run_id: String,
    records: Option<Arc<Mutex<Vec<TraceRecord>>>>,
}

impl Default for Trace {
    fn default() -> Self {
        Self::new()
    }
}

impl Trace {
    pub fn new() -> Self {
        Trace {
            run_id: uuid::Uuid::new_v4().simple().to_string(),
            records: Some(Arc::new(Mutex::new(Vec::new()))),
        }
    }

    pub fn disabled() -> Self {
        Trace {
            run_id: String::new(),
            records: None,
        }
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    fn push(&self, record: TraceRecord) {
        if let Some(records) = &self.records {
            records
                .lock()
                .unwrap_or_else(|p| p.into_inner())
                .push(record);
        }
    }

    fn blank(&self, event: TraceEvent, task_id: &str, agent: &str) -> TraceRecord {
        TraceRecord {
            run_id: self.run_id.clone(),
            event,
            task_id: task_id.to_string(),
            agent: agent.to_string(),
            step_index: None,
            invocation: None,
            observation: None,
            creator: None,
            executor: None,
            task: None,
            timestamp: timestamp_now(),
        }
    }

    pub fn task_created(&self, task: &TaskPackage) {
        let mut record = self.blank(TraceEvent::TaskCreated, &task.task_id, &task.creator);
        record.creator = Some(task.creator.clone());
        record.executor = Some(task.executor.clone());
        record.task = Some(task.clone());
        self.push(record);
    }

    pub fn step(&self, task_id: &str, agent: &str, step: &ExecutionStep) {
        let mut record = self.blank(TraceEvent::Step, task_id, agent);
        record.step_index = Some(step.step_index);
        record.invocation = Some(step.invocation.clone());
        record.observation = Some(step.observation.clone());
        self.push(record);
    }

    pub fn task_finished(&self, task: &TaskPackage) {
        let mut record = self.blank(TraceEvent::TaskFinished, &task.task_id, &task.executor);
        record.task = Some(task.clone());
        self.push(record);
    }

    pub fn records(&self) -> Vec<TraceRecord> {
        self.records
            .as_ref()
            .map(|r| r.lock().unwrap_or_else(|p| p.into_inner()).clone())
            .unwrap_or_default()
    }

    pub fn to_jsonl(&self) -> String {
        to_jsonl(&self.records())
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> io::Result<()> {
        fs::write(path, self.to_jsonl())
    }
}

pub fn to_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&record.to_json_line());
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Trace lines with the run-specific parts masked: run ids and timestamps
/// are blanked and task ids are replaced by their order of first
/// appearance (`task-1`, `task-2`, …). Two replays of one scripted run
/// yield equal views.
pub fn replay_view(records: &[TraceRecord]) -> Vec<String> {
    let mut ids: HashMap<String, String> = HashMap::new();
    let mut label = |id: &str| -> String {
        let next = ids.len() + 1;
        ids.entry(id.to_string())
            .or_insert_with(|| format!("task-{next}"))
            .clone()
    };
    records
        .iter()
        .map(|record| {
            let mut r = record.clone();
            r.run_id.clear();
            r.timestamp.clear();
            r.task_id = label(&r.task_id);
            if let Some(task) = r.task.as_mut() {
                task.task_id = label(&task.task_id);
                task.timestamp.clear();
            }
            let mut value = serde_json::to_value(&r).expect("serializable");
            if let Value::Object(map) = &mut value {
                map.remove("run_id");
                map.remove("timestamp");
            }
            value.to_string()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::CompletionStatus;
    use proptest::prelude::*;

    #[test]
    fn records_lifecycle_in_order() {
        let trace = Trace::new();
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        trace.task_created(&task);
        trace.step(
            &task.task_id,
            "qa_agent",
            &ExecutionStep {
                invocation: ActionInvocation::finish("a"),
                observation: "Task completed.".into(),
                step_index: 0,
            },
        );
        let done = task.clone().complete("a", CompletionStatus::Completed).unwrap();
        trace.task_finished(&done);

        let records = trace.records();
        let events: Vec<_> = records.iter().map(|r| r.event).collect();
        assert_eq!(
            events,
            vec![TraceEvent::TaskCreated, TraceEvent::Step, TraceEvent::TaskFinished]
        );
        assert_eq!(records[0].creator.as_deref(), Some("User"));
        assert_eq!(records[0].executor.as_deref(), Some("qa_agent"));
        assert_eq!(records[2].agent, "qa_agent");
        assert!(records.iter().all(|r| r.run_id == trace.run_id()));
        assert!(records.windows(2).all(|w| w[0].timestamp < w[1].timestamp));

        let parsed = parse_jsonl(&trace.to_jsonl()).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn disabled_trace_keeps_nothing() {
        let trace = Trace::disabled();
        trace.task_created(&TaskPackage::new("q", "User", "a").unwrap());
        assert!(trace.records().is_empty());
        assert_eq!(trace.to_jsonl(), "");
    }

    #[test]
    fn step_record_omits_task_fields() {
        let trace = Trace::new();
        trace.step(
            "abc",
            "a",
            &ExecutionStep {
                invocation: ActionInvocation::new("Think"),
                observation: "OK".into(),
                step_index: 3,
            },
        );
        let line = trace.records()[0].to_json_line();
        assert!(line.contains("\"step_index\":3"));
        assert!(!line.contains("\"creator\""));
        assert!(!line.contains("\"task\""));
    }

    #[test]
    fn replay_view_masks_run_specific_fields() {
        let make = || {
            let trace = Trace::new();
            let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
            trace.task_created(&task);
            trace.task_finished(&task.complete("x", CompletionStatus::Completed).unwrap());
            trace.records()
        };
        let (a, b) = (make(), make());
        assert_ne!(a, b);
        assert_eq!(replay_view(&a), replay_view(&b));
        assert!(replay_view(&a)[0].contains("\"task-1\""));
    }

    fn task_strategy() -> impl Strategy<Value = TaskPackage> {
        (
            "(?s).{1,40}",
            "[A-Za-z0-9_]{1,10}",
            "[A-Za-z0-9_]{1,10}",
            "(?s).{0,40}",
            0u8..3,
        )
            .prop_filter_map("non-blank instruction", |(ins, creator, executor, answer, s)| {
                let task = TaskPackage::new(ins, creator, executor).ok()?;
                match s {
                    0 => Some(task),
                    1 => task.complete(answer, CompletionStatus::Completed).ok(),
                    _ => task.complete(answer, CompletionStatus::Failed).ok(),
                }
            })
    }

    proptest! {
        #[test]
        fn task_packages_round_trip_through_trace_lines(task in task_strategy()) {
            let trace = Trace::new();
            trace.task_finished(&task);
            let line = trace.records()[0].to_json_line();
            let parsed: TraceRecord = serde_json::from_str(&line).unwrap();
            prop_assert_eq!(parsed.task.as_ref(), Some(&task));
            prop_assert_eq!(parsed.to_json_line(), line);
        }
    }
}

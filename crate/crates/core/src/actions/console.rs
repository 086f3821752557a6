//! Interactive streams used by human-in-the-loop actions and agents.

use std::collections::VecDeque;
use std::io::{self, BufRead, Write};
use std::sync::{Arc, Mutex};

/// A line-oriented interactive channel to a person.
///
/// Implementations serialize access internally, so one console may be
/// shared by the REPL and every action that talks to the human.
pub trait Console: Send + Sync {
    /// Shows `prompt` and reads one line. `Ok(None)` means end of input.
    fn ask(&self, prompt: &str) -> io::Result<Option<String>>;

    fn say(&self, text: &str) -> io::Result<()>;
}

/// A console over any reader/writer pair.
pub struct StreamConsole<R, W> {
    inner: Mutex<(R, W)>,
}

impl<R: BufRead + Send, W: Write + Send> StreamConsole<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        StreamConsole {
            inner: Mutex::new((reader, writer)),
        }
    }

    pub fn into_inner(self) -> (R, W) {
        self.inner.into_inner().unwrap_or_else(|p| p.into_inner())
    }
}

impl<R: BufRead + Send, W: Write + Send> Console for StreamConsole<R, W> {
    fn ask(&self, prompt: &str) -> io::Result<Option<String>> {
        let mut guard = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        let (reader, writer) = &mut *guard;
        writer.write_all(prompt.as_bytes())?;
        if !prompt.is_empty() && !prompt.ends_with(char::is_whitespace) {
            writer.write_all(b" ")?;
        }
        writer.flush()?;
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        let trimmed_len = line.trim_end_matches(['\r', '\n']).len();
        line.truncate(trimmed_len);
        Ok(Some(line))
    }

    fn say(&self, text: &str) -> io::Result<()> {
        let mut guard = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        let writer = &mut guard.1;
        writeln!(writer, "{text}")?;
        writer.flush()
    }
}

/// Process stdin/stdout.
pub fn stdio_console() -> Arc<dyn Console> {
    Arc::new(StreamConsole::new(io::BufReader::new(io::stdin()), io::stdout()))
}

/// A console fed from a fixed list of lines that records everything shown.
#[derive(Default)]
pub struct ScriptedConsole {
    state: Mutex<ScriptedState>,
}

#[derive(Default)]
struct ScriptedState {
    input: VecDeque<String>,
    transcript: Vec<String>,
}

impl ScriptedConsole {
    pub fn new<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedConsole {
            state: Mutex::new(ScriptedState {
                input: lines.into_iter().map(Into::into).collect(),
                transcript: Vec::new(),
            }),
        }
    }

    /// Prompts and messages shown so far, in order.
    pub fn transcript(&self) -> Vec<String> {
        self.state.lock().unwrap().transcript.clone()
    }

    pub fn remaining(&self) -> usize {
        self.state.lock().unwrap().input.len()
    }
}

impl Console for ScriptedConsole {
    fn ask(&self, prompt: &str) -> io::Result<Option<String>> {
        let mut state = self.state.lock().unwrap();
        state.transcript.push(prompt.to_string());
        Ok(state.input.pop_front())
    }

    fn say(&self, text: &str) -> io::Result<()> {
        self.state.lock().unwrap().transcript.push(text.to_string());
        Ok(())
    }
}

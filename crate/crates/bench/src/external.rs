//! Objectives evaluated by a child process over line-delimited JSON.
//!
//! Each evaluation writes one request `{"id": 7, "x": [..]}` to the child's
//! standard input and waits for the line `{"id": 7, "y": 1.25}` on its
//! standard output. A child may also answer `{"id": 7, "error": "..."}`.
//! Several requests may be in flight at once; replies are matched by id and
//! may arrive in any order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use aego::{Domain, EvalError, Objective};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

fn default_timeout() -> f64 {
    60.0
}

/// How to launch an external objective and what it computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSpec {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Per-evaluation timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Known global minimum, needed only for target-gap stopping.
    #[serde(default)]
    pub minimum: Option<f64>,
    #[serde(default)]
    pub name: Option<String>,
}

impl ExternalSpec {
    pub fn domain(&self) -> Result<Domain> {
        Ok(Domain::new(self.lower.clone(), self.upper.clone())?)
    }

    pub fn name(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => self
                .command
                .first()
                .map(|p| {
                    let path = std::path::Path::new(p);
                    path.file_stem()
                        .map_or_else(|| p.clone(), |s| s.to_string_lossy().into_owned())
                })
                .unwrap_or_default(),
        }
    }

    fn timeout(&self) -> Result<Duration> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(BenchError::Config(format!(
                "timeout_secs must be positive, got {}",
                self.timeout_secs
            )));
        }
        Ok(Duration::from_secs_f64(self.timeout_secs))
    }

    /// Starts the child and wraps it as an objective. The child is killed when
    /// the objective is dropped.
    pub fn spawn(&self) -> Result<Objective> {
        let process = ExternalProcess::spawn(self)?;
        let dim = self.lower.len();
        let process = Arc::new(process);
        let mut objective = Objective::fallible(self.name(), dim, move |x| process.evaluate(x));
        if let Some(m) = self.minimum {
            objective = objective.with_known_minimum(m);
        }
        Ok(objective)
    }
}

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    x: &'a [f64],
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    #[serde(default)]
    y: Option<f64>,
    #[serde(default)]
    error: Option<String>,
}

type Reply = std::result::Result<f64, EvalError>;

#[derive(Default)]
struct Pending {
    waiters: HashMap<u64, Sender<Reply>>,
    /// Set once the output stream is unusable; fails every later request.
    closed: Option<EvalError>,
}

impl Pending {
    fn close(&mut self, err: EvalError) {
        for (_, tx) in self.waiters.drain() {
            let _ = tx.send(Err(err.clone()));
        }
        self.closed.get_or_insert(err);
    }
}

/// A running child process serving evaluation requests.
pub struct ExternalProcess {
    child: Arc<Mutex<Child>>,
    stdin: Mutex<Option<ChildStdin>>,
    pending: Arc<Mutex<Pending>>,
    next_id: AtomicU64,
    timeout: Duration,
    reader: Option<JoinHandle<()>>,
}

impl ExternalProcess {
    pub fn spawn(spec: &ExternalSpec) -> Result<Self> {
        let timeout = spec.timeout()?;
        let (program, args) = spec
            .command
            .split_first()
            .ok_or_else(|| BenchError::Config("external command is empty".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BenchError::Spawn(format!("{program}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let child = Arc::new(Mutex::new(child));
        let pending = Arc::new(Mutex::new(Pending::default()));
        let reader = {
            let pending = pending.clone();
            let child = child.clone();
            std::thread::spawn(move || read_replies(BufReader::new(stdout), &pending, &child))
        };
        Ok(ExternalProcess {
            child,
            stdin: Mutex::new(stdin),
            pending,
            next_id: AtomicU64::new(0),
            timeout,
            reader: Some(reader),
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> Reply {
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let (tx, rx) = mpsc::channel();
        {
            let mut pending = self.pending.lock().unwrap();
            if let Some(err) = &pending.closed {
                return Err(err.clone());
            }
            pending.waiters.insert(id, tx);
        }
        let mut line = serde_json::to_string(&Request { id, x }).map_err(|e| EvalError::Protocol(e.to_string()))?;
        line.push('\n');
        let written = {
            let mut stdin = self.stdin.lock().unwrap();
            match stdin.as_mut() {
                Some(w) => w.write_all(line.as_bytes()).and_then(|_| w.flush()),
                None => Err(std::io::ErrorKind::BrokenPipe.into()),
            }
        };
        if let Err(e) = written {
            self.pending.lock().unwrap().waiters.remove(&id);
            return Err(EvalError::ChildExit(format!("cannot write request: {e}")));
        }
        match rx.recv_timeout(self.timeout) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                self.pending.lock().unwrap().waiters.remove(&id);
                Err(EvalError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => Err(EvalError::ChildExit("reply channel closed".into())),
        }
    }
}

fn read_replies(stdout: impl BufRead, pending: &Mutex<Pending>, child: &Mutex<Child>) {
    for line in stdout.lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                pending
                    .lock()
                    .unwrap()
                    .close(EvalError::Protocol(format!("unreadable output: {e}")));
                return;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let resp: Response = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                // nothing after a malformed line can be trusted
                log::warn!("malformed line from objective process: {line:?}");
                pending
                    .lock()
                    .unwrap()
                    .close(EvalError::Protocol(format!("malformed line: {e}")));
                return;
            }
        };
        let reply = match (resp.y, resp.error) {
            (_, Some(msg)) => Err(EvalError::Other(msg)),
            (Some(y), None) => Ok(y),
            (None, None) => Err(EvalError::Protocol(format!(
                "reply {} has neither y nor error",
                resp.id
            ))),
        };
        match pending.lock().unwrap().waiters.remove(&resp.id) {
            Some(tx) => {
                let _ = tx.send(reply);
            }
            None => log::warn!("reply for unknown or expired request {}", resp.id),
        }
    }
    // the exit status usually lands a moment after the pipe closes
    let mut status = "process closed its output".to_string();
    for _ in 0..50 {
        if let Ok(Some(s)) = child.lock().unwrap().try_wait() {
            status = format!("process exited ({s})");
            break;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    pending.lock().unwrap().close(EvalError::ChildExit(status));
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        self.stdin.lock().unwrap().take();
        {
            let mut child = self.child.lock().unwrap();
            let _ = child.kill();
            let _ = child.wait();
        }
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}

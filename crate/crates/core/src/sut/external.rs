//! External SUTs: one child process per concurrent caller, speaking
//! line-delimited JSON over stdin/stdout.
//!
//! ```text
//! -> {"hello":true}
//! <- {"hello":true,"input_kind":"list-float","output_kind":"float"}
//! -> {"id":"<trial>","input":[[1.0,2.0,3.0]]}
//! <- {"id":"<trial>","output":6.0}   |   {"id":"<trial>","error":"empty-input"}
//! ```

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{Implementation, InvokeError, OutputKind, SutDescriptor, SutOutcome};
use crate::dsl::InputKind;
use crate::input::Input;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(2);

/// One manifest entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSpec {
    pub id: String,
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    pub input_kind: InputKind,
    pub output_kind: OutputKind,
}

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Format(String),
    #[error("cannot start `{id}`: {source}")]
    Spawn {
        id: String,
        #[source]
        source: std::io::Error,
    },
    #[error("handshake with `{id}` failed: {reason}")]
    Handshake { id: String, reason: String },
    #[error("`{id}` reports a different signature: {reason}")]
    Signature { id: String, reason: String },
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

enum CallError {
    Timeout,
    Protocol(String),
}

impl Process {
    fn spawn(spec: &ExternalSpec) -> std::io::Result<Self> {
        let mut child = Command::new(&spec.command)
            .args(&spec.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().ok_or_else(|| std::io::Error::other("stdin unavailable"))?;
        let stdout = child.stdout.take().ok_or_else(|| std::io::Error::other("stdout unavailable"))?;
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Process { child, stdin, lines })
    }

    fn call(&mut self, request: &Value, timeout: Duration) -> Result<Value, CallError> {
        writeln!(self.stdin, "{request}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| CallError::Protocol(format!("write failed: {e}")))?;
        match self.lines.recv_timeout(timeout) {
            Ok(line) => serde_json::from_str(&line)
                .map_err(|e| CallError::Protocol(format!("malformed response `{line}`: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(CallError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(CallError::Protocol("process exited".into())),
        }
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct ExternalSut {
    pub descriptor: SutDescriptor,
    spec: ExternalSpec,
    idle: Mutex<Vec<Process>>,
    timeout: Duration,
}

impl std::fmt::Debug for ExternalSut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalSut").field("spec", &self.spec).finish()
    }
}

fn handshake(spec: &ExternalSpec, timeout: Duration) -> Result<Process, ExternalError> {
    let mut p = Process::spawn(spec).map_err(|source| ExternalError::Spawn {
        id: spec.id.clone(),
        source,
    })?;
    let fail = |reason: String| ExternalError::Handshake {
        id: spec.id.clone(),
        reason,
    };
    let reply = match p.call(&json!({"hello": true}), timeout) {
        Ok(v) => v,
        Err(CallError::Timeout) => return Err(fail("no reply".into())),
        Err(CallError::Protocol(r)) => return Err(fail(r)),
    };
    if reply.get("hello") != Some(&Value::Bool(true)) {
        return Err(fail(format!("unexpected reply {reply}")));
    }
    let field = |name: &str| {
        reply
            .get(name)
            .cloned()
            .ok_or_else(|| fail(format!("reply lacks `{name}`")))
    };
    let input_kind: InputKind =
        serde_json::from_value(field("input_kind")?).map_err(|e| fail(e.to_string()))?;
    let output_kind: OutputKind =
        serde_json::from_value(field("output_kind")?).map_err(|e| fail(e.to_string()))?;
    if input_kind != spec.input_kind || output_kind != spec.output_kind {
        return Err(ExternalError::Signature {
            id: spec.id.clone(),
            reason: format!(
                "manifest says {} -> {:?}, process says {} -> {:?}",
                spec.input_kind, spec.output_kind, input_kind, output_kind
            ),
        });
    }
    Ok(p)
}

impl ExternalSut {
    /// Starts one process and validates the protocol with a handshake.
    pub fn connect(spec: ExternalSpec, timeout: Duration) -> Result<Self, ExternalError> {
        let first = handshake(&spec, timeout)?;
        let descriptor = SutDescriptor {
            id: spec.id.clone(),
            input_kind: spec.input_kind,
            output_kind: spec.output_kind,
            implementation: Implementation::External {
                command: spec.command.clone(),
                args: spec.args.clone(),
            },
            oracle_flags: BTreeSet::new(),
            mutants: Vec::new(),
        };
        Ok(ExternalSut {
            descriptor,
            spec,
            idle: Mutex::new(vec![first]),
            timeout,
        })
    }

    pub(crate) fn invoke(&self, request_id: &str, input: &Input<f64>) -> Result<SutOutcome, InvokeError> {
        let idle = self.idle.lock().unwrap_or_else(|e| e.into_inner()).pop();
        let mut proc = match idle {
            Some(p) => p,
            None => handshake(&self.spec, self.timeout).map_err(|e| InvokeError::Protocol(e.to_string()))?,
        };
        let reply = match proc.call(&json!({"id": request_id, "input": input}), self.timeout) {
            Ok(v) => v,
            // The process is dropped (and killed) on any failure.
            Err(CallError::Timeout) => return Err(InvokeError::Timeout),
            Err(CallError::Protocol(r)) => return Err(InvokeError::Protocol(r)),
        };
        if reply.get("id").and_then(Value::as_str) != Some(request_id) {
            return Err(InvokeError::Protocol(format!("reply id mismatch in {reply}")));
        }
        let outcome = if let Some(v) = reply.get("output") {
            SutOutcome::Value(
                v.as_f64()
                    .ok_or_else(|| InvokeError::Protocol(format!("non-numeric output in {reply}")))?,
            )
        } else if let Some(e) = reply.get("error") {
            SutOutcome::Failure(e.as_str().unwrap_or("error").to_string())
        } else {
            return Err(InvokeError::Protocol(format!("reply has neither output nor error: {reply}")));
        };
        self.idle.lock().unwrap_or_else(|e| e.into_inner()).push(proc);
        Ok(outcome)
    }
}

/// Reads a manifest (JSON list of [`ExternalSpec`]) and handshakes with each entry.
pub fn load_external(manifest: impl AsRef<Path>) -> Result<Vec<ExternalSut>, ExternalError> {
    let path = manifest.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ExternalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let specs: Vec<ExternalSpec> =
        serde_json::from_str(&text).map_err(|e| ExternalError::Format(e.to_string()))?;
    specs
        .into_iter()
        .map(|s| ExternalSut::connect(s, DEFAULT_TIMEOUT))
        .collect()
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::sut::Registry;

    fn sh(script: &str) -> ExternalSpec {
        ExternalSpec {
            id: "ext".into(),
            command: "sh".into(),
            args: vec!["-c".into(), script.into()],
            input_kind: InputKind::ListFloat,
            output_kind: OutputKind::Float,
        }
    }

    const HELLO: &str = r#"echo '{"hello":true,"input_kind":"list-float","output_kind":"float"}'"#;

    #[test]
    fn malformed_handshake() {
        let err = ExternalSut::connect(sh("read l; echo garbage"), DEFAULT_TIMEOUT).unwrap_err();
        assert!(matches!(err, ExternalError::Handshake { .. }), "{err}");
    }

    #[test]
    fn signature_mismatch() {
        let script = r#"read l; echo '{"hello":true,"input_kind":"scalar-int","output_kind":"float"}'"#;
        let err = ExternalSut::connect(sh(script), DEFAULT_TIMEOUT).unwrap_err();
        assert!(matches!(err, ExternalError::Signature { .. }), "{err}");
    }

    #[test]
    fn request_timeout() {
        let ext = ExternalSut::connect(sh(&format!("read l; {HELLO}; sleep 5")), Duration::from_millis(200)).unwrap();
        let mut reg = Registry::empty();
        reg.add_external(ext);
        let t = reg.target("ext", None).unwrap();
        assert_eq!(reg.invoke(t, &Input::List(vec![1.0])), Err(InvokeError::Timeout));
    }

    #[test]
    fn crash_is_protocol_error() {
        let ext = ExternalSut::connect(sh(&format!("read l; {HELLO}; read l; exit 1")), DEFAULT_TIMEOUT).unwrap();
        let mut reg = Registry::empty();
        reg.add_external(ext);
        let t = reg.target("ext", None).unwrap();
        assert!(matches!(reg.invoke(t, &Input::List(vec![1.0])), Err(InvokeError::Protocol(_))));
    }

    #[test]
    fn empty_manifest() {
        let dir = std::env::temp_dir().join(format!("mt-ext-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.json");
        std::fs::write(&path, "[]").unwrap();
        assert!(load_external(&path).unwrap().is_empty());
        assert!(matches!(load_external(dir.join("missing.json")), Err(ExternalError::Io { .. })));
    }
}

//! External model adapter speaking line-delimited JSON over stdio.
//!
//! Each request line is `{"id", "language", "tokens", "code"}` and must be
//! answered by exactly one `{"label", "score"}` line, in order. A process that
//! crashes or times out is discarded and respawned on the next query.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CodeModel, ModelError, Prediction};
use crate::tokens::Program;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub id: String,
    pub language: String,
    pub tokens: Vec<String>,
    pub code: String,
}

impl AdapterRequest {
    pub fn for_program(program: &Program) -> Self {
        AdapterRequest {
            id: program.source_id.clone(),
            language: program.language.as_str().to_string(),
            tokens: program.texts().map(str::to_string).collect(),
            code: program.render(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterResponse {
    pub label: String,
    pub score: f64,
}

/// Parses one response line into a validated prediction.
pub fn parse_response(line: &str) -> Result<Prediction, String> {
    let response: AdapterResponse = serde_json::from_str(line.trim())
        .map_err(|e| format!("malformed response {line:?}: {e}"))?;
    Prediction::new(response.label, response.score)
}

struct AdapterProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl AdapterProcess {
    fn spawn(command: &[String]) -> Result<Self, ModelError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| ModelError::Config("empty adapter command".to_string()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ModelError::Config(format!("failed to spawn adapter `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(AdapterProcess {
            child,
            stdin,
            lines: rx,
        })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct ExternalModel {
    command: Vec<String>,
    timeout: Duration,
    process: Option<AdapterProcess>,
}

impl ExternalModel {
    pub fn spawn(command: Vec<String>, timeout: Duration) -> Result<Self, ModelError> {
        let process = AdapterProcess::spawn(&command)?;
        Ok(ExternalModel {
            command,
            timeout,
            process: Some(process),
        })
    }

    fn adapter_error(&mut self, sample: &str, message: String) -> ModelError {
        if let Some(p) = self.process.take() {
            p.kill();
        }
        ModelError::Adapter {
            sample: sample.to_string(),
            message,
        }
    }

    fn exit_description(&mut self) -> String {
        let status = self
            .process
            .as_mut()
            .and_then(|p| p.child.wait().ok())
            .map_or_else(|| "unknown status".to_string(), |s| s.to_string());
        format!("adapter exited mid-request ({status})")
    }
}

impl CodeModel for ExternalModel {
    fn predict(&mut self, program: &Program) -> Result<Prediction, ModelError> {
        let sample = program.source_id.as_str();
        if self.process.is_none() {
            match AdapterProcess::spawn(&self.command) {
                Ok(p) => self.process = Some(p),
                Err(e) => return Err(self.adapter_error(sample, e.to_string())),
            }
        }
        let mut line = serde_json::to_string(&AdapterRequest::for_program(program))
            .expect("request serializes");
        line.push('\n');

        let process = self.process.as_mut().expect("process present");
        let written = process
            .stdin
            .write_all(line.as_bytes())
            .and_then(|()| process.stdin.flush());
        if written.is_err() {
            let msg = self.exit_description();
            return Err(self.adapter_error(sample, msg));
        }

        let received = process.lines.recv_timeout(self.timeout);
        match received {
            Ok(Ok(response)) => parse_response(&response).map_err(|message| ModelError::Protocol {
                sample: sample.to_string(),
                message,
            }),
            Ok(Err(e)) => Err(self.adapter_error(sample, format!("reading adapter output: {e}"))),
            Err(RecvTimeoutError::Disconnected) => {
                let msg = self.exit_description();
                Err(self.adapter_error(sample, msg))
            }
            Err(RecvTimeoutError::Timeout) => Err(self.adapter_error(
                sample,
                format!("no response within {} ms", self.timeout.as_millis()),
            )),
        }
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Some(p) = self.process.take() {
            p.kill();
        }
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::tokens::{tokenize, Language};

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    fn program(id: &str) -> Program {
        tokenize(id, "if (x)", Language::Java).unwrap()
    }

    #[test]
    fn request_shape() {
        let req = AdapterRequest::for_program(&program("s1"));
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":"s1","language":"java","tokens":["if","(","x",")"],"code":"if ( x )"}"#
        );
    }

    #[test]
    fn echo_adapter_round_trips() {
        let script = r#"while read -r line; do echo '{"label":"1","score":0.84}'; done"#;
        let mut m = ExternalModel::spawn(sh(script), Duration::from_secs(5)).unwrap();
        let p = m.predict(&program("s1")).unwrap();
        assert_eq!(
            p,
            Prediction {
                label: "1".into(),
                score: 0.84
            }
        );
        // the process stays alive for further requests
        assert_eq!(m.predict(&program("s1")).unwrap().score, 0.84);
    }

    #[test]
    fn out_of_range_score_is_protocol_error() {
        let script = r#"while read -r line; do echo '{"label":"1","score":1.2}'; done"#;
        let mut m = ExternalModel::spawn(sh(script), Duration::from_secs(5)).unwrap();
        let err = m.predict(&program("s1")).unwrap_err();
        assert!(matches!(err, ModelError::Protocol { .. }), "{err:?}");
        let script = r#"while read -r line; do echo 'not json'; done"#;
        let mut m = ExternalModel::spawn(sh(script), Duration::from_secs(5)).unwrap();
        assert!(matches!(
            m.predict(&program("s1")),
            Err(ModelError::Protocol { .. })
        ));
    }

    #[test]
    fn crash_mid_request_names_the_sample() {
        let mut m =
            ExternalModel::spawn(sh("read -r line; exit 3"), Duration::from_secs(5)).unwrap();
        match m.predict(&program("sample-9")) {
            Err(ModelError::Adapter { sample, message }) => {
                assert_eq!(sample, "sample-9");
                assert!(message.contains("exited"), "{message}");
            }
            other => panic!("expected adapter error, got {other:?}"),
        }
    }

    #[test]
    fn timeout_is_adapter_error_and_respawns() {
        let script = r#"read -r line; sleep 5"#;
        let mut m = ExternalModel::spawn(sh(script), Duration::from_millis(200)).unwrap();
        assert!(matches!(
            m.predict(&program("s")),
            Err(ModelError::Adapter { .. })
        ));
        assert!(m.process.is_none());
        // next query respawns (and times out again)
        assert!(matches!(
            m.predict(&program("s")),
            Err(ModelError::Adapter { .. })
        ));
    }

    #[test]
    fn missing_binary_is_config_error() {
        let err = ExternalModel::spawn(vec!["/nonexistent/adapter".into()], Duration::from_secs(1))
            .err()
            .unwrap();
        assert!(matches!(err, ModelError::Config(_)));
    }
}

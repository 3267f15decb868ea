use std::io::{BufRead, BufReader, Write};
use std::marker::PhantomData;
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{save_ten4, Dims, Tensor4};

use super::{check_input, BlackBoxModel, Label};

pub const DEFAULT_QUERY_TIMEOUT: Duration = Duration::from_secs(30);

/// External classifier speaking a line protocol over stdio.
///
/// Per query the parent writes the tensor to a TEN4 file and sends
/// `<absolute path>\n` on the child's stdin; the child answers `<label>\n` on
/// stdout. One request is in flight at a time.
pub struct SubprocessModel<S> {
    child: Child,
    stdin: Option<ChildStdin>,
    replies: Receiver<std::io::Result<String>>,
    workdir: tempfile::TempDir,
    dims: Dims,
    timeout: Duration,
    queries: u64,
    failed: Option<String>,
    _scalar: PhantomData<S>,
}

impl<S: Scalar> SubprocessModel<S> {
    /// Spawns `command[0]` with the remaining entries as arguments.
    pub fn spawn(command: &[String], dims: Dims, timeout: Duration) -> Result<Self> {
        let Some((program, args)) = command.split_first() else {
            return invalid("subprocess command is empty");
        };
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::ModelUnavailable { reason: format!("spawn {program}: {e}"), queries: 0 })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            replies,
            workdir: tempfile::tempdir()?,
            dims,
            timeout,
            queries: 0,
            failed: None,
            _scalar: PhantomData,
        })
    }

    fn unavailable(&mut self, reason: String) -> Error {
        self.failed = Some(reason.clone());
        Error::ModelUnavailable { reason, queries: self.queries }
    }

    fn round_trip(&mut self, path: &Path) -> std::result::Result<Label, String> {
        let stdin = self.stdin.as_mut().ok_or("child stdin closed")?;
        writeln!(stdin, "{}", path.display())
            .and_then(|_| stdin.flush())
            .map_err(|e| format!("write to child: {e}"))?;
        let line = match self.replies.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(format!("read from child: {e}")),
            Err(RecvTimeoutError::Timeout) => return Err(format!("no reply within {:?}", self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.try_wait().ok().flatten();
                return Err(format!("child closed stdout (status {status:?})"));
            }
        };
        line.trim().parse::<u32>().map(Label).map_err(|_| format!("malformed reply {line:?}"))
    }
}

impl<S: Scalar> BlackBoxModel<S> for SubprocessModel<S> {
    fn input_dims(&self) -> Dims {
        self.dims
    }

    fn num_classes(&self) -> Option<usize> {
        None
    }

    fn query_count(&self) -> u64 {
        self.queries
    }

    fn predict(&mut self, x: &Tensor4<S>) -> Result<Label> {
        check_input(self.dims, x.dims())?;
        if let Some(reason) = self.failed.clone() {
            return Err(Error::ModelUnavailable { reason, queries: self.queries });
        }
        let path = self.workdir.path().join(format!("query-{}.ten4", self.queries));
        save_ten4(x, &path)?;
        let reply = self.round_trip(&path);
        let _ = std::fs::remove_file(&path);
        match reply {
            Ok(label) => {
                self.queries += 1;
                Ok(label)
            }
            Err(reason) => Err(self.unavailable(reason)),
        }
    }
}

impl<S> Drop for SubprocessModel<S> {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

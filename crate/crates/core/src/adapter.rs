//! Line-delimited JSON over a child process's stdin/stdout.
//!
//! Used to reach heavy backends (neural OpenIE systems, transformer
//! encoders) without linking them. One request object per line in, one
//! response object per line out, strictly in order.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;

struct Pipes {
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
    line: String,
}

pub struct JsonLineProcess {
    command: String,
    child: Mutex<Child>,
    // Single-request capacity: concurrent callers are serialized here.
    pipes: Mutex<Pipes>,
}

impl JsonLineProcess {
    /// Spawns `command` through `sh -c`.
    pub fn spawn(command: &str) -> std::io::Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(Self {
            command: command.to_owned(),
            child: Mutex::new(child),
            pipes: Mutex::new(Pipes {
                stdin: Some(BufWriter::new(stdin)),
                stdout: BufReader::new(stdout),
                line: String::new(),
            }),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Sends one request and blocks for its response line.
    pub fn request<Q: Serialize, R: DeserializeOwned>(&self, req: &Q) -> Result<R, String> {
        let mut pipes = self.pipes.lock().map_err(|_| "adapter lock poisoned".to_owned())?;
        let Pipes { stdin, stdout, line } = &mut *pipes;
        let stdin = stdin.as_mut().ok_or("adapter input already closed")?;

        let payload = serde_json::to_string(req).map_err(|e| e.to_string())?;
        stdin
            .write_all(payload.as_bytes())
            .and_then(|_| stdin.write_all(b"\n"))
            .and_then(|_| stdin.flush())
            .map_err(|e| format!("writing to adapter `{}`: {e}", self.command))?;

        line.clear();
        let n = stdout
            .read_line(line)
            .map_err(|e| format!("reading from adapter `{}`: {e}", self.command))?;
        if n == 0 {
            return Err(format!("adapter `{}` closed its output", self.command));
        }
        serde_json::from_str(line.trim_end()).map_err(|e| format!("bad adapter response: {e}"))
    }
}

impl Drop for JsonLineProcess {
    fn drop(&mut self) {
        if let Ok(mut pipes) = self.pipes.lock() {
            pipes.stdin.take();
        }
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

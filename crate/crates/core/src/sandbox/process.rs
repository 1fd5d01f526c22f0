//! Subprocess launch with a wall-clock timeout, a CPU rlimit, and
//! process-group kill.

use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use log::warn;

const POLL_INTERVAL: Duration = Duration::from_millis(5);
const STDERR_TAIL_BYTES: u64 = 4096;

#[derive(Debug, Clone)]
pub struct ProcessSpec<'a> {
    pub shell_command: &'a str,
    pub cwd: &'a Path,
    pub env: Vec<(String, String)>,
    pub timeout: Duration,
    pub cpu_limit_seconds: Option<u64>,
    pub no_network: bool,
    /// Where stdout and stderr are captured.
    pub log_dir: &'a Path,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessOutcome {
    /// Exit code, or `128 + signal` when killed by a signal.
    pub exit_status: i32,
    pub timed_out: bool,
    pub wall_time: Duration,
    pub stderr_tail: String,
    pub stdout_path: PathBuf,
}

fn unshare_available() -> bool {
    static AVAILABLE: OnceLock<bool> = OnceLock::new();
    *AVAILABLE.get_or_init(|| {
        let ok = Command::new("unshare")
            .args(["-rn", "true"])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map(|s| s.success())
            .unwrap_or(false);
        if !ok {
            warn!("`unshare -rn` is unavailable here; --no-network has no effect");
        }
        ok
    })
}

fn tail(path: &Path) -> String {
    let Ok(mut f) = File::open(path) else {
        return String::new();
    };
    let len = f.metadata().map(|m| m.len()).unwrap_or(0);
    let _ = f.seek(SeekFrom::Start(len.saturating_sub(STDERR_TAIL_BYTES)));
    let mut buf = Vec::new();
    let _ = f.read_to_end(&mut buf);
    String::from_utf8_lossy(&buf).into_owned()
}

/// Runs `sh -c <command>` in its own process group and waits for it, killing
/// the whole group once `timeout` elapses.
pub fn run(spec: &ProcessSpec<'_>) -> std::io::Result<ProcessOutcome> {
    let stdout_path = spec.log_dir.join("stdout.log");
    let stderr_path = spec.log_dir.join("stderr.log");
    let mut cmd = if spec.no_network && unshare_available() {
        let mut c = Command::new("unshare");
        c.args(["-rn", "sh", "-c", spec.shell_command]);
        c
    } else {
        let mut c = Command::new("sh");
        c.args(["-c", spec.shell_command]);
        c
    };
    cmd.current_dir(spec.cwd)
        .envs(spec.env.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .stdin(Stdio::null())
        .stdout(File::create(&stdout_path)?)
        .stderr(File::create(&stderr_path)?)
        .process_group(0);
    if let Some(secs) = spec.cpu_limit_seconds {
        // SAFETY: setrlimit is async-signal-safe and touches no parent state.
        unsafe {
            cmd.pre_exec(move || {
                let lim = libc::rlimit {
                    rlim_cur: secs as libc::rlim_t,
                    rlim_max: secs as libc::rlim_t,
                };
                if libc::setrlimit(libc::RLIMIT_CPU, &lim) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                Ok(())
            });
        }
    }

    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pgid = child.id() as libc::pid_t;
    let mut timed_out = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if start.elapsed() >= spec.timeout {
            timed_out = true;
            // SAFETY: signalling our own child's process group.
            unsafe {
                libc::kill(-pgid, libc::SIGKILL);
            }
            break child.wait()?;
        }
        std::thread::sleep(POLL_INTERVAL);
    };
    let wall_time = start.elapsed();
    // Grandchildren may outlive a shell that exited normally.
    // SAFETY: as above; ESRCH is expected and ignored.
    unsafe {
        libc::kill(-pgid, libc::SIGKILL);
    }
    let exit_status = status
        .code()
        .unwrap_or_else(|| 128 + status.signal().unwrap_or(0));
    Ok(ProcessOutcome {
        exit_status,
        timed_out,
        wall_time,
        stderr_tail: tail(&stderr_path),
        stdout_path,
    })
}

// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{classify_output, EcError, EcOutcome, ToolProfile, TraceHints};
use crate::limit::Semaphore;
use crate::model::TimingRequirement;

const PLACEHOLDERS: [&str; 5] = ["{harness}", "{bundle}", "{rtl_list}", "{top_module}", "{bound}"];

/// Checker inputs, relative to `workdir`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttemptFiles {
    pub workdir: PathBuf,
    pub harness: PathBuf,
    pub bundle: PathBuf,
    /// Dependencies first, module under test last.
    pub rtl: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandPlan {
    pub argv: Vec<String>,
    pub inputs: AttemptFiles,
    /// Unwinding / cycle bound, at least 1.
    pub bound: u32,
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// `None` when the process was killed by a signal.
    pub exit_code: Option<i32>,
    /// Interleaved stdout and stderr.
    pub output: String,
    pub elapsed: f64,
    pub timed_out: bool,
    pub timeout_secs: f64,
    pub bound: u32,
}

/// Renders `template` for one check. Sequential tasks use their timeframe
/// as the bound; combinational ones use `default_bound`.
pub fn compose_invocation(
    top_module: &str,
    timing: TimingRequirement,
    files: &AttemptFiles,
    template: &[String],
    default_bound: u32,
    timeout_secs: f64,
) -> Result<CommandPlan, EcError> {
    if template.is_empty() {
        return Err(EcError::EmptyTemplate);
    }
    for p in PLACEHOLDERS {
        if !template.iter().any(|a| a.contains(p)) {
            return Err(EcError::MissingPlaceholder(p));
        }
    }
    for f in std::iter::once(&files.harness).chain([&files.bundle]).chain(&files.rtl) {
        let full = files.workdir.join(f);
        if !full.is_file() {
            return Err(EcError::MissingFile(full));
        }
    }
    let bound = timing.timeframe().unwrap_or(default_bound).max(1);
    let show = |p: &Path| p.to_string_lossy().into_owned();
    let rtl: Vec<String> = files.rtl.iter().map(|p| show(p)).collect();
    let mut argv = Vec::with_capacity(template.len() + rtl.len());
    for arg in template {
        if arg == "{rtl_list}" {
            argv.extend(rtl.iter().cloned());
            continue;
        }
        argv.push(
            arg.replace("{harness}", &show(&files.harness))
                .replace("{bundle}", &show(&files.bundle))
                .replace("{rtl_list}", &rtl.join(" "))
                .replace("{top_module}", top_module)
                .replace("{bound}", &bound.to_string()),
        );
    }
    Ok(CommandPlan { argv, inputs: files.clone(), bound, timeout_secs })
}

/// Runs the plan in its working directory. Output goes to `log` and is
/// returned in full; on timeout the whole process group is killed.
pub fn run_check(plan: &CommandPlan, log: &Path) -> Result<RunOutput, EcError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| EcError::Io { path, source }
    };
    let out = fs::File::create(log).map_err(io(log))?;
    let err = out.try_clone().map_err(io(log))?;
    let started = Instant::now();
    let mut child = match Command::new(&plan.argv[0])
        .args(&plan.argv[1..])
        .current_dir(&plan.inputs.workdir)
        .stdin(Stdio::null())
        .stdout(out)
        .stderr(err)
        .process_group(0)
        .spawn()
    {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(EcError::ToolMissing(plan.argv[0].clone())),
        Err(e) => return Err(EcError::Io { path: PathBuf::from(&plan.argv[0]), source: e }),
    };
    let limit = Duration::from_secs_f64(plan.timeout_secs.max(0.0));
    let mut timed_out = false;
    let status = loop {
        if let Some(status) = child.try_wait().map_err(io(log))? {
            break status;
        }
        if started.elapsed() >= limit {
            timed_out = true;
            // SAFETY: kill(2) on our own child's process group.
            unsafe {
                libc::kill(-(child.id() as i32), libc::SIGKILL);
            }
            break child.wait().map_err(io(log))?;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let elapsed = started.elapsed().as_secs_f64();
    let bytes = fs::read(log).map_err(io(log))?;
    Ok(RunOutput {
        exit_code: if timed_out { None } else { status.code() },
        output: String::from_utf8_lossy(&bytes).into_owned(),
        elapsed,
        timed_out,
        timeout_secs: plan.timeout_secs,
        bound: plan.bound,
    })
}

/// Everything one check needs, as text.
#[derive(Debug, Clone)]
pub struct EcJob<'a> {
    pub design: &'a str,
    pub task: &'a str,
    pub timing: TimingRequirement,
    pub harness: &'a str,
    /// C closure compiled next to the harness.
    pub reference: &'a str,
    /// (module name, RTL text): dependencies first, module under test last.
    pub rtl: Vec<(&'a str, &'a str)>,
}

/// Configured checker with bounded parallelism and a call counter.
#[derive(Clone)]
pub struct EcRunner {
    profile: Arc<ToolProfile>,
    command: Vec<String>,
    default_bound: u32,
    timeout_secs: f64,
    slots: Arc<Semaphore>,
    calls: Arc<AtomicU64>,
}

impl EcRunner {
    pub fn new(
        profile: ToolProfile,
        command: Option<Vec<String>>,
        default_bound: u32,
        timeout_secs: f64,
        parallelism: usize,
    ) -> Self {
        let command = command.unwrap_or_else(|| profile.command.clone());
        EcRunner {
            profile: Arc::new(profile),
            command,
            default_bound: default_bound.max(1),
            timeout_secs,
            slots: Arc::new(Semaphore::new(parallelism)),
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn profile(&self) -> &ToolProfile {
        &self.profile
    }

    pub fn timeout_secs(&self) -> f64 {
        self.timeout_secs
    }

    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Materialises `job` under `scratch/<design>/<task>`, runs the checker
    /// there and classifies the result. The scratch directory is removed
    /// afterwards.
    pub fn check(&self, job: &EcJob<'_>, scratch: &Path) -> Result<(EcOutcome, f64), EcError> {
        let dir = scratch.join(job.design).join(job.task);
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| EcError::Io { path, source }
        };
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io(&dir))?;
        }
        fs::create_dir_all(dir.join("rtl")).map_err(io(&dir))?;
        let write = |rel: &Path, text: &str| {
            let p = dir.join(rel);
            fs::write(&p, text).map_err(io(&p))
        };
        let files = AttemptFiles {
            workdir: dir.clone(),
            harness: PathBuf::from("harness.c"),
            bundle: PathBuf::from("reference.c"),
            rtl: job.rtl.iter().map(|(n, _)| PathBuf::from("rtl").join(format!("{n}.v"))).collect(),
        };
        write(&files.harness, job.harness)?;
        write(&files.bundle, job.reference)?;
        for ((_, text), rel) in job.rtl.iter().zip(&files.rtl) {
            write(rel, text)?;
        }
        let plan =
            compose_invocation(job.task, job.timing, &files, &self.command, self.default_bound, self.timeout_secs)?;
        let result = {
            let _slot = self.slots.acquire();
            self.calls.fetch_add(1, Ordering::SeqCst);
            run_check(&plan, &dir.join("ec.log"))
        };
        let _ = fs::remove_dir_all(&dir);
        let run = result?;
        let hints = TraceHints::from_harness(job.harness, job.task);
        Ok((classify_output(&run, &self.profile, &hints), run.elapsed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn files(dir: &Path) -> AttemptFiles {
        fs::create_dir_all(dir.join("rtl")).unwrap();
        for f in ["h.c", "b.c", "rtl/leaf.v", "rtl/top.v"] {
            fs::write(dir.join(f), "").unwrap();
        }
        AttemptFiles {
            workdir: dir.to_path_buf(),
            harness: "h.c".into(),
            bundle: "b.c".into(),
            rtl: vec!["rtl/leaf.v".into(), "rtl/top.v".into()],
        }
    }

    fn template() -> Vec<String> {
        ToolProfile::builtin("hw-cbmc").unwrap().command
    }

    #[test]
    fn combinational_default_bound() {
        let dir = tempfile::tempdir().unwrap();
        let plan =
            compose_invocation("top", TimingRequirement::Combinational, &files(dir.path()), &template(), 1, 600.0)
                .unwrap();
        assert_eq!(plan.argv, ["hw-cbmc", "h.c", "b.c", "rtl/leaf.v", "rtl/top.v", "--module", "top", "--bound", "1"]);
    }

    #[test]
    fn sequential_bound_is_timeframe() {
        let dir = tempfile::tempdir().unwrap();
        let t = TimingRequirement::sequential(3).unwrap();
        let plan = compose_invocation("top", t, &files(dir.path()), &template(), 1, 600.0).unwrap();
        assert_eq!(plan.bound, 3);
        assert_eq!(plan.argv.last().unwrap(), "3");
    }

    #[test]
    fn template_errors() {
        let dir = tempfile::tempdir().unwrap();
        let f = files(dir.path());
        let no_list: Vec<String> = template().into_iter().filter(|a| a != "{rtl_list}").collect();
        assert!(matches!(
            compose_invocation("top", TimingRequirement::Combinational, &f, &no_list, 1, 1.0),
            Err(EcError::MissingPlaceholder("{rtl_list}"))
        ));
        let mut missing = f.clone();
        missing.rtl.push("rtl/ghost.v".into());
        assert!(matches!(
            compose_invocation("top", TimingRequirement::Combinational, &missing, &template(), 1, 1.0),
            Err(EcError::MissingFile(_))
        ));
    }
}

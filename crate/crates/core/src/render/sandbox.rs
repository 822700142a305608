use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::program::PlotProgram;
use crate::error::RenderError;

const BOOTSTRAP: &str = include_str!("bootstrap.py");
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
const STDERR_TAIL: usize = 4000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageArtifact {
    pub path: PathBuf,
    pub width_px: u32,
    pub height_px: u32,
    pub dpi: u32,
    pub figure_id: String,
}

/// What a render left behind besides the image.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderProvenance {
    pub exit_status: String,
    pub stderr: String,
}

/// Runs plotting programs in a throwaway working directory, under an audit
/// hook that denies network access, subprocesses and reads of protected roots.
#[derive(Debug, Clone)]
pub struct Sandbox {
    python: PathBuf,
    timeout: Duration,
    deny_read: Vec<PathBuf>,
    cache_dir: PathBuf,
}

impl Default for Sandbox {
    fn default() -> Self {
        Self::new()
    }
}

impl Sandbox {
    pub fn new() -> Self {
        let python = std::env::var_os("CHARTFORGE_PYTHON").map(PathBuf::from).unwrap_or_else(|| "python3".into());
        Self {
            python,
            timeout: DEFAULT_TIMEOUT,
            deny_read: Vec::new(),
            cache_dir: std::env::temp_dir().join("chartforge-mplcache"),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_python(mut self, python: impl Into<PathBuf>) -> Self {
        self.python = python.into();
        self
    }

    /// Adds a directory the program must not read (typically the dataset store).
    pub fn deny_read(mut self, root: impl AsRef<Path>) -> Self {
        let root = root.as_ref();
        self.deny_read.push(root.canonicalize().unwrap_or_else(|_| root.to_path_buf()));
        self
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Checks that the interpreter starts and has the plotting stack.
    pub fn probe(&self) -> Result<(), RenderError> {
        let out = Command::new(&self.python)
            .args(["-c", "import matplotlib, numpy"])
            .env("MPLCONFIGDIR", &self.cache_dir)
            .stdin(Stdio::null())
            .output()
            .map_err(|e| RenderError::RuntimeUnavailable(format!("{}: {e}", self.python.display())))?;
        if out.status.success() {
            Ok(())
        } else {
            Err(RenderError::RuntimeUnavailable(String::from_utf8_lossy(&out.stderr).trim().to_string()))
        }
    }

    pub fn render(&self, program: &PlotProgram, out_dir: &Path) -> Result<ImageArtifact, RenderError> {
        self.render_with_provenance(program, out_dir).0
    }

    pub fn render_with_provenance(
        &self,
        program: &PlotProgram,
        out_dir: &Path,
    ) -> (Result<ImageArtifact, RenderError>, RenderProvenance) {
        let mut prov = RenderProvenance::default();
        let result = self.run(program, out_dir, &mut prov);
        (result, prov)
    }

    fn run(
        &self,
        program: &PlotProgram,
        out_dir: &Path,
        prov: &mut RenderProvenance,
    ) -> Result<ImageArtifact, RenderError> {
        let run_dir = tempfile::Builder::new().prefix("chartforge-render-").tempdir()?;
        let work = run_dir.path().join("work");
        fs::create_dir(&work)?;
        fs::create_dir_all(&self.cache_dir)?;
        let bootstrap = run_dir.path().join("bootstrap.py");
        let program_path = run_dir.path().join("program.py");
        fs::write(&bootstrap, BOOTSTRAP)?;
        fs::write(&program_path, &program.source)?;
        let stdout = fs::File::create(run_dir.path().join("stdout.txt"))?;
        let stderr_path = run_dir.path().join("stderr.txt");
        let stderr = fs::File::create(&stderr_path)?;

        let mut cmd = Command::new(&self.python);
        cmd.arg("-I")
            .arg(&bootstrap)
            .arg(&program_path)
            .arg(&work)
            .arg(&self.cache_dir)
            .args(&self.deny_read)
            .env_clear()
            .env("HOME", &work)
            .env("MPLCONFIGDIR", &self.cache_dir)
            .env("MPLBACKEND", "Agg")
            .env("PYTHONHASHSEED", "0")
            .env("SOURCE_DATE_EPOCH", "0")
            .current_dir(&work)
            .stdin(Stdio::null())
            .stdout(stdout)
            .stderr(stderr);
        if let Some(path) = std::env::var_os("PATH") {
            cmd.env("PATH", path);
        }
        let mut child =
            cmd.spawn().map_err(|e| RenderError::RuntimeUnavailable(format!("{}: {e}", self.python.display())))?;
        let status = match child.wait_timeout(self.timeout)? {
            Some(s) => s,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                prov.exit_status = "timeout".into();
                return Err(RenderError::Timeout { seconds: self.timeout.as_secs() });
            }
        };
        prov.exit_status = status.code().map(|c| c.to_string()).unwrap_or_else(|| "signal".into());
        prov.stderr = tail(&fs::read_to_string(&stderr_path).unwrap_or_default());
        if !status.success() {
            return Err(RenderError::ProgramFailed { status: prov.exit_status.clone(), stderr: prov.stderr.clone() });
        }

        let images: Vec<PathBuf> = walk_files(&work)?.into_iter().filter(|p| is_image(p)).collect();
        let produced = match images.len() {
            0 => return Err(RenderError::NoOutput),
            1 => &images[0],
            n => return Err(RenderError::AmbiguousOutput(n)),
        };
        let decoded = image::open(produced).map_err(|e| RenderError::BadImage(e.to_string()))?;
        fs::create_dir_all(out_dir)?;
        let dest = out_dir.join(format!("{}.png", program.figure_id));
        if produced.extension().and_then(|e| e.to_str()) == Some("png") {
            fs::copy(produced, &dest)?;
        } else {
            decoded.save(&dest).map_err(|e| RenderError::BadImage(e.to_string()))?;
        }
        let dpi = super::program::read_geometry(&program.source).map(|(_, d)| d).unwrap_or(100);
        Ok(ImageArtifact {
            path: dest,
            width_px: decoded.width(),
            height_px: decoded.height(),
            dpi,
            figure_id: program.figure_id.clone(),
        })
    }
}

fn tail(s: &str) -> String {
    if s.len() <= STDERR_TAIL {
        return s.to_string();
    }
    let mut start = s.len() - STDERR_TAIL;
    while !s.is_char_boundary(start) {
        start += 1;
    }
    s[start..].to_string()
}

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

fn walk_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if entry.file_type()?.is_dir() {
            out.extend(walk_files(&path)?);
        } else {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
